"""Canonical forms and equivalence of pattern matrices.

Two matrices are equivalent when one maps onto the other by permuting rows,
permuting columns, and renaming classes within columns, where a renaming may
swap a class with its perpendicular.  The canonical key is the
lexicographically smallest serialization over that whole group: rows in
order, columns in order, one byte per entry packing (class << 1) | polarity.

Minimising over renamings never needs search.  Reading a fixed row and
column order left to right, the smallest relabeling is forced: each class
receives the next unused label at its first occurrence, with polarity bit 0
there and later bits relative to that first sighting.  What remains is a
minimisation over row orders for each of the n! column orders, done as a
breadth-first scan that grows all row sequences one row at a time, keeps
exactly the states achieving the smallest next byte row, and merges states
that agree on used rows and label tables.  Every surviving full sequence
spells the same byte string, which is the key.

brute_force_equivalent answers the same question by raw backtracking over
row bijections with class-correspondence propagation and never looks at
keys, so the two routes check each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .core import OpbError, PatternMatrix, require_valid, signature


class BudgetExceededError(OpbError):
    """The exhaustive route ran out of its node budget; no verdict."""


@dataclass(frozen=True, order=True)
class CanonicalKey:
    data: bytes
    n: int = field(compare=False)

    @property
    def hex(self) -> str:
        return self.data.hex()

    @staticmethod
    def from_hex(text: str) -> "CanonicalKey":
        data = bytes.fromhex(text)
        for n in range(1, 7):
            if n * 2 ** n == len(data):
                return CanonicalKey(data, n)
        raise ValueError(f"key length {len(data)} matches no n in 1..6")

    def __str__(self) -> str:
        return self.hex


def _search(
    m: PatternMatrix, sigmas, max_ties: int = 0
) -> tuple[bytes, list[tuple[tuple, tuple[int, ...]]]]:
    """Smallest serialization over the given column orders and all row
    orders, relabelings forced first-occurrence.  Returns the byte string
    plus the witnesses (column order, row sequence) that spell it: always at
    least one, up to max_ties + 1 when the caller wants extra witnesses for
    automorphism harvesting.

    Grows all row sequences one row at a time and keeps exactly the states
    achieving the smallest next byte row.  Candidate rows are compared byte
    by byte against the running minimum so losing rows cost almost nothing;
    states agreeing on used rows and label tables are merged, since their
    continuations coincide.  Label tables live in one flat tuple, entry
    (label << 1 | first polarity) + 1 with 0 for unseen, so a byte is one
    index plus one xor.  A state whose tables are complete stops branching
    altogether: no fresh label can appear, every remaining row's bytes are
    frozen, and its best continuation is simply those rows sorted.  Such
    states retire into a best-tail candidate that the surviving frontier
    must keep beating byte for byte."""
    nrows = len(m.rows)
    n = m.n
    full = m.num_classes
    off = []
    tot = 0
    for k in full:
        off.append(tot)
        tot += k
    # grid[r][c] = (flat table index of the class, polarity bit)
    grid = [
        tuple((off[c] + e[0], 1 if e[1] else 0) for c, e in enumerate(row))
        for row in m.rows
    ]
    blank = (0,) * tot
    zeros = (0,) * n
    # state: (sigma, used row bitmask, flat label tables, per-column counts,
    # row sequence)
    states = [(sigma, 0, blank, zeros, ()) for sigma in sigmas]
    pending: Optional[list[int]] = None
    wits: list[tuple[tuple, tuple[int, ...]]] = []
    out = bytearray()
    while len(out) < nrows * n:
        best: Optional[list[int]] = None
        cands: list[tuple[tuple, int]] = []
        for st in states:
            sigma, used, tables, counts, _seq = st
            for r in range(nrows):
                if used >> r & 1:
                    continue
                row = grid[r]
                if best is None:
                    cur = []
                    for c in sigma:
                        fi, pol = row[c]
                        t = tables[fi]
                        cur.append((t - 1) ^ pol if t else counts[c] << 1)
                    best = cur
                    cands = [(st, r)]
                    continue
                verdict = 0  # 0 tied with best so far, -1 strictly smaller
                cur = best
                for i, c in enumerate(sigma):
                    fi, pol = row[c]
                    t = tables[fi]
                    b = (t - 1) ^ pol if t else counts[c] << 1
                    if verdict == 0:
                        if b > best[i]:
                            verdict = 1
                            break
                        if b < best[i]:
                            verdict = -1
                            cur = best[:i]
                            cur.append(b)
                    else:
                        cur.append(b)
                if verdict == 1:
                    continue
                if verdict == -1:
                    best = cur
                    cands = [(st, r)]
                else:
                    cands.append((st, r))
        if pending is not None:
            slice_ = pending[:n]
            if best is None or slice_ < best:
                out.extend(slice_)
                pending = pending[n:]
                states = []
                continue
            if slice_ > best:
                pending = None
                wits = []
            else:
                pending = pending[n:]
        out.extend(best)
        frontier = {}
        for st, r in cands:
            sigma, used, tables, counts, seq = st
            row = grid[r]
            ntab = ncnt = None
            for c in sigma:
                fi, pol = row[c]
                if (tables if ntab is None else ntab)[fi] == 0:
                    if ntab is None:
                        ntab, ncnt = list(tables), list(counts)
                    ntab[fi] = (ncnt[c] << 1 | pol) + 1
                    ncnt[c] += 1
            if ntab is None:
                new_tables, new_counts = tables, counts
            else:
                new_tables, new_counts = tuple(ntab), tuple(ncnt)
            used2 = used | 1 << r
            if new_counts == full:
                rest = []
                for s in range(nrows):
                    if used2 >> s & 1:
                        continue
                    srow = grid[s]
                    bs = []
                    for c in sigma:
                        fi, pol = srow[c]
                        bs.append((new_tables[fi] - 1) ^ pol)
                    rest.append((bs, s))
                rest.sort()
                tail = [b for bs, _ in rest for b in bs]
                if pending is None or tail < pending:
                    pending = tail
                    wits = [(sigma, seq + (r,) + tuple(s for _, s in rest))]
                elif len(wits) <= max_ties and tail == pending:
                    wits.append((sigma, seq + (r,) + tuple(s for _, s in rest)))
                continue
            key = (sigma, used2, new_tables)
            if key not in frontier:
                frontier[key] = (sigma, used2, new_tables, new_counts, seq + (r,))
        states = list(frontier.values())
    assert wits and pending is not None and not pending
    return bytes(out), wits


def _rebuild(m: PatternMatrix, sigma, seq) -> PatternMatrix:
    tables: list[dict[int, tuple[int, bool]]] = [{} for _ in range(m.n)]
    new_rows = []
    for r in seq:
        row = m.rows[r]
        entries = []
        for c in sigma:
            e = row[c]
            if e.cls not in tables[c]:
                tables[c][e.cls] = (len(tables[c]), e.perp)
            label, first = tables[c][e.cls]
            entries.append((label, e.perp ^ first))
        new_rows.append(entries)
    return PatternMatrix(new_rows)


def canonical_form(m: PatternMatrix) -> tuple[CanonicalKey, PatternMatrix]:
    """Key plus a representative matrix that serializes to exactly that key."""
    require_valid(m)
    return _canonical_form_unchecked(m)


def _canonical_form_unchecked(m: PatternMatrix) -> tuple[CanonicalKey, PatternMatrix]:
    # Validity is the caller's problem.  The enumerator feeds matrices that
    # are valid by construction and cannot afford the pairwise recheck.
    data, wits = _search(m, list(itertools.permutations(range(m.n))))
    sigma, seq = wits[0]
    canon = _rebuild(m, sigma, seq)
    assert _identity_serialization(canon) == data
    return CanonicalKey(data, m.n), canon


def canonical_key(m: PatternMatrix) -> CanonicalKey:
    return canonical_form(m)[0]


def fixed_order_key(m: PatternMatrix) -> CanonicalKey:
    """Like the canonical key but with columns pinned in place: invariant
    under row order and renamings only."""
    require_valid(m)
    data, _ = _search(m, [tuple(range(m.n))])
    return CanonicalKey(data, m.n)


def _canonical_form_with_autos(
    m: PatternMatrix, max_ties: int = 8
) -> tuple[CanonicalKey, PatternMatrix, list[tuple[tuple[int, ...], tuple[int, ...]]]]:
    """_canonical_form_unchecked plus automorphisms of the returned
    representative, harvested from tied minimal witnesses: two witnesses
    w1, w2 spelling the same key put the same source row q1[i] (column
    s1[j]) at two representative positions, so i -> pos2[q1[i]] with
    j -> pos of s1[j] in s2 maps the representative onto itself up to
    renaming.  Returns (row map, column map) pairs, identity excluded; the
    list is a generating sample, not the whole group."""
    data, wits = _search(m, list(itertools.permutations(range(m.n))), max_ties)
    sigma1, seq1 = wits[0]
    canon = _rebuild(m, sigma1, seq1)
    assert _identity_serialization(canon) == data
    autos = []
    nrows = len(m.rows)
    for sigma2, seq2 in wits[1:]:
        pos2 = [0] * nrows
        for i, r in enumerate(seq2):
            pos2[r] = i
        rho = tuple(pos2[q] for q in seq1)
        inv2 = [0] * m.n
        for j, c in enumerate(sigma2):
            inv2[c] = j
        pi = tuple(inv2[c] for c in sigma1)
        if rho == tuple(range(nrows)) and pi == tuple(range(m.n)):
            continue
        assert _is_renaming_image(canon, rho, pi)
        autos.append((rho, pi))
    return CanonicalKey(data, m.n), canon, autos


def _is_renaming_image(m: PatternMatrix, rho, pi) -> bool:
    """Whether row map rho with column map pi carries m onto itself up to a
    per-column class renaming (polarity flips allowed)."""
    maps: list[dict[int, tuple[int, bool]]] = [{} for _ in range(m.n)]
    for r, row in enumerate(m.rows):
        img = m.rows[rho[r]]
        for c in range(m.n):
            e, f = row[c], img[pi[c]]
            got = maps[c].setdefault(e.cls, (f.cls, e.perp ^ f.perp))
            if got != (f.cls, e.perp ^ f.perp):
                return False
    for c in range(m.n):
        vals = {cls for cls, _ in maps[c].values()}
        if len(vals) != len(maps[c]):
            return False
    return True


def _identity_serialization(m: PatternMatrix) -> bytes:
    return bytes(e.cls << 1 | e.perp for row in m.rows for e in row)


def are_equivalent(a: PatternMatrix, b: PatternMatrix) -> bool:
    if a.n != b.n:
        return False
    if signature(a) != signature(b):
        return False
    return canonical_key(a) == canonical_key(b)


def brute_force_equivalent(
    a: PatternMatrix, b: PatternMatrix, node_budget: int = 2_000_000
) -> bool:
    """Equivalence by direct search over row bijections, one column order at
    a time, propagating the class correspondence each placement implies.
    Shares nothing with the canonical key machinery.  Exceeding the node
    budget raises instead of guessing."""
    require_valid(a)
    require_valid(b)
    if a.n > 3 or b.n > 3:
        raise ValueError("exhaustive route is only supported for n <= 3")
    if a.n != b.n or len(a.rows) != len(b.rows):
        return False
    nrows = len(a.rows)
    budget = [node_budget]

    def try_order(bcols: tuple[int, ...]) -> bool:
        brows = [tuple(b.rows[r][c] for c in bcols) for r in range(nrows)]
        # cmap[c]: class of a -> (class of b, polarity flip); imap[c]: inverse
        cmap: list[dict[int, tuple[int, bool]]] = [{} for _ in range(a.n)]
        imap: list[dict[int, int]] = [{} for _ in range(a.n)]
        used = [False] * nrows

        def place(i: int) -> bool:
            if i == nrows:
                return True
            arow = a.rows[i]
            for j in range(nrows):
                if used[j]:
                    continue
                budget[0] -= 1
                if budget[0] < 0:
                    raise BudgetExceededError(
                        f"node budget {node_budget} exhausted"
                    )
                added = []
                ok = True
                for c in range(a.n):
                    ea, eb = arow[c], brows[j][c]
                    got = cmap[c].get(ea.cls)
                    if got is not None:
                        if got != (eb.cls, ea.perp ^ eb.perp):
                            ok = False
                            break
                    else:
                        if eb.cls in imap[c]:
                            ok = False
                            break
                        cmap[c][ea.cls] = (eb.cls, ea.perp ^ eb.perp)
                        imap[c][eb.cls] = ea.cls
                        added.append((c, ea.cls, eb.cls))
                if ok:
                    used[j] = True
                    if place(i + 1):
                        return True
                    used[j] = False
                for c, acls, bcls in added:
                    del cmap[c][acls]
                    del imap[c][bcls]
            return False

        return place(0)

    return any(try_order(p) for p in itertools.permutations(range(b.n)))
