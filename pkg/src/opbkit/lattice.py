"""The identification order on classes, maximality, switching, enumeration.

Identifying two classes of one column (matching or crossed polarity) turns a
valid matrix into a valid matrix with one variable fewer; it is the downward
step of a partial order whose unique minimum is the one-class-per-column
matrix.  Splits are the inverse step.  Whether a class of column c can be
split is read off a dependency graph on its occurrence rows, with an edge
where c is the only column witnessing a pair's orthogonality: the split
groups are exactly the unions of connected components, so a matrix is
maximal precisely when every such graph is connected.

A switch acts on a site: a set J of k >= 2 columns together with 2^k rows
that agree everywhere outside J.  Those rows restricted to J form a valid
k-column block of their own, and rearranging the block's columns (classes
move to fresh names in their new column) yields another valid matrix with
the same variable count.  Orbits under all such moves partition the maximal
classes.

enumerate_classes walks upward from the minimum through all splits, one
variable-count level at a time, deduplicating by canonical key.  The walk
visits every class because every matrix identifies down to the minimum, so
reversing any such chain reaches it by splits.
"""

from __future__ import annotations

import itertools
import json
import multiprocessing
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

from .canonical import (
    BudgetExceededError,
    CanonicalKey,
    _canonical_form_unchecked,
    _canonical_form_with_autos,
    canonical_form,
    canonical_key,
    fixed_order_key,
)
from .core import (
    Entry,
    OpbError,
    PatternMatrix,
    Signature,
    is_reducible,
    require_valid,
    signature,
    standard_matrix,
)


def identifications(m: PatternMatrix) -> list[PatternMatrix]:
    """All one-step merges: for every column and unordered class pair, the
    second class becomes the first or its perpendicular.  Children are valid
    whenever m is: a merge maps opposite polarities to opposite polarities,
    so no orthogonality witness is lost."""
    out = []
    for c in range(m.n):
        for a in range(m.num_classes[c]):
            for b in range(a + 1, m.num_classes[c]):
                for flip in (False, True):
                    rows = [
                        tuple(
                            Entry(a, e.perp ^ flip)
                            if ci == c and e.cls == b
                            else e
                            for ci, e in enumerate(row)
                        )
                        for row in m.rows
                    ]
                    out.append(PatternMatrix(rows))
    return out


def _sole_witness_pairs(m: PatternMatrix) -> list[dict[int, list[tuple[int, int]]]]:
    """index[c][cls] lists the row pairs whose orthogonality rests on class
    cls of column c alone.  One scan serves every (column, class) query."""
    rows = m.rows
    index: list[dict[int, list[tuple[int, int]]]] = [{} for _ in range(m.n)]
    for r, row_r in enumerate(rows):
        for s in range(r + 1, len(rows)):
            row_s = rows[s]
            wit = -1
            for c in range(m.n):
                er = row_r[c]
                es = row_s[c]
                if er[0] == es[0] and er[1] != es[1]:
                    if wit >= 0:
                        wit = -1
                        break
                    wit = c
            if wit >= 0:
                index[wit].setdefault(row_r[wit][0], []).append((r, s))
    return index


def _split_components(
    m: PatternMatrix, c: int, cls: int, sole=None
) -> list[list[int]]:
    """Connected components of the witness-dependency graph of one class."""
    if sole is None:
        sole = _sole_witness_pairs(m)
    occ = [r for r in range(len(m.rows)) if m.rows[r][c].cls == cls]
    parent = {r: r for r in occ}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for r, s in sole[c].get(cls, ()):
        parent[find(r)] = find(s)
    groups: dict[int, list[int]] = {}
    for r in occ:
        groups.setdefault(find(r), []).append(r)
    return sorted(groups.values())


def _split_descriptors(
    m: PatternMatrix, sole=None
) -> list[tuple[int, int, frozenset[int]]]:
    """Every one-step split as (column, class, moved rows).  The moved set
    is a union of dependency-graph components never containing the class's
    smallest occurrence row, so each unordered bipartition appears once."""
    if sole is None:
        sole = _sole_witness_pairs(m)
    out = []
    for c in range(m.n):
        for cls in range(m.num_classes[c]):
            comps = _split_components(m, c, cls, sole)
            if len(comps) <= 1:
                continue
            for mask in range(1, 2 ** (len(comps) - 1)):
                moved = set()
                for i in range(len(comps) - 1):
                    if mask >> i & 1:
                        moved.update(comps[i + 1])
                out.append((c, cls, frozenset(moved)))
    return out


def _materialize_split(
    m: PatternMatrix, c: int, cls: int, moved: frozenset[int]
) -> PatternMatrix:
    fresh = m.num_classes[c]
    rows = [
        tuple(
            Entry(fresh, e.perp) if ci == c and e.cls == cls and r in moved else e
            for ci, e in enumerate(row)
        )
        for r, row in enumerate(m.rows)
    ]
    return PatternMatrix(rows)


def splits(m: PatternMatrix) -> list[PatternMatrix]:
    """All one-step inverses of identification: a class whose dependency
    graph is disconnected breaks into two, one side keeping the class and
    the other taking a fresh one with the same relative polarities."""
    return [
        _materialize_split(m, c, cls, moved)
        for c, cls, moved in _split_descriptors(m)
    ]


def _quotient_split_orbits(
    m: PatternMatrix,
    descs: list[tuple[int, int, frozenset[int]]],
    autos,
) -> list[tuple[int, int, frozenset[int]]]:
    """One descriptor per orbit under the sampled automorphisms of m.
    An automorphism carries a split to a split with an equivalent result,
    so only orbit representatives are worth canonicalizing; the sample
    being partial merely leaves some redundancy in place."""
    if not autos or len(descs) < 2:
        return descs
    occ: dict[tuple[int, int], frozenset[int]] = {}

    def occurrences(c: int, cls: int) -> frozenset[int]:
        got = occ.get((c, cls))
        if got is None:
            got = frozenset(
                r for r in range(len(m.rows)) if m.rows[r][c].cls == cls
            )
            occ[(c, cls)] = got
        return got

    index = {d: i for i, d in enumerate(descs)}
    parent = list(range(len(descs)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for rho, pi in autos:
        for d, i in index.items():
            c, cls, moved = d
            c2 = pi[c]
            moved2 = frozenset(rho[r] for r in moved)
            cls2 = m.rows[next(iter(moved2))][c2].cls
            full = occurrences(c2, cls2)
            if min(full) in moved2:
                moved2 = full - moved2
            j = index.get((c2, cls2, moved2))
            assert j is not None, "automorphism left the split set"
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
    seen = set()
    keep = []
    for i, d in enumerate(descs):
        root = find(i)
        if root not in seen:
            seen.add(root)
            keep.append(d)
    return keep


def is_maximal(m: PatternMatrix) -> bool:
    """No split anywhere: every dependency graph is connected."""
    require_valid(m)
    sole = _sole_witness_pairs(m)
    for c in range(m.n):
        for cls in range(m.num_classes[c]):
            if len(_split_components(m, c, cls, sole)) > 1:
                return False
    return True


def _norm_mult(m: PatternMatrix, r: int, c: int) -> tuple[int, int]:
    base, perp = m._counts[c][m.rows[r][c].cls]
    return (base, perp) if base <= perp else (perp, base)


def _class_invariant(m: PatternMatrix):
    """Equivalence-invariant fingerprint: per-column multiplicity partitions
    as an unordered multiset, the multiset of per-row profiles, and the
    histogram over row pairs of (witness columns, shared-class agreeing
    columns).  Cheap enough to compute for every generated split."""
    cols = []
    for c in range(m.n):
        pairs = sorted((b, p) if b <= p else (p, b) for b, p in m._counts[c])
        cols.append(tuple(pairs))
    prof = sorted(
        tuple(sorted(_norm_mult(m, r, c) for c in range(m.n)))
        for r in range(len(m.rows))
    )
    hist: dict[tuple[int, int], int] = {}
    rows = m.rows
    for r, row_r in enumerate(rows):
        for s in range(r + 1, len(rows)):
            row_s = rows[s]
            wit = agree = 0
            for c in range(m.n):
                er, es = row_r[c], row_s[c]
                if er[0] == es[0]:
                    if er[1] != es[1]:
                        wit += 1
                    else:
                        agree += 1
            key = (wit, agree)
            hist[key] = hist.get(key, 0) + 1
    return (tuple(sorted(cols)), tuple(prof), tuple(sorted(hist.items())))


def _fast_match(
    a: PatternMatrix, b: PatternMatrix, node_budget: int = 20000
) -> Optional[bool]:
    """Definite equivalence verdict by direct bijection search, or None if
    the node budget runs out.  Exhaustive over column maps compatible with
    per-column multiplicity partitions, then row placements under class
    correspondence propagation; used to recognize regenerated classes
    without paying for a canonical form."""
    n = a.n
    nrows = len(a.rows)
    if n != b.n or nrows != len(b.rows):
        return False
    inva = [
        tuple(sorted((x, y) if x <= y else (y, x) for x, y in a._counts[c]))
        for c in range(n)
    ]
    invb = [
        tuple(sorted((x, y) if x <= y else (y, x) for x, y in b._counts[c]))
        for c in range(n)
    ]
    if sorted(inva) != sorted(invb):
        return False
    budget = [node_budget]

    def try_cols(pi: tuple[int, ...]) -> bool:
        cmap: list[dict[int, tuple[int, bool]]] = [{} for _ in range(n)]
        imap: list[dict[int, int]] = [{} for _ in range(n)]
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
                    raise BudgetExceededError("matcher budget exhausted")
                brow = b.rows[j]
                added = []
                ok = True
                for c in range(n):
                    ea, eb = arow[c], brow[pi[c]]
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

    try:
        for pi in itertools.permutations(range(n)):
            if any(inva[c] != invb[pi[c]] for c in range(n)):
                continue
            if try_cols(pi):
                return True
        return False
    except BudgetExceededError:
        return None


@dataclass(frozen=True)
class SwitchSite:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    block: PatternMatrix


def switching_sites(m: PatternMatrix) -> list[SwitchSite]:
    """All (rows, columns) pairs a switch can act on: for each column set J
    of size >= 2, the groups of rows agreeing outside J that have full size
    2^|J|.  No group can exceed that size in a valid matrix."""
    require_valid(m)
    sites = []
    for k in range(2, m.n + 1):
        for J in itertools.combinations(range(m.n), k):
            outside = [c for c in range(m.n) if c not in J]
            groups: dict[tuple, list[int]] = {}
            for r, row in enumerate(m.rows):
                groups.setdefault(tuple(row[c] for c in outside), []).append(r)
            for rows in groups.values():
                if len(rows) > 2 ** k:
                    raise OpbError(
                        f"{len(rows)} rows agree outside columns {J}; "
                        "matrix cannot be valid"
                    )
                if len(rows) == 2 ** k:
                    block = PatternMatrix(
                        [tuple(m.rows[r][c] for c in J) for r in rows]
                    )
                    sites.append(SwitchSite(tuple(rows), tuple(J), block))
    return sites


def apply_switch(
    m: PatternMatrix, site: SwitchSite, perm: Iterable[int]
) -> PatternMatrix:
    """Rearrange the site's block columns: target position t of the site
    takes the block content of position perm[t].  Moved classes become new
    classes of their new column."""
    return _apply_switch_with_origin(m, site, perm)[0]


def _apply_switch_with_origin(
    m: PatternMatrix, site: SwitchSite, perm: Iterable[int]
) -> tuple[PatternMatrix, dict[tuple[int, int], tuple[int, int]]]:
    """apply_switch plus, for every (column, class) of the result, the
    (column, class) of m whose vector it stands for."""
    perm = tuple(perm)
    k = len(site.cols)
    if sorted(perm) != list(range(k)):
        raise ValueError(f"perm must permute 0..{k - 1}")
    inside = set(site.rows)
    # a switch only makes sense when the block owns its classes outright
    for j in site.cols:
        block_classes = {m.rows[r][j].cls for r in site.rows}
        for r in range(len(m.rows)):
            if r not in inside and m.rows[r][j].cls in block_classes:
                raise OpbError(
                    f"column {j + 1} class is shared between the site and "
                    "other rows; switch is not defined here"
                )

    new_rows = [list(row) for row in m.rows]
    moved_from: dict[int, int] = {}  # target col -> source col
    for t, s in enumerate(perm):
        if s == t:
            continue
        tgt, src = site.cols[t], site.cols[s]
        moved_from[tgt] = src
        off = m.num_classes[tgt]
        for r in site.rows:
            e = m.rows[r][src]
            new_rows[r][tgt] = Entry(off + e.cls, e.perp)

    # replay the constructor's dense renumbering to map final class ids back
    dense: list[dict[int, int]] = [{} for _ in range(m.n)]
    for row in new_rows:
        for c, e in enumerate(row):
            if e.cls not in dense[c]:
                dense[c][e.cls] = len(dense[c])
    origin: dict[tuple[int, int], tuple[int, int]] = {}
    for c in range(m.n):
        for temp, final in dense[c].items():
            if c in moved_from and temp >= m.num_classes[c]:
                origin[(c, final)] = (moved_from[c], temp - m.num_classes[c])
            else:
                origin[(c, final)] = (c, temp)
    return PatternMatrix(new_rows), origin


def switching_orbit(m: PatternMatrix) -> dict[CanonicalKey, PatternMatrix]:
    """Closure of the class of m under all switches, keyed by canonical key
    with canonical representatives as values."""
    if not is_maximal(m):
        raise OpbError("switching orbits are defined for maximal matrices")
    key, canon = canonical_form(m)
    orbit = {key: canon}
    queue = [canon]
    seen_raw: set[CanonicalKey] = set()
    while queue:
        cur = queue.pop()
        for site in switching_sites(cur):
            k = len(site.cols)
            for perm in itertools.permutations(range(k)):
                if perm == tuple(range(k)):
                    continue
                switched = apply_switch(cur, site, perm)
                raw = fixed_order_key(switched)
                if raw in seen_raw:
                    continue
                seen_raw.add(raw)
                nkey, ncanon = canonical_form(switched)
                if nkey not in orbit:
                    orbit[nkey] = ncanon
                    queue.append(ncanon)
    return orbit


def family_membership(
    member: PatternMatrix, host: PatternMatrix, strict: bool = False
) -> bool:
    """Whether member arises from host by identifying classes, columns kept
    in place.  Strict membership means host itself, nothing below it."""
    require_valid(member)
    require_valid(host)
    if member.n != host.n:
        return False
    target = fixed_order_key(member)
    if strict or signature(member).nu == signature(host).nu:
        return target == fixed_order_key(host)
    if signature(member).nu > signature(host).nu:
        return False
    want_nu = signature(member).nu
    frontier = {fixed_order_key(host): host}
    nu = signature(host).nu
    while nu > want_nu:
        nxt: dict[CanonicalKey, PatternMatrix] = {}
        for mat in frontier.values():
            for child in identifications(mat):
                k = fixed_order_key(child)
                if k not in nxt:
                    nxt[k] = child
        frontier = nxt
        nu -= 1
    return target in frontier


@dataclass
class ClassRecord:
    key: CanonicalKey
    matrix: PatternMatrix
    signature: Signature
    maximal: bool
    reducible: bool


class ClassStore:
    """All equivalence classes found for one n, keyed by canonical key.
    truncated means a budget stopped the walk early; order queries refuse
    to run on such a store."""

    MANIFEST = "manifest.json"

    def __init__(self, n: int, provenance: Optional[dict] = None):
        self.n = n
        self.truncated = False
        self.provenance: dict = dict(provenance or {})
        self._records: dict[CanonicalKey, ClassRecord] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: CanonicalKey) -> bool:
        return key in self._records

    def add(self, key: CanonicalKey, matrix: PatternMatrix) -> ClassRecord:
        rec = ClassRecord(
            key,
            matrix,
            signature(matrix),
            is_maximal(matrix),
            is_reducible(matrix) is not None,
        )
        self._records[key] = rec
        return rec

    def get(self, key: CanonicalKey) -> ClassRecord:
        return self._records[key]

    def keys(self) -> list[CanonicalKey]:
        return sorted(self._records)

    def records(self) -> list[ClassRecord]:
        return [self._records[k] for k in self.keys()]

    def maximal_keys(self) -> list[CanonicalKey]:
        return [k for k in self.keys() if self._records[k].maximal]

    def is_maximal(self, key: CanonicalKey) -> bool:
        return self._records[key].maximal

    def save(self, path: Path | str) -> None:
        from . import __version__
        from .opbfile import atomic_write_text, serialize

        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        entries = []
        for rec in self.records():
            fname = rec.key.hex + ".opb"
            atomic_write_text(path / fname, serialize(rec.matrix, name=rec.key.hex))
            entries.append(
                {
                    "key": rec.key.hex,
                    "signature": str(rec.signature),
                    "nu": rec.signature.nu,
                    "maximal": rec.maximal,
                    "reducible": rec.reducible,
                    "file": fname,
                }
            )
        manifest = {
            "format": 1,
            "tool": f"opbkit {__version__}",
            "n": self.n,
            "count": len(entries),
            "truncated": self.truncated,
            "provenance": self.provenance,
            "classes": entries,
        }
        atomic_write_text(path / self.MANIFEST, json.dumps(manifest, indent=2) + "\n")

    @classmethod
    def load(cls, path: Path | str, verify: bool = False) -> "ClassStore":
        from .opbfile import load as load_opb

        path = Path(path)
        manifest = json.loads((path / cls.MANIFEST).read_text())
        store = cls(manifest["n"], manifest.get("provenance"))
        store.truncated = bool(manifest.get("truncated", False))
        for entry in manifest["classes"]:
            key = CanonicalKey.from_hex(entry["key"])
            matrix = load_opb(path / entry["file"]).matrix
            if verify:
                got = canonical_key(matrix)
                if got != key:
                    raise OpbError(
                        f"{entry['file']}: stored key does not match matrix"
                    )
            store.add(key, matrix)
        return store


def _canon_batch(batch: list[tuple]) -> list[tuple[bytes, tuple]]:
    out = []
    for rows in batch:
        key, canon = _canonical_form_unchecked(PatternMatrix(rows))
        out.append((key.data, canon.rows))
    return out


def enumerate_classes(
    n: int,
    node_budget: Optional[int] = None,
    time_budget: Optional[float] = None,
    jobs: int = 1,
    progress: Optional[Callable[[str], None]] = None,
) -> ClassStore:
    """Walk every class of n-column matrices, breadth first by variable
    count, starting at the one-class-per-column minimum and taking all
    splits.  Budgets (split canonicalizations / wall seconds) stop the walk
    early and mark the store truncated rather than returning silently
    incomplete results."""
    t0 = time.monotonic()
    store = ClassStore(n)
    spent = 0

    def over_budget() -> Optional[str]:
        if node_budget is not None and spent >= node_budget:
            return f"node budget {node_budget} reached"
        if time_budget is not None and time.monotonic() - t0 >= time_budget:
            return f"time budget {time_budget}s reached"
        return None

    require_valid(standard_matrix(n))
    key, canon, autos = _canonical_form_with_autos(standard_matrix(n))
    store.add(key, canon)
    frontier = {key: canon}
    # automorphism samples for the current frontier, used to skip splits
    # that are conjugate to one another (parallel workers skip this and
    # simply canonicalize more; the resulting store is the same)
    gens: dict[CanonicalKey, list] = {key: autos}
    pool = None
    if jobs > 1:
        pool = multiprocessing.get_context("fork").Pool(jobs)
    try:
        while frontier:
            parents_raw: list[tuple] = []
            for k in sorted(frontier):
                mat = frontier[k]
                sole = _sole_witness_pairs(mat)
                descs = _split_descriptors(mat, sole)
                descs = _quotient_split_orbits(mat, descs, gens.get(k, ()))
                for c, cls, moved in descs:
                    parents_raw.append(_materialize_split(mat, c, cls, moved).rows)
            if progress:
                progress(
                    f"{len(store)} classes so far, "
                    f"{len(parents_raw)} splits to canonicalize"
                )
            nxt: dict[CanonicalKey, PatternMatrix] = {}
            gens = {}
            reason = None
            if pool is not None and parents_raw:
                chunk = max(1, len(parents_raw) // (jobs * 4))
                batches = [
                    parents_raw[i : i + chunk]
                    for i in range(0, len(parents_raw), chunk)
                ]
                for got in pool.imap(_canon_batch, batches):
                    for data, rows in got:
                        ck = CanonicalKey(data, n)
                        if ck not in store and ck not in nxt:
                            nxt[ck] = PatternMatrix(rows)
                    spent += len(got)
                    reason = over_budget()
                    if reason:
                        break
            else:
                # a parent has one more variable than anything stored, so a
                # duplicate can only repeat a class found at this level:
                # recognize those via the cheap invariant plus the direct
                # matcher and canonicalize only genuinely new matrices
                buckets: dict[tuple, list[PatternMatrix]] = {}
                for rows in parents_raw:
                    pm = PatternMatrix(rows)
                    spent += 1
                    inv = _class_invariant(pm)
                    bucket = buckets.setdefault(inv, [])
                    dup = False
                    sure = True
                    for idx, rep in enumerate(bucket):
                        got = _fast_match(pm, rep, node_budget=2500)
                        if got:
                            dup = True
                            if idx:
                                bucket.insert(0, bucket.pop(idx))
                            break
                        if got is None:
                            sure = False
                            break
                    if not dup:
                        ck, cm, autos = _canonical_form_with_autos(pm)
                        assert not sure or ck not in nxt
                        if ck not in store and ck not in nxt:
                            nxt[ck] = cm
                            gens[ck] = autos
                            bucket.append(cm)
                    reason = over_budget()
                    if reason:
                        break
            for ck in sorted(nxt):
                store.add(ck, nxt[ck])
            if reason:
                store.truncated = True
                store.provenance["truncated_reason"] = reason
                break
            frontier = nxt
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    store.provenance.update(
        {
            "n": n,
            "canonicalizations": spent,
            "wall_seconds": round(time.monotonic() - t0, 3),
            "jobs": jobs,
        }
    )
    return store


def hasse(store: ClassStore) -> set[tuple[CanonicalKey, CanonicalKey]]:
    """Cover edges (lower, upper) of the identification order on the store's
    classes, by one-step reachability then literal transitive reduction."""
    if store.truncated:
        raise OpbError("refusing to build order structure from a truncated store")
    edges: set[tuple[CanonicalKey, CanonicalKey]] = set()
    for rec in store.records():
        for child in identifications(rec.matrix):
            ck = canonical_key(child)
            if ck not in store:
                raise OpbError(
                    "store is missing a class reachable by identification; "
                    "it cannot be a complete enumeration"
                )
            edges.add((ck, rec.key))

    below: dict[CanonicalKey, set[CanonicalKey]] = {}
    for lo, up in edges:
        below.setdefault(up, set()).add(lo)

    desc_cache: dict[CanonicalKey, set[CanonicalKey]] = {}

    def descendants(k: CanonicalKey) -> set[CanonicalKey]:
        if k not in desc_cache:
            out: set[CanonicalKey] = set()
            for lo in below.get(k, ()):
                out.add(lo)
                out |= descendants(lo)
            desc_cache[k] = out
        return desc_cache[k]

    reduced = set()
    for lo, up in edges:
        via = any(
            lo in descendants(mid) for mid in below.get(up, ()) if mid != lo
        )
        if not via:
            reduced.add((lo, up))
    return reduced
