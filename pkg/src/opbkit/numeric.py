"""Concrete orthogonal product bases behind the symbolic grids.

An assignment gives every class of a pattern matrix a unit vector in C^2;
the perpendicular class gets the unique orthogonal line.  Instantiating a
valid matrix with an assignment in general position (no two classes of a
column equal or orthogonal) always yields an orthogonal product basis, and
most structural statements about the grid can be cross-checked on the
numbers: reducibility, switching, the frame structure of a slot.

Vectors live in plain numpy arrays.  A NumericOPB may carry parties of any
local dimension so that bases beyond qubit grids (used as counterexamples)
can be expressed, but the operations that talk back to pattern matrices
insist on all-qubit inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Entry, OpbError, PatternMatrix, require_valid
from .canonical import canonical_key

GRAM_TOL = 1e-9
PROJECTOR_TOL = 1e-8
UNITARITY_TOL = 1e-10
LINE_MATCH_TOL = 1e-8
GENERICITY_BAND = 1e-10
SAMPLER_MARGIN = 1e-5
ASSOCIATE_GENERIC_BAND = 1e-6
FRAME_TOL = 1e-8


class GenericityError(OpbError):
    """An assignment is too close to a degenerate configuration."""


class AmbiguityError(OpbError):
    """Numbers fall between 'clearly equal' and 'clearly distinct'."""


def perp(v: np.ndarray) -> np.ndarray:
    """The unique line orthogonal to a qubit line."""
    if v.shape != (2,):
        raise ValueError("perp is defined for qubit vectors only")
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def _overlap(u: np.ndarray, v: np.ndarray) -> float:
    """|<u|v>|^2 for unit vectors: 1 same line, 0 orthogonal."""
    return float(abs(np.vdot(u, v)) ** 2)


@dataclass
class Assignment:
    """One unit vector per class, per column, for a fixed matrix shape."""

    vectors: tuple[tuple[np.ndarray, ...], ...]

    def vector(self, col: int, entry) -> np.ndarray:
        v = self.vectors[col][entry.cls]
        return perp(v) if entry.perp else v

    def validate(self, m: PatternMatrix, band: float = GENERICITY_BAND) -> None:
        """Shape match, unit norms, and general position: distinct classes
        of a column stay `band` away from equal or orthogonal lines."""
        if len(self.vectors) != m.n:
            raise GenericityError("assignment has wrong column count")
        for c in range(m.n):
            if len(self.vectors[c]) != m.num_classes[c]:
                raise GenericityError(f"column {c + 1}: wrong class count")
            for v in self.vectors[c]:
                if v.shape != (2,) or abs(np.linalg.norm(v) - 1.0) > band:
                    raise GenericityError(f"column {c + 1}: non-unit vector")
            for a in range(m.num_classes[c]):
                for b in range(a + 1, m.num_classes[c]):
                    o = _overlap(self.vectors[c][a], self.vectors[c][b])
                    if o < band or o > 1.0 - band:
                        raise GenericityError(
                            f"column {c + 1}: classes {a} and {b} are within "
                            f"{band} of an equal or orthogonal pair"
                        )


def sample_assignment(
    m: PatternMatrix, seed: int = 0, margin: float = SAMPLER_MARGIN
) -> Assignment:
    """Random general-position assignment; redraws any vector landing
    within `margin` of equality or orthogonality with an earlier class of
    its column."""
    rng = np.random.default_rng(seed)
    cols = []
    for c in range(m.n):
        chosen: list[np.ndarray] = []
        for _ in range(m.num_classes[c]):
            for _attempt in range(1000):
                raw = rng.standard_normal(4)
                v = np.array([raw[0] + 1j * raw[1], raw[2] + 1j * raw[3]])
                norm = np.linalg.norm(v)
                if norm < 1e-6:
                    continue
                v = v / norm
                if all(
                    margin <= _overlap(v, w) <= 1.0 - margin for w in chosen
                ):
                    chosen.append(v)
                    break
            else:
                raise GenericityError(
                    f"could not sample a general-position vector in column "
                    f"{c + 1} after 1000 tries"
                )
        cols.append(tuple(chosen))
    return Assignment(tuple(cols))


@dataclass
class NumericOPB:
    """Rows of product vectors over parties of the given local dimensions."""

    dims: tuple[int, ...]
    rows: tuple[tuple[np.ndarray, ...], ...]
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dimension(self) -> int:
        out = 1
        for d in self.dims:
            out *= d
        return out

    def row_vector(self, i: int) -> np.ndarray:
        return reduce(np.kron, self.rows[i])

    def to_json(self) -> str:
        payload = {
            "format": 1,
            "dims": list(self.dims),
            "meta": self.meta,
            "rows": [
                [[[float(z.real), float(z.imag)] for z in v] for v in row]
                for row in self.rows
            ],
        }
        return json.dumps(payload, indent=1) + "\n"

    @staticmethod
    def from_json(text: str) -> "NumericOPB":
        payload = json.loads(text)
        rows = tuple(
            tuple(
                np.array([complex(re, im) for re, im in vec]) for vec in row
            )
            for row in payload["rows"]
        )
        return NumericOPB(tuple(payload["dims"]), rows, payload.get("meta", {}))

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json())

    @staticmethod
    def load(path: Path | str) -> "NumericOPB":
        return NumericOPB.from_json(Path(path).read_text())


def realize(
    m: PatternMatrix, assignment: Assignment, meta: Optional[dict] = None
) -> NumericOPB:
    require_valid(m)
    assignment.validate(m)
    rows = tuple(
        tuple(assignment.vector(c, e) for c, e in enumerate(row))
        for row in m.rows
    )
    return NumericOPB((2,) * m.n, rows, dict(meta or {}))


def instantiate(m: PatternMatrix, seed: int = 0) -> NumericOPB:
    assignment = sample_assignment(m, seed)
    return realize(
        m,
        assignment,
        {
            "seed": seed,
            "source_key": canonical_key(m).hex,
            "genericity_band": GENERICITY_BAND,
        },
    )


def gram_defect(b: NumericOPB) -> float:
    """Largest deviation of the Gram matrix from the identity, inner
    products taken as products of the per-party inner products."""
    nrows = len(b.rows)
    worst = 0.0
    for i in range(nrows):
        for j in range(i, nrows):
            g = 1.0 + 0.0j
            for u, v in zip(b.rows[i], b.rows[j]):
                g *= np.vdot(u, v)
            want = 1.0 if i == j else 0.0
            worst = max(worst, float(abs(g - want)))
    return worst


def associate_matrix(b: NumericOPB, tol: float = 1e-8) -> PatternMatrix:
    """Read a pattern matrix off concrete numbers: per column, two rows
    share a class when their lines are equal (same polarity) or orthogonal
    (opposite polarity) within tol, and are unrelated when their overlap is
    clear of 0 and 1 by at least 1e-6.  Anything in between is refused."""
    if tol >= ASSOCIATE_GENERIC_BAND:
        raise ValueError(
            f"tol must stay below the generic band {ASSOCIATE_GENERIC_BAND}"
        )
    if any(d != 2 for d in b.dims):
        raise ValueError("associated matrices are defined for qubit parties")
    nrows = len(b.rows)
    entries: list[list] = [[None] * b.n for _ in range(nrows)]
    for c in range(b.n):
        reps: list[np.ndarray] = []
        for r in range(nrows):
            v = b.rows[r][c]
            v = v / np.linalg.norm(v)
            hit = None
            for cid, w in enumerate(reps):
                o = _overlap(v, w)
                if o >= 1.0 - tol:
                    hit = Entry(cid, False)
                elif o <= tol:
                    hit = Entry(cid, True)
                elif not (
                    ASSOCIATE_GENERIC_BAND <= o <= 1.0 - ASSOCIATE_GENERIC_BAND
                ):
                    raise AmbiguityError(
                        f"column {c + 1}: rows {r + 1} and earlier class "
                        f"{cid} have overlap {o:.3e}, neither related nor "
                        "clearly distinct"
                    )
                if hit is not None:
                    break
            if hit is None:
                reps.append(v)
                hit = Entry(len(reps) - 1, False)
            entries[r][c] = hit
    return PatternMatrix([tuple(row) for row in entries])


def is_reducible_numeric(
    b: NumericOPB, tol: float = 1e-8
) -> Optional[tuple[int, tuple[tuple[int, ...], tuple[int, ...]]]]:
    """First party whose non-orthogonality graph on rows is disconnected,
    with the witnessing bipartition of row indices."""
    nrows = len(b.rows)
    for c in range(b.n):
        parent = list(range(nrows))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i in range(nrows):
            for j in range(i + 1, nrows):
                u, v = b.rows[i][c], b.rows[j][c]
                o = abs(np.vdot(u, v)) ** 2 / (
                    np.vdot(u, u).real * np.vdot(v, v).real
                )
                if o > tol:
                    parent[find(i)] = find(j)
        comps: dict[int, list[int]] = {}
        for r in range(nrows):
            comps.setdefault(find(r), []).append(r)
        if len(comps) > 1:
            groups = sorted(comps.values())
            first = tuple(groups[0])
            rest = tuple(sorted(r for g in groups[1:] for r in g))
            return c, (first, rest)
    return None


def verify_frame_structure(b: NumericOPB, slot: int, tol: float = FRAME_TOL) -> dict:
    """Check the structure every qubit slot of an orthogonal product basis
    must show: its lines pair up into frames (a line and its perpendicular,
    equally often); rows not opposite within one frame have orthogonal
    complements; the two sides of a frame span the same complement
    subspace.  For all-qubit bases the multiplicity bound is checked too:
    row multiplicities summed over parties reach dimension - 1.

    Raises on violation, so feeding a slot of local dimension > 2 shows
    concretely which part of the qubit structure breaks down."""
    nrows = len(b.rows)
    slot_vecs = [
        b.rows[r][slot] / np.linalg.norm(b.rows[r][slot]) for r in range(nrows)
    ]

    # cluster equal lines
    cluster_of = [-1] * nrows
    reps: list[np.ndarray] = []
    for r, v in enumerate(slot_vecs):
        for cid, w in enumerate(reps):
            if _overlap(v, w) >= 1.0 - tol:
                cluster_of[r] = cid
                break
        else:
            reps.append(v)
            cluster_of[r] = len(reps) - 1

    # pair clusters into frames by orthogonality
    partner = [-1] * len(reps)
    for a in range(len(reps)):
        mates = [
            c
            for c in range(len(reps))
            if c != a and _overlap(reps[a], reps[c]) <= tol
        ]
        if len(mates) != 1:
            raise OpbError(
                f"slot {slot + 1}: line {a} has {len(mates)} orthogonal "
                "partner lines, cannot pair into frames"
            )
        partner[a] = mates[0]
    for a in range(len(reps)):
        if partner[partner[a]] != a:
            raise OpbError(f"slot {slot + 1}: line pairing is not symmetric")
        mu_a = cluster_of.count(a)
        mu_p = cluster_of.count(partner[a])
        if mu_a != mu_p:
            raise OpbError(
                f"slot {slot + 1}: frame sides occur {mu_a} and {mu_p} times"
            )

    def complement(r: int) -> np.ndarray:
        parts = [b.rows[r][c] for c in range(b.n) if c != slot]
        if not parts:
            return np.array([1.0 + 0.0j])
        return reduce(np.kron, parts)

    # rows that are not opposite ends of one frame must be orthogonal
    # in the complement already
    worst_pair = 0.0
    for i in range(nrows):
        for j in range(i + 1, nrows):
            ci, cj = cluster_of[i], cluster_of[j]
            if cj == partner[ci]:
                continue
            u, v = complement(i), complement(j)
            o = abs(np.vdot(u, v)) ** 2 / (
                np.vdot(u, u).real * np.vdot(v, v).real
            )
            worst_pair = max(worst_pair, o)
            if o > tol:
                raise OpbError(
                    f"slot {slot + 1}: rows {i + 1} and {j + 1} are not a "
                    f"frame opposition yet their complements overlap ({o:.3e})"
                )

    # both sides of a frame must span the same complement subspace
    worst_span = 0.0
    for a in range(len(reps)):
        if a > partner[a]:
            continue
        side_a = [complement(r) for r in range(nrows) if cluster_of[r] == a]
        side_b = [
            complement(r) for r in range(nrows) if cluster_of[r] == partner[a]
        ]
        pa = _span_projector(side_a)
        pb = _span_projector(side_b)
        defect = float(np.linalg.norm(pa - pb))
        worst_span = max(worst_span, defect)
        if defect > PROJECTOR_TOL:
            raise OpbError(
                f"slot {slot + 1}: frame {a} sides span different subspaces "
                f"(projector distance {defect:.3e})"
            )

    report = {
        "frames": len(reps) // 2,
        "complement_defect": worst_pair,
        "span_defect": worst_span,
    }

    if all(d == 2 for d in b.dims):
        dim = b.dimension
        mus = _line_multiplicities(b, tol)
        for r in range(nrows):
            total = sum(mus[c][r] for c in range(b.n))
            if total < dim - 1:
                raise OpbError(
                    f"row {r + 1}: line multiplicities sum to {total}, "
                    f"below {dim - 1}"
                )
        report["min_multiplicity_sum"] = min(
            sum(mus[c][r] for c in range(b.n)) for r in range(nrows)
        )
    return report


def _line_multiplicities(b: NumericOPB, tol: float) -> list[list[int]]:
    """mus[c][r] = how many rows share row r's line in party c."""
    nrows = len(b.rows)
    out = []
    for c in range(b.n):
        vecs = [b.rows[r][c] / np.linalg.norm(b.rows[r][c]) for r in range(nrows)]
        col = []
        for r in range(nrows):
            col.append(
                sum(1 for s in range(nrows) if _overlap(vecs[r], vecs[s]) >= 1.0 - tol)
            )
        out.append(col)
    return out


def _span_projector(vectors: Sequence[np.ndarray]) -> np.ndarray:
    a = np.stack([v / np.linalg.norm(v) for v in vectors], axis=1)
    q, _ = np.linalg.qr(a)
    return q @ q.conj().T


def tensor_opb(a: NumericOPB, b: NumericOPB) -> NumericOPB:
    """Product basis of the joint system: every row of a with every row of
    b, a-major order, parties concatenated."""
    rows = tuple(ra + rb for ra in a.rows for rb in b.rows)
    return NumericOPB(
        a.dims + b.dims, rows, {"tensor_of": [a.meta, b.meta]}
    )


def prepend_qubit(b0: NumericOPB, b1: NumericOPB) -> NumericOPB:
    """A new first qubit: |0> in front of every row of b0 and |1> in front
    of every row of b1.  The two inputs must share party dimensions."""
    if b0.dims != b1.dims:
        raise ValueError("party dimensions differ")
    e0 = np.array([1.0 + 0.0j, 0.0 + 0.0j])
    e1 = np.array([0.0 + 0.0j, 1.0 + 0.0j])
    rows = tuple((e0,) + row for row in b0.rows) + tuple(
        (e1,) + row for row in b1.rows
    )
    return NumericOPB(
        (2,) + b0.dims, rows, {"prepended": [b0.meta, b1.meta]}
    )


def build_switch_unitary(
    m: PatternMatrix, site, perm: Sequence[int], seed: int = 0
) -> tuple[np.ndarray, NumericOPB, NumericOPB]:
    """The unitary realizing a switch on concrete numbers, together with
    instantiations of the matrix before and after.  On the site's rows it
    permutes the block parties; every other basis vector it fixes, because
    such a row is orthogonal to the site's profile outside the block.

    Built as  P (profile projector x block permutation) P* + rest, so it is
    exactly unitary up to rounding.  The after-basis reuses the before
    assignment, transported along the switch, so U maps the before rows
    onto the after rows one to one."""
    from .lattice import _apply_switch_with_origin

    require_valid(m)
    assignment = sample_assignment(m, seed)
    before = realize(m, assignment, {"seed": seed, "stage": "before"})

    switched, origin = _apply_switch_with_origin(m, site, perm)
    transported = Assignment(
        tuple(
            tuple(
                assignment.vectors[origin[(c, k)][0]][origin[(c, k)][1]]
                for k in range(switched.num_classes[c])
            )
            for c in range(switched.n)
        )
    )
    after = realize(switched, transported, {"seed": seed, "stage": "after"})

    n = m.n
    inside = list(site.cols)
    outside = [c for c in range(n) if c not in site.cols]
    k = len(inside)

    # profile projector on the outside parties
    if outside:
        profile = [
            assignment.vector(c, m.rows[site.rows[0]][c]) for c in outside
        ]
        v = reduce(np.kron, profile)
        pi = np.outer(v, v.conj())
    else:
        pi = np.array([[1.0 + 0.0j]])

    # block permutation operator: output slot t carries input slot perm[t]
    perm = tuple(perm)
    sigma = np.zeros((2 ** k, 2 ** k), dtype=complex)
    for col in range(2 ** k):
        bits = [(col >> (k - 1 - t)) & 1 for t in range(k)]
        row = 0
        for t in range(k):
            row = row << 1 | bits[perm[t]]
        sigma[row, col] = 1.0

    eye_out = np.eye(pi.shape[0], dtype=complex)
    eye_in = np.eye(2 ** k, dtype=complex)
    w = np.kron(pi, sigma) + np.kron(eye_out - pi, eye_in)

    # w acts on parties ordered (outside..., inside...); conjugate by the
    # basis permutation back to natural party order
    order = outside + inside
    dim = 2 ** n
    p = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        tgt = 0
        for q in order:
            tgt = tgt << 1 | bits[q]
        p[tgt, idx] = 1.0
    u = p.conj().T @ w @ p
    return u, before, after
