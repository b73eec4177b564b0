"""Symbolic pattern matrices for orthogonal product bases of n qubits.

A pattern matrix is a 2^n x n grid whose entries are vector variables: a
column-scoped class id plus a polarity bit (False = the variable itself,
True = its perpendicular).  The defining axiom is that any two distinct rows
agree in class and differ in polarity in at least one column; from that it
follows that every class occurs equally often with each polarity.

Class ids are dense, per-column, in first-occurrence order, so equal grids
have equal ids regardless of how they were built.  Display names live in a
side table and never affect comparisons.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Optional, Sequence

MAX_QUBITS = 6  # hard cap: 2^6 rows; nothing above carries a correctness promise


class OpbError(Exception):
    pass


class InvalidMatrixError(OpbError):
    """Operation was handed a grid that fails validation."""


class Entry(NamedTuple):
    cls: int
    perp: bool

    def flip(self) -> "Entry":
        return Entry(self.cls, not self.perp)


def _default_name(i: int) -> str:
    letters = string.ascii_lowercase
    if i < len(letters):
        return letters[i]
    return f"v{i}"


class PatternMatrix:
    """Immutable grid of entries.  Permissive about row count so that
    validate() can report shape problems instead of refusing to look."""

    def __init__(
        self,
        rows: Iterable[Sequence[Entry]],
        names: Optional[Sequence[Sequence[str]]] = None,
    ):
        rows = tuple(tuple(Entry(int(e[0]), bool(e[1])) for e in r) for r in rows)
        if not rows:
            raise ValueError("empty grid")
        n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise ValueError("ragged grid")
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"column count {n} outside supported range 1..{MAX_QUBITS}")
        if len(rows) > 2 ** MAX_QUBITS:
            raise ValueError(f"too many rows ({len(rows)})")

        rows = _reindex(rows, n)
        self.n = n
        self.rows = rows
        self.num_classes = tuple(
            1 + max((r[c].cls for r in rows), default=-1) for c in range(n)
        )
        if names is not None:
            names = tuple(tuple(names[c]) for c in range(n))
            if any(len(names[c]) != self.num_classes[c] for c in range(n)):
                raise ValueError("name table does not match class count")
        else:
            names = tuple(
                tuple(_default_name(i) for i in range(k)) for k in self.num_classes
            )
        self.names = names

    def __eq__(self, other) -> bool:
        return isinstance(other, PatternMatrix) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        return f"PatternMatrix(n={self.n}, rows={len(self.rows)})"

    def entry(self, row: int, col: int) -> Entry:
        return self.rows[row][col]

    @cached_property
    def _counts(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        # per column, per class: (occurrences as base, occurrences as perp)
        out = []
        for c in range(self.n):
            base = [0] * self.num_classes[c]
            perp = [0] * self.num_classes[c]
            for r in self.rows:
                e = r[c]
                if e.perp:
                    perp[e.cls] += 1
                else:
                    base[e.cls] += 1
            out.append(tuple(zip(base, perp)))
        return tuple(out)

    def column_name(self, col: int, entry: Entry) -> str:
        name = self.names[col][entry.cls]
        return name + "'" if entry.perp else name

    def with_names(self, names: Sequence[Sequence[str]]) -> "PatternMatrix":
        return PatternMatrix(self.rows, names)


def _reindex(
    rows: tuple[tuple[Entry, ...], ...], n: int
) -> tuple[tuple[Entry, ...], ...]:
    """Renumber class ids to dense first-occurrence order (polarity kept)."""
    maps: list[dict[int, int]] = [{} for _ in range(n)]
    for r in rows:
        for c, e in enumerate(r):
            if e.cls not in maps[c]:
                maps[c][e.cls] = len(maps[c])
    if all(all(k == v for k, v in m.items()) for m in maps):
        return rows
    return tuple(
        tuple(Entry(maps[c][e.cls], e.perp) for c, e in enumerate(r)) for r in rows
    )


@dataclass(frozen=True)
class Violation:
    kind: str  # "row-count" | "orthogonality" | "balance"
    rows: tuple[int, ...]
    column: Optional[int]
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(
            f"{v.kind}: {v.detail}" for v in self.violations
        )


def validate(m: PatternMatrix) -> ValidationReport:
    """Check every axiom, reporting all violations (lint style)."""
    violations: list[Violation] = []
    want = 2 ** m.n
    if len(m.rows) != want:
        violations.append(
            Violation(
                "row-count",
                (),
                None,
                f"expected {want} rows for n={m.n}, got {len(m.rows)}",
            )
        )
    for i in range(len(m.rows)):
        for j in range(i + 1, len(m.rows)):
            if not _witnesses(m, i, j):
                violations.append(
                    Violation(
                        "orthogonality",
                        (i, j),
                        None,
                        f"rows {i + 1} and {j + 1} share no column with equal class "
                        "and opposite polarity",
                    )
                )
    for c in range(m.n):
        for cid, (nb, np_) in enumerate(m._counts[c]):
            if nb != np_:
                violations.append(
                    Violation(
                        "balance",
                        (),
                        c,
                        f"column {c + 1} class '{m.names[c][cid]}' occurs {nb} times "
                        f"but its perpendicular {np_} times",
                    )
                )
    return ValidationReport(tuple(violations))


def _witnesses(m: PatternMatrix, i: int, j: int) -> list[int]:
    ri, rj = m.rows[i], m.rows[j]
    return [
        c
        for c in range(m.n)
        if ri[c].cls == rj[c].cls and ri[c].perp != rj[c].perp
    ]


def orthogonality_witnesses(m: PatternMatrix, i: int, j: int) -> set[int]:
    """Columns witnessing orthogonality of rows i and j (0-based)."""
    if i == j:
        raise ValueError("need two distinct rows")
    return set(_witnesses(m, i, j))


def multiplicity(m: PatternMatrix, column: int, class_id: int) -> tuple[int, int]:
    """(count of a, count of a-perp) for the class in that column."""
    if not 0 <= column < m.n:
        raise LookupError(f"no column {column}")
    if not 0 <= class_id < m.num_classes[column]:
        raise LookupError(f"no class {class_id} in column {column}")
    return m._counts[column][class_id]


@dataclass(frozen=True, order=True)
class Signature:
    """Per-column multiplicity partitions (each and the list sorted
    decreasingly) plus the independent-variable count.  Equivalence
    invariant; a cheap mismatch filter, not a complete test."""

    partitions: tuple[tuple[int, ...], ...]
    nu: int = field(compare=False, default=0)

    def __str__(self) -> str:
        def part(p: tuple[int, ...]) -> str:
            items = []
            i = 0
            while i < len(p):
                j = i
                while j < len(p) and p[j] == p[i]:
                    j += 1
                items.append(str(p[i]) if j - i == 1 else f"{p[i]}^{j - i}")
                i = j
            return ",".join(items)

        return " | ".join(part(p) for p in self.partitions)


def signature(m: PatternMatrix) -> Signature:
    report = validate(m)
    if not report.ok:
        raise InvalidMatrixError(str(report))
    parts = []
    for c in range(m.n):
        parts.append(tuple(sorted((nb for nb, _ in m._counts[c]), reverse=True)))
    parts.sort(reverse=True)
    nu = sum(len(p) for p in parts)
    return Signature(tuple(parts), nu)


def is_reducible(m: PatternMatrix) -> Optional[int]:
    """Witness column holding a single variable class, if any (0-based)."""
    for c in range(m.n):
        if m.num_classes[c] == 1:
            return c
    return None


def standard_matrix(n: int) -> PatternMatrix:
    """One class per column; row i spells the binary digits of i as
    polarities, least significant digit in column 1."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n={n} outside supported range 1..{MAX_QUBITS}")
    rows = [
        tuple(Entry(0, bool((i >> c) & 1)) for c in range(n)) for i in range(2 ** n)
    ]
    names = tuple((f"s{c + 1}",) for c in range(n))
    return PatternMatrix(rows, names)


def require_valid(m: PatternMatrix) -> PatternMatrix:
    report = validate(m)
    if not report.ok:
        raise InvalidMatrixError(str(report))
    return m
