"""The .opb text format.

A file is a header block followed by one line per row:

    # comment to end of line
    n = 3
    name = some-label
    signature = 3,1 | 3,1 | 3,1
    nu = 6
    0 0 0
    * 1 0
    0 * 1
    1 0 *
    1 1 1

Header lines contain '='; `n` is required, the rest optional.  Body tokens
are `*`, `0`, `1`, or an identifier [a-z][a-z0-9]* with an optional trailing
apostrophe for the perpendicular vector.

Shorthand expands in two stages.  First stars, top to bottom and leftmost
first: a row with `*` in column c becomes two copies holding a fresh class
and its perpendicular there, and each copy expands its remaining stars with
its own fresh classes.  Then every column that contains `0`/`1` tokens gets
one fresh class for the whole column, `0` meaning the class and `1` its
perpendicular.  After expansion the file must hold exactly 2^n rows.

An identifier names the same class everywhere in its column; reusing one
across columns is rejected, as classes never span columns and such reuse is
almost always a typo.  If `signature` or `nu` headers are present they are
checked against the expanded matrix, so a transcription whose headers were
computed independently audits itself.
"""

from __future__ import annotations

import os
import re
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .core import (
    Entry,
    OpbError,
    PatternMatrix,
    multiplicity,
    signature,
    validate,
)

_IDENT = re.compile(r"[a-z][a-z0-9]*'?\Z")
_HEADER_KEYS = ("n", "name", "signature", "nu")


class OpbParseError(OpbError):
    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class OpbFile:
    matrix: PatternMatrix
    name: Optional[str] = None
    path: Optional[Path] = None

    @property
    def n(self) -> int:
        return self.matrix.n


def _fresh_names(used: set[str]) -> Iterator[str]:
    i = 0
    while True:
        name = f"g{i}"
        if name not in used:
            used.add(name)
            yield name
        i += 1


def _strip(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def parse(text: str, path: Optional[Path] = None) -> OpbFile:
    headers: dict[str, str] = {}
    body: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if "=" in line:
            if body:
                raise OpbParseError("header line after matrix rows", lineno)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _HEADER_KEYS:
                raise OpbParseError(f"unknown header key '{key}'", lineno)
            if key in headers:
                raise OpbParseError(f"duplicate header '{key}'", lineno)
            headers[key] = value
        else:
            body.append((lineno, line.split()))

    if "n" not in headers:
        raise OpbParseError("missing required header 'n'")
    try:
        n = int(headers["n"])
    except ValueError:
        raise OpbParseError(f"n must be an integer, got '{headers['n']}'") from None
    if not 1 <= n <= 6:
        raise OpbParseError(f"n = {n} outside supported range 1..6")

    used: set[str] = set()
    for lineno, tokens in body:
        if len(tokens) != n:
            raise OpbParseError(
                f"expected {n} tokens, got {len(tokens)}", lineno
            )
        for t in tokens:
            if t in ("*", "0", "1"):
                continue
            if not _IDENT.fullmatch(t):
                raise OpbParseError(f"bad token '{t}'", lineno)
            used.add(t.rstrip("'"))

    fresh = _fresh_names(used)
    expanded = _expand_stars([tokens for _, tokens in body], fresh)

    if len(expanded) != 2 ** n:
        raise OpbParseError(
            f"matrix expands to {len(expanded)} rows, need {2 ** n} for n = {n}"
        )

    # one fresh class per column for the 0/1 shorthand
    for c in range(n):
        if any(row[c] in ("0", "1") for row in expanded):
            zname = next(fresh)
            for row in expanded:
                if row[c] == "0":
                    row[c] = zname
                elif row[c] == "1":
                    row[c] = zname + "'"

    # classes are column scoped; a name may not straddle columns
    first_col: dict[str, int] = {}
    ids: list[dict[str, int]] = [{} for _ in range(n)]
    rows: list[tuple[Entry, ...]] = []
    for row in expanded:
        entries = []
        for c, t in enumerate(row):
            base, perp = (t[:-1], True) if t.endswith("'") else (t, False)
            if base in first_col and first_col[base] != c:
                raise OpbParseError(
                    f"identifier '{base}' used in columns "
                    f"{first_col[base] + 1} and {c + 1}"
                )
            first_col[base] = c
            if base not in ids[c]:
                ids[c][base] = len(ids[c])
            entries.append(Entry(ids[c][base], perp))
        rows.append(tuple(entries))

    names = tuple(tuple(ids[c].keys()) for c in range(n))
    matrix = PatternMatrix(rows, names)

    if "signature" in headers or "nu" in headers:
        report = validate(matrix)
        if not report.ok:
            raise OpbParseError(
                "signature/nu declared but matrix is invalid: " + str(report)
            )
        sig = signature(matrix)
        if "signature" in headers:
            declared = _parse_signature(headers["signature"])
            if declared != sig.partitions:
                raise OpbParseError(
                    f"declared signature '{headers['signature']}' but matrix "
                    f"has '{sig}'"
                )
        if "nu" in headers:
            try:
                declared_nu = int(headers["nu"])
            except ValueError:
                raise OpbParseError("nu must be an integer") from None
            if declared_nu != sig.nu:
                raise OpbParseError(
                    f"declared nu = {declared_nu} but matrix has nu = {sig.nu}"
                )

    return OpbFile(matrix, headers.get("name"), path)


def _expand_stars(
    body: Sequence[Sequence[str]], fresh: Iterator[str]
) -> list[list[str]]:
    out: list[list[str]] = []

    def rec(row: list[str]) -> None:
        for c, t in enumerate(row):
            if t == "*":
                x = next(fresh)
                left, right = row.copy(), row.copy()
                left[c] = x
                right[c] = x + "'"
                rec(left)
                rec(right)
                return
        out.append(row)

    for row in body:
        rec(list(row))
    return out


def expand_fragment(text: str, n: int) -> list[list[str]]:
    """Star-expand bare shorthand rows (no headers, no row-count check).
    Returns token rows; 0/1 tokens pass through untouched."""
    body = []
    used: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != n:
            raise OpbParseError(f"expected {n} tokens, got {len(tokens)}", lineno)
        for t in tokens:
            if t not in ("*", "0", "1"):
                if not _IDENT.fullmatch(t):
                    raise OpbParseError(f"bad token '{t}'", lineno)
                used.add(t.rstrip("'"))
        body.append(tokens)
    return _expand_stars(body, _fresh_names(used))


def _parse_signature(text: str) -> tuple[tuple[int, ...], ...]:
    parts = []
    for chunk in text.split("|"):
        items: list[int] = []
        chunk = chunk.strip()
        if not chunk:
            raise OpbParseError(f"empty partition in signature '{text}'")
        for item in chunk.split(","):
            item = item.strip()
            m = re.fullmatch(r"(\d+)(?:\^(\d+))?", item)
            if not m:
                raise OpbParseError(f"bad signature item '{item}'")
            value, rep = int(m.group(1)), int(m.group(2) or 1)
            items.extend([value] * rep)
        parts.append(tuple(items))
    return tuple(parts)


def _display_names(m: PatternMatrix) -> tuple[tuple[str, ...], ...]:
    """Names as stored when globally unique, else a deterministic rename."""
    flat = [name for col in m.names for name in col]
    if len(set(flat)) == len(flat):
        return m.names
    pool = list(string.ascii_lowercase) + [f"v{i}" for i in range(1000)]
    it = iter(pool)
    return tuple(tuple(next(it) for _ in col) for col in m.names)


def serialize(m: PatternMatrix, compact: bool = False, name: Optional[str] = None) -> str:
    names = _display_names(m)
    grid = [
        [names[c][e.cls] + ("'" if e.perp else "") for c, e in enumerate(row)]
        for row in m.rows
    ]
    if compact:
        grid = _star_merge(grid)
        _zero_one(m, names, grid)

    lines = [f"n = {m.n}"]
    if name:
        lines.append(f"name = {name}")
    report = validate(m)
    if report.ok:
        sig = signature(m)
        lines.append(f"signature = {sig}")
        lines.append(f"nu = {sig.nu}")
    lines.append("")
    widths = [max(len(row[c]) for row in grid) for c in range(m.n)]
    for row in grid:
        lines.append(" ".join(t.ljust(w) for t, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _star_merge(grid: list[list[str]]) -> list[list[str]]:
    """Fold x / x' row pairs into a starred row when x occurs nowhere else."""
    grid = [row.copy() for row in grid]
    n = len(grid[0])
    while True:
        counts: dict[str, int] = {}
        for row in grid:
            for t in row:
                counts[t.rstrip("'")] = counts.get(t.rstrip("'"), 0) + 1
        merged = False
        for i in range(len(grid)):
            for j in range(i + 1, len(grid)):
                diff = [c for c in range(n) if grid[i][c] != grid[j][c]]
                if len(diff) != 1:
                    continue
                c = diff[0]
                a, b = grid[i][c], grid[j][c]
                if a in ("*", "0", "1") or b in ("*", "0", "1"):
                    continue
                if a.rstrip("'") != b.rstrip("'") or a == b:
                    continue
                if counts[a.rstrip("'")] != 2:
                    continue
                grid[i][c] = "*"
                del grid[j]
                merged = True
                break
            if merged:
                break
        if not merged:
            return grid


def _zero_one(
    m: PatternMatrix, names: tuple[tuple[str, ...], ...], grid: list[list[str]]
) -> None:
    """Rewrite the highest-multiplicity class of each column as 0/1, first
    class winning ties, columns whose classes all occur once left alone."""
    for c in range(m.n):
        mus = [multiplicity(m, c, cid)[0] for cid in range(m.num_classes[c])]
        best = max(mus)
        if best <= 1:
            continue
        target = names[c][mus.index(best)]
        for row in grid:
            if row[c] == target:
                row[c] = "0"
            elif row[c] == target + "'":
                row[c] = "1"


def atomic_write_text(path: Path | str, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    half-written file."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def load(path: Path | str) -> OpbFile:
    path = Path(path)
    return parse(path.read_text(), path)


def dataset(group: str) -> list[OpbFile]:
    """Bundled matrices under data/<group>/, sorted by file name."""
    root = resources.files("opbkit").joinpath("data").joinpath(group)
    out = []
    for item in sorted(root.iterdir(), key=lambda t: t.name):
        if item.name.endswith(".opb"):
            f = parse(item.read_text())
            f.path = Path(str(item))
            out.append(f)
    if not out:
        raise FileNotFoundError(f"no .opb files in dataset group '{group}'")
    return out
