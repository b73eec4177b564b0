#!/usr/bin/env python3
"""Derive frozen expected values used by the test suite.

Each subcommand recomputes one golden from scratch and writes it under
tests/data/.  The point is that the derivation path shares no code with the
package: anything here is straight-line enumeration small enough to eyeball.

    standard2-key    exhaustive minimisation of the 2-qubit one-class-per-
                     column grid over every relabeling, polarity flip, column
                     order and row order; writes the winning byte string.
    hasse-n3         edge list of the 3-qubit identification order, computed
                     with the installed package; regression pin, not an
                     independent oracle.
    counts           class census for n=2,3,4 from the installed package:
                     totals, per-variable-count breakdown, and the canonical
                     keys of the n=4 maximal classes; regression pins.

Run from the repository root:  python scripts/derive_goldens.py <subcommand>
"""

import argparse
import itertools
import sys
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def standard2_key() -> bytes:
    # The grid, written out by hand: rows are the binary words 00,01,10,11
    # read as polarities, one class per column.  Entry = (class, perp).
    grid = [
        [(0, 0), (0, 0)],
        [(0, 1), (0, 0)],
        [(0, 0), (0, 1)],
        [(0, 1), (0, 1)],
    ]
    best = None
    # The whole symmetry group, spelled out: column orders x row orders x
    # per-column polarity flips x per-column class relabelings (trivial here,
    # one class per column, but enumerated anyway so nothing is assumed).
    # Serialization is raw: byte = (class << 1) | polarity, rows in order.
    for colperm in itertools.permutations(range(2)):
        for rowperm in itertools.permutations(range(4)):
            for flips in itertools.product([0, 1], repeat=2):
                body = bytearray()
                for ri in rowperm:
                    for c in colperm:
                        cls, pol = grid[ri][c]
                        body.append((cls << 1) | (pol ^ flips[c]))
                cand = bytes(body)
                if best is None or cand < best:
                    best = cand
    return best


def hasse_n3(out_path: Path) -> None:
    from opbkit import lattice

    store = lattice.enumerate_classes(3)
    edges = lattice.hasse(store)
    keys = sorted(store.keys())
    index = {k: i for i, k in enumerate(keys)}
    lines = [f"{len(keys)}"]
    lines += [k.hex for k in keys]
    lines += sorted(f"{index[a]} {index[b]}" for a, b in edges)
    out_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {out_path} ({len(edges)} edges over {len(keys)} classes)")


def counts(out_path: Path) -> None:
    import json
    import time

    from opbkit import lattice

    census = {}
    for n in (2, 3, 4):
        t0 = time.monotonic()
        store = lattice.enumerate_classes(
            n, progress=lambda msg: print(f"  {msg}", flush=True)
        )
        wall = time.monotonic() - t0
        if store.truncated:
            raise SystemExit(f"n={n} enumeration truncated, refusing to freeze")
        by_nu: dict[int, int] = {}
        for rec in store.records():
            by_nu[rec.signature.nu] = by_nu.get(rec.signature.nu, 0) + 1
        entry = {
            "total": len(store),
            "maximal": len(store.maximal_keys()),
            "by_nu": {str(k): v for k, v in sorted(by_nu.items())},
        }
        if n == 4:
            entry["maximal_keys"] = [k.hex for k in store.maximal_keys()]
        census[f"n{n}"] = entry
        print(f"n={n}: {entry['total']} classes, "
              f"{entry['maximal']} maximal, {wall:.1f}s", flush=True)
    out_path.write_text(json.dumps(census, indent=2) + "\n")
    print(f"wrote {out_path}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("what", choices=["standard2-key", "hasse-n3", "counts"])
    args = ap.parse_args()
    DATA.mkdir(parents=True, exist_ok=True)
    if args.what == "standard2-key":
        key = standard2_key()
        out = DATA / "standard2.key"
        out.write_text(key.hex() + "\n")
        print(f"wrote {out}: {key.hex()}")
    elif args.what == "hasse-n3":
        hasse_n3(DATA / "hasse-n3.golden")
    else:
        counts(DATA / "class-counts.golden")
    return 0


if __name__ == "__main__":
    sys.exit(main())
