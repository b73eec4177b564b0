"""Command line front end.

Rows, columns, and block positions are 1-based on the command line.  Every
command accepts --json for a machine-readable envelope carrying the tool
version and sha256 hashes of its input files.  Exit codes: 0 for success or
a positive verdict, 1 for a negative verdict (invalid, inequivalent, not
maximal, failed checks), 2 for unusable input.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__
from .canonical import are_equivalent, brute_force_equivalent, canonical_form
from .core import OpbError, signature, validate
from .lattice import (
    ClassStore,
    enumerate_classes,
    hasse as hasse_edges,
    identifications,
    is_maximal as _is_maximal,
    splits,
    switching_orbit,
    switching_sites,
)
from .numeric import (
    GRAM_TOL,
    NumericOPB,
    associate_matrix,
    build_switch_unitary,
    gram_defect,
    instantiate as _instantiate,
)
from .opbfile import atomic_write_text, load, serialize
from .verify import QUICK_CHECKS, check_exhaustive_search


def _sha256(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _envelope(command: str, inputs: list[Path], result: dict) -> str:
    return json.dumps(
        {
            "tool": f"opbkit {__version__}",
            "command": command,
            "inputs": {str(p): _sha256(p) for p in inputs},
            "result": result,
        },
        indent=1,
    )


def _read(path: Path):
    try:
        return load(path)
    except OpbError as exc:
        click.echo(f"error: {path}: {exc}", err=True)
        sys.exit(2)


def _write_or_print(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        atomic_write_text(out, text)


_file_arg = click.argument(
    "file", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
_json_flag = click.option("--json", "as_json", is_flag=True, help="JSON envelope output.")
_out_opt = click.option(
    "-o", "--out", type=click.Path(dir_okay=False, path_type=Path), default=None
)


@click.group()
@click.version_option(__version__, prog_name="opb")
def main() -> None:
    """Inspect, classify, and instantiate orthogonal product bases."""


@main.command("validate")
@_file_arg
@_json_flag
def validate_cmd(file: Path, as_json: bool) -> None:
    """Check the axioms; exit 1 listing every violation if any."""
    f = _read(file)
    report = validate(f.matrix)
    if as_json:
        result = {
            "ok": report.ok,
            "violations": [
                {"kind": v.kind, "rows": [r + 1 for r in v.rows],
                 "column": None if v.column is None else v.column + 1,
                 "detail": v.detail}
                for v in report.violations
            ],
        }
        click.echo(_envelope("validate", [file], result))
    else:
        click.echo("ok" if report.ok else str(report))
    sys.exit(0 if report.ok else 1)


@main.command("expand")
@_file_arg
@click.option("--compact", is_flag=True, help="Re-serialize in shorthand instead.")
@_out_opt
def expand_cmd(file: Path, compact: bool, out: Path | None) -> None:
    """Expand shorthand to one line per row (or back, with --compact)."""
    f = _read(file)
    _write_or_print(serialize(f.matrix, compact=compact, name=f.name), out)


@main.command("canon")
@_file_arg
@_json_flag
@_out_opt
def canon_cmd(file: Path, as_json: bool, out: Path | None) -> None:
    """Canonical key and canonical representative."""
    f = _read(file)
    try:
        key, canon = canonical_form(f.matrix)
    except OpbError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if as_json:
        click.echo(
            _envelope(
                "canon",
                [file],
                {"key": key.hex, "n": key.n, "signature": str(signature(canon))},
            )
        )
    else:
        click.echo(key.hex)
    if out is not None:
        atomic_write_text(out, serialize(canon, name=key.hex))


@main.command("equiv")
@click.argument("first", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("second", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--brute-force", is_flag=True, help="Exhaustive route (n <= 3 only).")
@_json_flag
def equiv_cmd(first: Path, second: Path, brute_force: bool, as_json: bool) -> None:
    """Decide equivalence; exit 0 if equivalent, 1 if not."""
    a, b = _read(first), _read(second)
    try:
        if brute_force:
            verdict = brute_force_equivalent(a.matrix, b.matrix)
        else:
            verdict = are_equivalent(a.matrix, b.matrix)
    except (OpbError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if as_json:
        click.echo(
            _envelope(
                "equiv",
                [first, second],
                {"equivalent": verdict, "route": "brute-force" if brute_force else "key"},
            )
        )
    else:
        click.echo("equivalent" if verdict else "inequivalent")
    sys.exit(0 if verdict else 1)


@main.command("maximal")
@_file_arg
@_json_flag
def maximal_cmd(file: Path, as_json: bool) -> None:
    """Exit 0 if no class can be split, 1 otherwise."""
    f = _read(file)
    try:
        verdict = _is_maximal(f.matrix)
        n_splits = 0 if verdict else len(splits(f.matrix))
    except OpbError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if as_json:
        click.echo(
            _envelope("maximal", [file], {"maximal": verdict, "splits": n_splits})
        )
    else:
        click.echo("maximal" if verdict else f"not maximal ({n_splits} splits)")
    sys.exit(0 if verdict else 1)


def _emit_neighbors(file: Path, mats, as_json: bool, out_dir: Path | None, cmd: str):
    seen = {}
    for m in mats:
        key, canon = canonical_form(m)
        seen.setdefault(key, canon)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for key in sorted(seen):
            atomic_write_text(
                out_dir / f"{key.hex}.opb", serialize(seen[key], name=key.hex)
            )
    if as_json:
        click.echo(
            _envelope(
                cmd,
                [file],
                {"raw": len(mats), "classes": [k.hex for k in sorted(seen)]},
            )
        )
    else:
        click.echo(f"{len(mats)} raw, {len(seen)} classes")
        for key in sorted(seen):
            click.echo(f"  {key.hex}")


@main.command("children")
@_file_arg
@_json_flag
@click.option("-o", "--out-dir", type=click.Path(file_okay=False, path_type=Path))
def children_cmd(file: Path, as_json: bool, out_dir: Path | None) -> None:
    """All one-step identifications, deduplicated by class."""
    f = _read(file)
    _emit_neighbors(file, identifications(f.matrix), as_json, out_dir, "children")


@main.command("parents")
@_file_arg
@_json_flag
@click.option("-o", "--out-dir", type=click.Path(file_okay=False, path_type=Path))
def parents_cmd(file: Path, as_json: bool, out_dir: Path | None) -> None:
    """All one-step splits, deduplicated by class."""
    f = _read(file)
    _emit_neighbors(file, splits(f.matrix), as_json, out_dir, "parents")


@main.command("enumerate")
@click.option("--n", "n", type=int, required=True)
@click.option("--maximal-only", is_flag=True, help="List only maximal classes.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--node-budget", type=int, default=None)
@click.option("--time-budget", type=float, default=None, help="Seconds of wall time.")
@click.option("-o", "--out-dir", type=click.Path(file_okay=False, path_type=Path))
@_json_flag
@click.option("--verbose", is_flag=True, help="Progress per level on stderr.")
def enumerate_cmd(
    n, maximal_only, jobs, node_budget, time_budget, out_dir, as_json, verbose
):
    """Enumerate every class for the given n.  Exit 1 when a budget
    truncated the walk."""
    progress = (lambda msg: click.echo(msg, err=True)) if verbose else None
    store = enumerate_classes(
        n,
        node_budget=node_budget,
        time_budget=time_budget,
        jobs=jobs,
        progress=progress,
    )
    if out_dir is not None:
        store.save(out_dir)
    listed = store.maximal_keys() if maximal_only else store.keys()
    if as_json:
        result = {
            "n": n,
            "total": len(store),
            "maximal": len(store.maximal_keys()),
            "truncated": store.truncated,
            "provenance": store.provenance,
            "listed": [k.hex for k in listed],
        }
        click.echo(_envelope("enumerate", [], result))
    else:
        for k in listed:
            rec = store.get(k)
            click.echo(f"{k.hex}  nu={rec.signature.nu}  {rec.signature}")
        click.echo(
            f"{len(store)} classes, {len(store.maximal_keys())} maximal"
            + (" [TRUNCATED]" if store.truncated else "")
        )
    if store.truncated:
        click.echo(
            "warning: " + store.provenance.get("truncated_reason", "truncated"),
            err=True,
        )
        sys.exit(1)


@main.command("orbits")
@_file_arg
@_json_flag
def orbits_cmd(file: Path, as_json: bool) -> None:
    """The switching orbit of the file's class."""
    f = _read(file)
    try:
        orbit = switching_orbit(f.matrix)
    except OpbError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    keys = sorted(orbit)
    if as_json:
        click.echo(
            _envelope("orbits", [file], {"size": len(keys), "classes": [k.hex for k in keys]})
        )
    else:
        click.echo(f"orbit size {len(keys)}")
        for k in keys:
            click.echo(f"  {k.hex}")


@main.command("hasse")
@click.option(
    "--store",
    "store_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
)
@click.option("--n", "n", type=int, default=None, help="Enumerate afresh instead.")
@click.option("--dot", "dot_out", type=click.Path(dir_okay=False, path_type=Path))
@_json_flag
def hasse_cmd(store_dir: Path | None, n: int | None, dot_out: Path | None, as_json: bool) -> None:
    """Cover edges of the identification order, over a saved enumeration
    (--store) or a fresh one (--n)."""
    if (store_dir is None) == (n is None):
        click.echo("error: give exactly one of --store and --n", err=True)
        sys.exit(2)
    try:
        store = ClassStore.load(store_dir) if store_dir else enumerate_classes(n)
        edges = hasse_edges(store)
    except (OpbError, OSError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if dot_out is not None:
        lines = ["digraph identification_order {", "  rankdir=BT;"]
        for rec in store.records():
            label = f"nu={rec.signature.nu}\\n{rec.signature}"
            lines.append(f'  "{rec.key.hex}" [label="{label}"];')
        for lo, up in sorted(edges):
            lines.append(f'  "{lo.hex}" -> "{up.hex}";')
        lines.append("}")
        atomic_write_text(dot_out, "\n".join(lines) + "\n")
    if as_json:
        click.echo(
            _envelope(
                "hasse",
                [store_dir / ClassStore.MANIFEST] if store_dir else [],
                {
                    "nodes": len(store),
                    "edges": [[lo.hex, up.hex] for lo, up in sorted(edges)],
                },
            )
        )
    else:
        click.echo(f"{len(store)} nodes, {len(edges)} cover edges")


@main.command("instantiate")
@_file_arg
@click.option("--seed", type=int, default=0, show_default=True)
@_out_opt
def instantiate_cmd(file: Path, seed: int, out: Path | None) -> None:
    """Concrete basis for a pattern matrix, written as JSON."""
    f = _read(file)
    try:
        b = _instantiate(f.matrix, seed)
    except OpbError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    b.meta["source_file"] = str(file)
    _write_or_print(b.to_json(), out)


@main.command("verify-gram")
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--tol", type=float, default=GRAM_TOL, show_default=True)
@_json_flag
def verify_gram_cmd(file: Path, tol: float, as_json: bool) -> None:
    """Gram defect of a stored numeric basis; exit 1 above tolerance."""
    try:
        b = NumericOPB.load(file)
    except (OSError, KeyError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    defect = gram_defect(b)
    ok = bool(defect <= tol)
    if as_json:
        click.echo(
            _envelope("verify-gram", [file], {"defect": defect, "tol": tol, "ok": ok})
        )
    else:
        click.echo(f"gram defect {defect:.3e} ({'ok' if ok else 'TOO LARGE'})")
    sys.exit(0 if ok else 1)


@main.command("associate")
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--tol", type=float, default=1e-8, show_default=True)
@_out_opt
def associate_cmd(file: Path, tol: float, out: Path | None) -> None:
    """Pattern matrix read off a stored numeric basis."""
    try:
        b = NumericOPB.load(file)
        m = associate_matrix(b, tol)
    except (OSError, KeyError, ValueError, OpbError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    _write_or_print(serialize(m), out)


@main.command("switch-unitary")
@_file_arg
@click.option("--rows", required=True, help="Comma-separated 1-based row numbers.")
@click.option("--cols", required=True, help="Comma-separated 1-based column numbers.")
@click.option(
    "--perm",
    required=True,
    help="1-based source position for each block column, comma-separated.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@_out_opt
@_json_flag
def switch_unitary_cmd(file, rows, cols, perm, seed, out, as_json) -> None:
    """Unitary realizing a switch at the given site."""
    f = _read(file)
    try:
        want_rows = tuple(sorted(int(x) - 1 for x in rows.split(",")))
        want_cols = tuple(sorted(int(x) - 1 for x in cols.split(",")))
        positions = tuple(int(x) - 1 for x in perm.split(","))
    except ValueError:
        click.echo("error: --rows/--cols/--perm must be comma-separated integers", err=True)
        sys.exit(2)
    try:
        site = next(
            (
                s
                for s in switching_sites(f.matrix)
                if s.rows == want_rows and s.cols == want_cols
            ),
            None,
        )
        if site is None:
            click.echo("error: no switching site with those rows and columns", err=True)
            sys.exit(2)
        u, before, after = build_switch_unitary(f.matrix, site, positions, seed)
    except (OpbError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    payload = {
        "unitary": [[[z.real, z.imag] for z in row] for row in u],
        "before": json.loads(before.to_json()),
        "after": json.loads(after.to_json()),
    }
    if out is not None:
        atomic_write_text(out, json.dumps(payload, indent=1) + "\n")
    if as_json:
        click.echo(
            _envelope(
                "switch-unitary",
                [file],
                {"dimension": u.shape[0], "written": str(out) if out else None},
            )
        )
    elif out is None:
        click.echo(json.dumps(payload, indent=1))


@main.command("verify")
@click.option("--full", is_flag=True, help="Include the four-qubit exhaustive search.")
@click.option(
    "--only",
    multiple=True,
    help="Run just the named checks (repeatable).",
)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--node-budget", type=int, default=None)
@click.option("--time-budget", type=float, default=None)
@_json_flag
def verify_cmd(full, only, jobs, node_budget, time_budget, as_json) -> None:
    """Run the checkable claims; exit 1 if any fail."""
    checks = QUICK_CHECKS
    if only:
        known = {name for name, _ in QUICK_CHECKS}
        bad = [name for name in only if name not in known]
        if bad:
            click.echo(
                f"error: unknown checks {', '.join(bad)} "
                f"(available: {', '.join(sorted(known))})",
                err=True,
            )
            sys.exit(2)
        checks = tuple(c for c in QUICK_CHECKS if c[0] in only)
    results = [fn() for _, fn in checks]
    if full:
        result, _ = check_exhaustive_search(
            jobs=jobs, node_budget=node_budget, time_budget=time_budget
        )
        results.append(result)
    if as_json:
        click.echo(
            _envelope(
                "verify",
                [],
                {
                    "checks": [
                        {
                            "name": r.name,
                            "passed": r.passed,
                            "detail": r.detail,
                            "seconds": round(r.seconds, 3),
                        }
                        for r in results
                    ],
                    "all_passed": all(r.passed for r in results),
                },
            )
        )
    else:
        for r in results:
            click.echo(r.line())
        n_bad = sum(1 for r in results if not r.passed)
        click.echo(f"{len(results) - n_bad}/{len(results)} checks passed")
    sys.exit(0 if all(r.passed for r in results) else 1)


if __name__ == "__main__":
    main()
