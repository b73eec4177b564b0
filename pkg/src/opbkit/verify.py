"""Checkable claims about small systems, one function per claim group.

Each check returns a CheckResult rather than asserting, so the CLI can
print a report and the test suite can fail with the same details.  The
checks pull every matrix from the bundled dataset or rebuild it by
enumeration; none of them hardcodes a matrix.
"""

from __future__ import annotations

import itertools
import random
import time
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .canonical import (
    CanonicalKey,
    are_equivalent,
    brute_force_equivalent,
    canonical_key,
    fixed_order_key,
)
from .core import (
    Entry,
    OpbError,
    PatternMatrix,
    is_reducible,
    signature,
    standard_matrix,
    validate,
)
from .lattice import (
    ClassStore,
    enumerate_classes,
    hasse,
    is_maximal,
    switching_orbit,
    switching_sites,
)
from .numeric import (
    GRAM_TOL,
    LINE_MATCH_TOL,
    UNITARITY_TOL,
    associate_matrix,
    build_switch_unitary,
    gram_defect,
    instantiate,
    is_reducible_numeric,
    tensor_opb,
    prepend_qubit,
    verify_frame_structure,
)
from .opbfile import dataset

N3_NU_COUNTS = {3: 1, 4: 3, 5: 6, 6: 5, 7: 2}
N4_ORBIT_SIZES = (6, 2, 4, 1, 4, 3, 2, 2, 2, 2, 1, 1, 1, 1, 1)
N4_ORBIT_NU = (15, 14, 14, 13, 13, 13, 12, 12, 12, 12, 12, 11, 11, 11, 10)
ALL_GROUPS = ("n2-classes", "n3-maximal", "n3-classes", "n4-switching", "n4-classes")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name} ({self.seconds:.1f}s): {self.detail}"


def _result(name: str, t0: float, problems: list[str], summary: str) -> CheckResult:
    detail = "; ".join(problems) if problems else summary
    return CheckResult(name, not problems, detail, time.monotonic() - t0)


def random_equivalent(m: PatternMatrix, rng: random.Random) -> PatternMatrix:
    """A random member of m's class: rows and columns shuffled, every
    column's classes re-labelled with random polarity flips."""
    col_perm = list(range(m.n))
    rng.shuffle(col_perm)
    row_perm = list(range(len(m.rows)))
    rng.shuffle(row_perm)
    relabel = []
    flip = []
    for c in range(m.n):
        lab = list(range(m.num_classes[c]))
        rng.shuffle(lab)
        relabel.append(lab)
        flip.append([rng.random() < 0.5 for _ in range(m.num_classes[c])])
    rows = []
    for r in row_perm:
        row = []
        for c in col_perm:
            e = m.rows[r][c]
            row.append(Entry(relabel[c][e.cls], e.perp ^ flip[c][e.cls]))
        rows.append(tuple(row))
    return PatternMatrix(rows)


def check_small_census() -> CheckResult:
    """Two qubits have exactly two classes, one of them maximal.  Three
    qubits have 17 classes with a known variable-count profile, three of
    them maximal, falling into two switching orbits.  The bundled matrices
    represent exactly these classes."""
    t0 = time.monotonic()
    problems: list[str] = []

    store2 = enumerate_classes(2)
    if len(store2) != 2:
        problems.append(f"n=2 gave {len(store2)} classes, want 2")
    m2 = store2.maximal_keys()
    if len(m2) != 1:
        problems.append(f"n=2 gave {len(m2)} maximal classes, want 1")
    keys2 = {canonical_key(f.matrix) for f in dataset("n2-classes")}
    if keys2 != set(store2.keys()):
        problems.append("bundled n=2 matrices do not match the enumeration")

    store3 = enumerate_classes(3)
    if len(store3) != 17:
        problems.append(f"n=3 gave {len(store3)} classes, want 17")
    nus = Counter(rec.signature.nu for rec in store3.records())
    if dict(nus) != N3_NU_COUNTS:
        problems.append(f"n=3 variable counts {dict(nus)} != {N3_NU_COUNTS}")
    m3 = store3.maximal_keys()
    if len(m3) != 3:
        problems.append(f"n=3 gave {len(m3)} maximal classes, want 3")
    orbits = []
    for key in m3:
        if any(key in o for o in orbits):
            continue
        orbits.append(set(switching_orbit(store3.get(key).matrix)))
    if len(orbits) != 2:
        problems.append(f"n=3 maximal classes fall into {len(orbits)} orbits, want 2")
    keys3 = {canonical_key(f.matrix) for f in dataset("n3-classes")}
    if keys3 != set(store3.keys()):
        problems.append("bundled n=3 matrices do not match the enumeration")

    return _result(
        "small-census",
        t0,
        problems,
        f"n=2: {len(store2)} classes ({len(m2)} maximal); "
        f"n=3: {len(store3)} classes ({len(m3)} maximal, {len(orbits)} orbits)",
    )


def check_four_qubit_catalog() -> CheckResult:
    """The 33 bundled four-qubit maximal matrices are valid, maximal and
    pairwise inequivalent, and grouping them by switching class splits them
    into 15 groups of known sizes and variable counts, each holding its
    bundled representative.  Switching classes are computed as full
    closures; classes they contain beyond the bundled files are counted
    and reported in the summary."""
    t0 = time.monotonic()
    problems: list[str] = []

    classes = dataset("n4-classes")
    reps = dataset("n4-switching")
    if len(classes) != 33 or len(reps) != 15:
        problems.append(
            f"dataset sizes: {len(classes)} classes, {len(reps)} representatives"
        )

    keys: dict[str, CanonicalKey] = {}
    nu_by_key: dict[CanonicalKey, int] = {}
    for f in classes:
        if not validate(f.matrix).ok:
            problems.append(f"{f.name}: invalid")
            continue
        if not is_maximal(f.matrix):
            problems.append(f"{f.name}: not maximal")
        keys[f.name] = canonical_key(f.matrix)
        nu_by_key[keys[f.name]] = signature(f.matrix).nu
    if len(set(keys.values())) != len(keys):
        problems.append("bundled classes are not pairwise inequivalent")

    groups: dict[str, set[CanonicalKey]] = {}
    for name, key in keys.items():
        groups.setdefault(name.rsplit("-", 1)[0], set()).add(key)

    file_keys = set(keys.values())
    seen_full: set[CanonicalKey] = set()
    seen_files: set[CanonicalKey] = set()
    beyond = 0
    for i, rep in enumerate(reps):
        rep_key = canonical_key(rep.matrix)
        orbit = set(switching_orbit(rep.matrix))
        members = orbit & file_keys
        beyond += len(orbit) - len(members)
        expect = groups.get(rep.name, set())
        if members != expect:
            problems.append(
                f"{rep.name}: switching class holds {len(members)} bundled "
                f"classes, the file group has {len(expect)}"
            )
        if rep_key not in orbit:
            problems.append(f"{rep.name}: representative missing from its class")
        if len(members) != N4_ORBIT_SIZES[i]:
            problems.append(
                f"{rep.name}: {len(members)} bundled classes in the group, "
                f"want {N4_ORBIT_SIZES[i]}"
            )
        nus = {nu_by_key[k] for k in members} | {signature(rep.matrix).nu}
        if nus != {N4_ORBIT_NU[i]}:
            problems.append(
                f"{rep.name}: group nu values {sorted(nus)}, want {N4_ORBIT_NU[i]}"
            )
        if orbit & seen_full:
            problems.append(f"{rep.name}: switching class overlaps another one")
        seen_full |= orbit
        seen_files |= members

    if seen_files != file_keys:
        problems.append("switching classes do not cover the bundled files exactly")

    return _result(
        "four-qubit-catalog",
        t0,
        problems,
        f"33 classes in {len(reps)} switching groups of sizes {N4_ORBIT_SIZES}; "
        f"full closures hold {beyond} more classes beyond the bundled files",
    )


def check_exhaustive_search(
    jobs: int = 1,
    node_budget: Optional[int] = None,
    time_budget: Optional[float] = None,
    expected_total: Optional[int] = None,
) -> tuple[CheckResult, ClassStore]:
    """Enumerating every four-qubit class from scratch finds exactly the 33
    bundled maximal classes.  A tripped budget fails the check loudly."""
    t0 = time.monotonic()
    problems: list[str] = []

    store = enumerate_classes(
        4, node_budget=node_budget, time_budget=time_budget, jobs=jobs
    )
    if store.truncated:
        problems.append(
            "enumeration truncated: " + store.provenance.get("truncated_reason", "?")
        )
    maximal = set(store.maximal_keys())
    bundled = {canonical_key(f.matrix) for f in dataset("n4-classes")}
    if not store.truncated:
        if len(maximal) != 33:
            problems.append(f"found {len(maximal)} maximal classes, want 33")
        missing = bundled - maximal
        if missing:
            problems.append(f"{len(missing)} bundled classes were not found")
        extra = maximal - bundled
        if extra:
            sigs = sorted(str(store.get(k).signature) for k in extra)
            problems.append(
                f"{len(extra)} maximal classes match no bundled file "
                f"(signatures {'; '.join(sigs)})"
            )
        if expected_total is not None and len(store) != expected_total:
            problems.append(
                f"total class count {len(store)} != recorded {expected_total}"
            )
    return (
        _result(
            "four-qubit-exhaustive",
            t0,
            problems,
            f"{len(store)} classes total, {len(maximal)} maximal, "
            f"{store.provenance.get('canonicalizations', 0)} canonicalizations",
        ),
        store,
    )


def check_multiplicity_bounds(stores: Sequence[ClassStore] = ()) -> CheckResult:
    """Every four-qubit matrix has a class occurring at least six times; in
    every valid matrix each row's class multiplicities sum to at least
    2^n - 1; the irreducible three-qubit matrix uses only multiplicities 1
    and 3.  Beyond the bundled files, any enumeration stores passed in are
    swept class by class."""
    t0 = time.monotonic()
    problems: list[str] = []

    def scan(label: str, m: PatternMatrix) -> None:
        counts = [Counter(e.cls for e in col) for col in zip(*m.rows)]
        floor = 2 ** m.n - 1
        for r, row in enumerate(m.rows):
            total = sum(counts[c][e.cls] for c, e in enumerate(row))
            if total < floor:
                problems.append(
                    f"{label} row {r + 1}: multiplicity sum {total} < {floor}"
                )
                return
        if m.n == 4:
            mu1 = max(counts[c].most_common(1)[0][1] for c in range(m.n))
            if mu1 < 6:
                problems.append(f"{label}: largest multiplicity {mu1} < 6")

    for group in ALL_GROUPS:
        for f in dataset(group):
            scan(f"{group}/{f.name}", f.matrix)
    swept = 0
    for store in stores:
        for rec in store.records():
            scan(f"n={store.n} class {rec.key.hex[:12]}", rec.matrix)
            swept += 1

    irr = [f for f in dataset("n3-maximal") if is_reducible(f.matrix) is None]
    if len(irr) != 1:
        problems.append(f"{len(irr)} irreducible three-qubit matrices, want 1")
    else:
        mus = {p for part in signature(irr[0].matrix).partitions for p in part}
        if mus != {1, 3}:
            problems.append(f"irreducible n=3 multiplicities {sorted(mus)} != [1, 3]")

    return _result(
        "multiplicity-bounds",
        t0,
        problems,
        "row sums reach 2^n - 1 everywhere; n=4 tops >= 6; irreducible n=3 "
        f"uses only 1 and 3; swept {swept} enumerated classes",
    )


def check_order_diagram(
    golden_edges: Optional[set[tuple[str, str]]] = None,
) -> CheckResult:
    """The identification order on the 17 three-qubit classes: cover edges
    link consecutive variable counts, there is one minimum (the standard
    class) and the maxima are the three maximal classes."""
    t0 = time.monotonic()
    problems: list[str] = []

    store = enumerate_classes(3)
    edges = hasse(store)
    if len(store) != 17:
        problems.append(f"{len(store)} nodes, want 17")
    uppers = {up for _, up in edges}
    lowers = {lo for lo, _ in edges}
    minima = [k for k in store.keys() if k not in uppers]
    maxima = [k for k in store.keys() if k not in lowers]
    std_key = canonical_key(standard_matrix(3))
    if minima != [std_key]:
        problems.append(f"{len(minima)} minima, want exactly the standard class")
    if set(maxima) != set(store.maximal_keys()) or len(maxima) != 3:
        problems.append(f"{len(maxima)} maxima, want the 3 maximal classes")
    for lo, up in edges:
        dnu = store.get(up).signature.nu - store.get(lo).signature.nu
        if dnu != 1:
            problems.append("an edge skips a variable-count level")
            break
    if golden_edges is not None:
        got = {(lo.hex, up.hex) for lo, up in edges}
        if got != golden_edges:
            problems.append(
                f"edge set ({len(got)} edges) differs from the recorded one "
                f"({len(golden_edges)})"
            )

    return _result(
        "order-diagram",
        t0,
        problems,
        f"17 nodes, {len(edges)} cover edges, unique minimum, 3 maxima",
    )


def check_equivalence_routes(
    pairs: int = 500, chains: int = 100, seed: int = 0
) -> CheckResult:
    """The canonical-key route and the exhaustive backtracking route agree:
    on every pair of two-qubit classes and on randomly scrambled pairs of
    three-qubit classes.  Keys are invariant under random equivalence
    chains."""
    t0 = time.monotonic()
    problems: list[str] = []
    rng = random.Random(seed)

    two = [f.matrix for f in dataset("n2-classes")]
    for a, b in itertools.product(two, repeat=2):
        sa, sb = random_equivalent(a, rng), random_equivalent(b, rng)
        fast = are_equivalent(sa, sb)
        slow = brute_force_equivalent(sa, sb)
        if fast != slow or fast != (a is b):
            problems.append("two-qubit routes disagree")

    three = [f.matrix for f in dataset("n3-classes")]
    agree = 0
    for _ in range(pairs):
        i = rng.randrange(len(three))
        j = rng.randrange(len(three))
        sa = random_equivalent(three[i], rng)
        sb = random_equivalent(three[j], rng)
        fast = are_equivalent(sa, sb)
        slow = brute_force_equivalent(sa, sb)
        if fast != slow or fast != (i == j):
            problems.append(f"three-qubit routes disagree on classes {i}, {j}")
            break
        agree += 1

    for m in two + three:
        key = canonical_key(m)
        cur = m
        for _ in range(chains):
            cur = random_equivalent(cur, rng)
        if canonical_key(cur) != key:
            problems.append("canonical key changed along an equivalence chain")
            break

    return _result(
        "equivalence-routes",
        t0,
        problems,
        f"routes agree on {agree} random three-qubit pairs; keys stable "
        f"under {chains}-step chains",
    )


def check_numeric_instantiation(seeds: int = 10) -> CheckResult:
    """Instantiating any bundled matrix yields an orthonormal product basis
    (Gram defect within 1e-9 across seeds); reading the matrix back off the
    numbers returns it; numeric and symbolic reducibility agree; every slot
    passes the frame-structure checks."""
    t0 = time.monotonic()
    problems: list[str] = []
    worst_gram = 0.0

    for group in ALL_GROUPS:
        for f in dataset(group):
            m = f.matrix
            b0 = None
            for seed in range(seeds):
                b = instantiate(m, seed)
                if seed == 0:
                    b0 = b
                defect = gram_defect(b)
                worst_gram = max(worst_gram, defect)
                if defect > GRAM_TOL:
                    problems.append(
                        f"{group}/{f.name} seed {seed}: gram defect {defect:.2e}"
                    )
                    break
            back = associate_matrix(b0)
            if fixed_order_key(back) != fixed_order_key(m):
                problems.append(f"{group}/{f.name}: associate != original")
            sym = is_reducible(m)
            got = is_reducible_numeric(b0)
            num = got[0] if got else None
            if sym != num:
                problems.append(
                    f"{group}/{f.name}: symbolic reducibility {sym}, numeric {num}"
                )
            for slot in range(m.n):
                try:
                    verify_frame_structure(b0, slot)
                except OpbError as exc:
                    problems.append(f"{group}/{f.name} slot {slot + 1}: {exc}")
                    break

    return _result(
        "numeric-instantiation",
        t0,
        problems,
        f"worst gram defect {worst_gram:.2e} over {seeds} seeds per matrix",
    )


def check_switch_unitaries() -> CheckResult:
    """Every switch on every bundled four-qubit representative is realized
    by an explicitly constructed unitary: unitary to 1e-10, mapping the
    before-basis onto the after-basis line by line."""
    t0 = time.monotonic()
    problems: list[str] = []
    count = 0
    worst_unitary = 0.0
    worst_match = 1.0
    for f in dataset("n4-switching"):
        m = f.matrix
        for site in switching_sites(m):
            k = len(site.cols)
            for perm in itertools.permutations(range(k)):
                if perm == tuple(range(k)):
                    continue
                u, before, after = build_switch_unitary(m, site, perm, seed=0)
                count += 1
                defect = float(
                    np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
                )
                worst_unitary = max(worst_unitary, defect)
                if defect > UNITARITY_TOL:
                    problems.append(
                        f"{f.name} site {site.cols} perm {perm}: "
                        f"unitarity defect {defect:.2e}"
                    )
                    continue
                for r in range(len(before.rows)):
                    x = u @ before.row_vector(r)
                    y = after.row_vector(r)
                    o = float(
                        abs(np.vdot(x, y)) ** 2
                        / (np.vdot(x, x).real * np.vdot(y, y).real)
                    )
                    worst_match = min(worst_match, o)
                    if o < 1.0 - LINE_MATCH_TOL:
                        problems.append(
                            f"{f.name} site {site.cols} perm {perm} row "
                            f"{r + 1}: overlap {o:.10f}"
                        )
                        break

    return _result(
        "switch-unitaries",
        t0,
        problems,
        f"{count} switches realized; worst unitarity {worst_unitary:.2e}, "
        f"worst line overlap {worst_match:.12f}",
    )


def check_constructions() -> CheckResult:
    """Stacking two four-qubit bases behind a fresh qubit gives a reducible
    five-qubit basis; the product of two generic irreducible three-qubit
    bases is irreducible, while any product with a reducible factor is
    reducible."""
    t0 = time.monotonic()
    problems: list[str] = []

    reps = dataset("n4-switching")
    a = instantiate(reps[0].matrix, 0)
    b = instantiate(reps[-1].matrix, 0)
    five = prepend_qubit(a, b)
    if five.dims != (2, 2, 2, 2, 2) or len(five.rows) != 32:
        problems.append("five-qubit construction has wrong shape")
    defect = gram_defect(five)
    if defect > GRAM_TOL:
        problems.append(f"five-qubit construction gram defect {defect:.2e}")
    got = is_reducible_numeric(five)
    want_split = (tuple(range(16)), tuple(range(16, 32)))
    if got is None or got[0] != 0 or got[1] != want_split:
        problems.append(f"five-qubit construction not split at the new qubit: {got}")

    maxi = dataset("n3-maximal")
    irr = next(f.matrix for f in maxi if is_reducible(f.matrix) is None)
    red = next(f.matrix for f in maxi if is_reducible(f.matrix) is not None)
    prod = tensor_opb(instantiate(irr, 0), instantiate(irr, 1))
    if gram_defect(prod) > GRAM_TOL:
        problems.append("irreducible x irreducible: gram defect too large")
    if is_reducible_numeric(prod) is not None:
        problems.append("irreducible x irreducible came out reducible")
    prod2 = tensor_opb(instantiate(red, 0), instantiate(irr, 1))
    if is_reducible_numeric(prod2) is None:
        problems.append("reducible factor did not make the product reducible")

    return _result(
        "constructions",
        t0,
        problems,
        f"five-qubit stack reducible at the new qubit (gram {defect:.2e}); "
        "product reducibility follows its factors",
    )


QUICK_CHECKS: tuple[tuple[str, Callable[[], CheckResult]], ...] = (
    ("small-census", check_small_census),
    ("four-qubit-catalog", check_four_qubit_catalog),
    ("multiplicity-bounds", check_multiplicity_bounds),
    ("order-diagram", check_order_diagram),
    ("equivalence-routes", check_equivalence_routes),
    ("numeric-instantiation", check_numeric_instantiation),
    ("switch-unitaries", check_switch_unitaries),
    ("constructions", check_constructions),
)
