"""Acceptance gate.

One test per checkable claim group.  Each runs the corresponding check
from opbkit.verify, prints its single PASS/FAIL line, and asserts both the
verdict and the stated runtime budget.  The four-qubit exhaustive
enumeration runs once (module-scoped fixture) and is shared by the checks
that sweep its classes.
"""

import json

import pytest

from opbkit.lattice import enumerate_classes
from opbkit.verify import (
    check_constructions,
    check_equivalence_routes,
    check_exhaustive_search,
    check_four_qubit_catalog,
    check_multiplicity_bounds,
    check_numeric_instantiation,
    check_order_diagram,
    check_small_census,
    check_switch_unitaries,
)

from conftest import read_golden

CENSUS = json.loads(read_golden("class-counts.golden"))


@pytest.fixture(scope="module")
def exhaustive():
    return check_exhaustive_search(expected_total=CENSUS["n4"]["total"])


def test_criterion_1_small_system_census():
    res = check_small_census()
    print(res.line())
    assert res.seconds < 10, f"budget: {res.seconds:.1f}s >= 10s"
    assert res.passed, res.detail


def test_criterion_2_four_qubit_catalog():
    res = check_four_qubit_catalog()
    print(res.line())
    assert res.seconds < 120, f"budget: {res.seconds:.1f}s >= 120s"
    assert res.passed, res.detail


def test_criterion_3_independent_enumeration(exhaustive):
    res, _store = exhaustive
    print(res.line())
    assert res.seconds <= 4 * 3600, f"budget: {res.seconds:.1f}s > 4h"
    assert res.passed, res.detail


def test_enumeration_reproduces_frozen_census(exhaustive):
    # regression pin of the enumerator's actual output, independent of the
    # catalog comparison above
    _res, store = exhaustive
    assert not store.truncated
    assert len(store) == CENSUS["n4"]["total"]
    by_nu = {}
    for rec in store.records():
        by_nu[str(rec.signature.nu)] = by_nu.get(str(rec.signature.nu), 0) + 1
    assert by_nu == CENSUS["n4"]["by_nu"]
    assert sorted(k.hex for k in store.maximal_keys()) == sorted(
        CENSUS["n4"]["maximal_keys"]
    )


def test_criterion_4_multiplicity_bounds(exhaustive):
    _res, store4 = exhaustive
    stores = (enumerate_classes(2), enumerate_classes(3), store4)
    res = check_multiplicity_bounds(stores=stores)
    print(res.line())
    assert res.passed, res.detail


def test_criterion_5_order_diagram():
    lines = read_golden("hasse-n3.golden").split()
    count = int(lines[0])
    keys = lines[1 : 1 + count]
    pairs = lines[1 + count :]
    golden_edges = {
        (keys[int(pairs[i])], keys[int(pairs[i + 1])])
        for i in range(0, len(pairs), 2)
    }
    res = check_order_diagram(golden_edges)
    print(res.line())
    assert res.passed, res.detail


def test_criterion_6_equivalence_routes():
    res = check_equivalence_routes(pairs=500, chains=100, seed=0)
    print(res.line())
    assert res.passed, res.detail


def test_criterion_7_numeric_instantiation():
    res = check_numeric_instantiation(seeds=10)
    print(res.line())
    assert res.passed, res.detail


def test_criterion_8_switch_unitaries():
    res = check_switch_unitaries()
    print(res.line())
    assert res.passed, res.detail


def test_criterion_9_constructions():
    res = check_constructions()
    print(res.line())
    assert res.passed, res.detail
