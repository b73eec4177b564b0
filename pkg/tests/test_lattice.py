import json
import random

import pytest

from opbkit.canonical import (
    _canonical_form_with_autos,
    are_equivalent,
    canonical_form,
    canonical_key,
    fixed_order_key,
)
from opbkit.core import OpbError, PatternMatrix, signature, standard_matrix
from opbkit.lattice import (
    ClassStore,
    _class_invariant,
    _fast_match,
    _materialize_split,
    _quotient_split_orbits,
    _split_descriptors,
    apply_switch,
    enumerate_classes,
    family_membership,
    hasse,
    identifications,
    is_maximal,
    splits,
    switching_orbit,
    switching_sites,
)
from opbkit.opbfile import dataset, serialize
from opbkit.verify import N3_NU_COUNTS, random_equivalent

from conftest import load_fixture, read_golden


def test_identifications_of_split_class():
    m = load_fixture("equiv-a.opb").matrix
    kids = identifications(m)
    # one class pair in one column, merged straight or crossed
    assert len(kids) == 2
    for kid in kids:
        assert are_equivalent(kid, standard_matrix(2))


def test_standard_has_no_identifications():
    assert identifications(standard_matrix(3)) == []


def test_splits_of_standard_two():
    out = splits(standard_matrix(2))
    assert len(out) == 2
    target = load_fixture("equiv-a.opb").matrix
    for child in out:
        assert are_equivalent(child, target)


def test_split_descriptors_are_normalized():
    for f in dataset("n3-classes")[:6]:
        m = f.matrix
        descs = _split_descriptors(m)
        assert len(set(descs)) == len(descs)
        for c, cls, moved in descs:
            occ = [r for r in range(len(m.rows)) if m.rows[r][c].cls == cls]
            assert min(occ) not in moved
            assert moved and set(moved) < set(occ)


def test_splits_and_identifications_are_inverse_steps():
    for f in dataset("n3-classes"):
        m = f.matrix
        key = canonical_key(m)
        for child in splits(m):
            assert signature(child).nu == signature(m).nu + 1
            assert key in {canonical_key(x) for x in identifications(child)}
        for kid in identifications(m):
            assert signature(kid).nu == signature(m).nu - 1
            assert key in {canonical_key(x) for x in splits(kid)}


def test_is_maximal_means_no_splits():
    for f in dataset("n3-classes"):
        assert is_maximal(f.matrix) == (not splits(f.matrix))


def test_bundled_maximal_matrices_are_maximal():
    for f in dataset("n3-maximal"):
        assert is_maximal(f.matrix)
    assert not is_maximal(standard_matrix(3))


def test_switching_sites_always_include_whole_grid():
    for f in dataset("n3-maximal"):
        sites = switching_sites(f.matrix)
        assert any(s.cols == (0, 1, 2) for s in sites)
        for s in sites:
            assert len(s.rows) == 2 ** len(s.cols)
            assert s.block.n == len(s.cols)


def test_apply_switch_identity_is_noop():
    m = load_fixture("switch-source.opb").matrix
    site = switching_sites(m)[0]
    assert apply_switch(m, site, range(len(site.cols))) == m


def test_apply_switch_realizes_recorded_target():
    src = load_fixture("switch-source.opb").matrix
    tgt = load_fixture("switch-target.opb").matrix
    site = next(s for s in switching_sites(src) if s.cols == (0, 1))
    got = apply_switch(src, site, (1, 0))
    assert fixed_order_key(got) == fixed_order_key(tgt)


def test_apply_switch_rejects_bad_perm():
    m = load_fixture("switch-source.opb").matrix
    site = switching_sites(m)[0]
    with pytest.raises(ValueError):
        apply_switch(m, site, (0, 0))


def test_apply_switch_rejects_shared_classes():
    m = standard_matrix(3)
    site = next(s for s in switching_sites(m) if len(s.cols) == 2)
    with pytest.raises(OpbError, match="shared between the site"):
        apply_switch(m, site, (1, 0))


def test_switch_preserves_validity_and_nu():
    for f in dataset("n3-maximal"):
        m = f.matrix
        for site in switching_sites(m):
            k = len(site.cols)
            perm = tuple(range(1, k)) + (0,)
            out = apply_switch(m, site, perm)
            assert signature(out).nu == signature(m).nu


def test_switching_orbit_requires_maximal_host():
    with pytest.raises(OpbError, match="maximal"):
        switching_orbit(standard_matrix(2))
    two = dataset("n2-classes")
    top = next(f.matrix for f in two if is_maximal(f.matrix))
    assert set(switching_orbit(top)) == {canonical_key(top)}


def test_three_qubit_maximal_orbits():
    keys = {canonical_key(f.matrix) for f in dataset("n3-maximal")}
    orbits = set()
    for f in dataset("n3-maximal"):
        orbit = switching_orbit(f.matrix)
        orbits.add(frozenset(orbit))
        assert len({signature(mat).nu for mat in orbit.values()}) == 1
    assert len(orbits) == 2
    assert sorted(len(o) for o in orbits) == [1, 2]
    assert set().union(*orbits) == keys


def test_family_membership():
    host = load_fixture("equiv-a.opb").matrix
    std = standard_matrix(2)
    assert family_membership(host, host, strict=True)
    assert family_membership(std, host)
    assert not family_membership(host, std)
    # same class, columns permuted: pinned columns must notice
    src = load_fixture("switch-source.opb").matrix
    tgt = load_fixture("switch-target.opb").matrix
    assert not family_membership(src, tgt, strict=True)


def test_enumerate_two_qubits():
    store = enumerate_classes(2)
    assert len(store) == 2
    assert not store.truncated
    assert len(store.maximal_keys()) == 1
    nus = sorted(rec.signature.nu for rec in store.records())
    assert nus == [2, 3]
    for field in ("canonicalizations", "wall_seconds", "jobs"):
        assert field in store.provenance


def test_enumerate_three_qubits():
    store = enumerate_classes(3)
    assert len(store) == 17
    assert len(store.maximal_keys()) == 3
    hist = {}
    for rec in store.records():
        hist[rec.signature.nu] = hist.get(rec.signature.nu, 0) + 1
    assert hist == N3_NU_COUNTS
    bundled = {canonical_key(f.matrix) for f in dataset("n3-classes")}
    assert bundled == set(store.keys())


def test_enumerate_parallel_matches_sequential():
    # the worker path skips the automorphism quotient; same classes must
    # come out either way
    one = enumerate_classes(3, jobs=1)
    two = enumerate_classes(3, jobs=2)
    assert set(one.keys()) == set(two.keys())
    assert one.maximal_keys() == two.maximal_keys()
    assert two.provenance["jobs"] == 2


def test_enumerate_honours_node_budget():
    store = enumerate_classes(3, node_budget=3)
    assert store.truncated
    assert "node budget" in store.provenance["truncated_reason"]
    with pytest.raises(OpbError, match="truncated"):
        hasse(store)


def test_hasse_matches_golden():
    store = enumerate_classes(3)
    edges = hasse(store)
    lines = read_golden("hasse-n3.golden").split()
    count = int(lines[0])
    keys = lines[1 : 1 + count]
    assert [k.hex for k in store.keys()] == keys
    want = set()
    for lo, up in zip(lines[1 + count :: 2], lines[2 + count :: 2]):
        want.add((keys[int(lo)], keys[int(up)]))
    assert {(lo.hex, up.hex) for lo, up in edges} == want


def test_hasse_refuses_incomplete_store():
    store = ClassStore(2)
    key, canon = canonical_form(load_fixture("equiv-a.opb").matrix)
    store.add(key, canon)
    with pytest.raises(OpbError, match="missing a class"):
        hasse(store)


def test_store_save_load_roundtrip(tmp_path):
    store = enumerate_classes(2)
    store.save(tmp_path / "s2")
    again = ClassStore.load(tmp_path / "s2", verify=True)
    assert again.n == 2
    assert again.keys() == store.keys()
    assert not again.truncated
    manifest = json.loads((tmp_path / "s2" / "manifest.json").read_text())
    assert manifest["count"] == 2
    assert manifest["format"] == 1


def test_store_load_verify_catches_tampering(tmp_path):
    store = enumerate_classes(2)
    store.save(tmp_path / "s2")
    victim = store.keys()[0]
    other = store.get(store.keys()[1]).matrix
    path = tmp_path / "s2" / f"{victim.hex}.opb"
    path.write_text(serialize(other))
    with pytest.raises(OpbError, match="stored key"):
        ClassStore.load(tmp_path / "s2", verify=True)
    # without verification the lie goes through; that is what verify is for
    ClassStore.load(tmp_path / "s2")


def test_class_invariant_is_class_invariant():
    rng = random.Random(3)
    for f in dataset("n3-classes"):
        inv = _class_invariant(f.matrix)
        for _ in range(3):
            assert _class_invariant(random_equivalent(f.matrix, rng)) == inv
    assert _class_invariant(standard_matrix(2)) != _class_invariant(
        load_fixture("equiv-a.opb").matrix
    )


def test_fast_match_agrees_with_canonical_route():
    rng = random.Random(11)
    mats = [random_equivalent(f.matrix, rng) for f in dataset("n3-classes")]
    undecided = 0
    for i, a in enumerate(mats):
        for j, b in enumerate(mats):
            got = _fast_match(a, b)
            if got is None:
                undecided += 1
            else:
                assert got == (i == j)
    assert undecided == 0


def test_fast_match_positive_on_four_qubits():
    rng = random.Random(13)
    for f in dataset("n4-switching")[:3]:
        assert _fast_match(random_equivalent(f.matrix, rng), f.matrix) is True


def test_fast_match_budget_returns_none():
    rng = random.Random(5)
    m = dataset("n3-classes")[-1].matrix
    assert _fast_match(random_equivalent(m, rng), m, node_budget=0) is None


def test_quotient_split_orbits_preserves_reachable_classes():
    for f in dataset("n3-classes"):
        key, canon, autos = _canonical_form_with_autos(f.matrix)
        descs = _split_descriptors(canon)
        kept = _quotient_split_orbits(canon, descs, autos)
        assert set(kept) <= set(descs)
        full = {canonical_key(child) for child in splits(canon)}
        reduced = {
            canonical_key(_materialize_split(canon, c, cls, moved))
            for c, cls, moved in kept
        }
        assert reduced == full
