import pytest

from opbkit.core import (
    Entry,
    InvalidMatrixError,
    PatternMatrix,
    is_reducible,
    multiplicity,
    orthogonality_witnesses,
    signature,
    standard_matrix,
    validate,
)

from conftest import load_fixture


def test_entry_flip():
    e = Entry(3, False)
    assert e.flip() == Entry(3, True)
    assert e.flip().flip() == e


def test_standard_matrix_shape():
    for n in range(1, 5):
        m = standard_matrix(n)
        assert m.n == n
        assert len(m.rows) == 2 ** n
        assert m.num_classes == (1,) * n
        assert validate(m).ok


def test_standard_matrix_polarity_layout():
    m = standard_matrix(3)
    # row i spells i in binary, least significant digit first
    for i, row in enumerate(m.rows):
        assert [e.perp for e in row] == [bool(i >> c & 1) for c in range(3)]


def test_standard_matrix_rejects_bad_n():
    with pytest.raises(ValueError):
        standard_matrix(0)
    with pytest.raises(ValueError):
        standard_matrix(7)


def test_constructor_rejects_bad_grids():
    with pytest.raises(ValueError):
        PatternMatrix([])
    with pytest.raises(ValueError):
        PatternMatrix([[(0, 0), (0, 0)], [(0, 1)]])
    with pytest.raises(ValueError):
        PatternMatrix([[(0, 0)] * 7])
    with pytest.raises(ValueError):
        PatternMatrix([[(0, 0)]] * 65)


def test_constructor_accepts_plain_tuples():
    m = PatternMatrix([[(0, 0)], [(0, 1)]])
    assert m.rows[0][0] == Entry(0, False)
    assert m.rows[1][0] == Entry(0, True)


def test_class_ids_renumbered_dense():
    sparse = PatternMatrix([[(7, 0)], [(7, 1)]])
    assert sparse == standard_matrix(1)
    mixed = PatternMatrix([[(5, 0), (9, 0)], [(5, 1), (9, 0)],
                           [(2, 0), (9, 1)], [(2, 1), (9, 1)]])
    assert mixed.num_classes == (2, 1)
    assert mixed.rows[0][0].cls == 0
    assert mixed.rows[2][0].cls == 1


def test_equality_ignores_names():
    m = load_fixture("equiv-a.opb").matrix
    renamed = m.with_names([["u"], ["v", "w"]])
    assert renamed == m
    assert hash(renamed) == hash(m)
    assert renamed.column_name(1, Entry(0, True)) == "v'"


def test_with_names_checks_shape():
    m = load_fixture("equiv-a.opb").matrix
    with pytest.raises(ValueError):
        m.with_names([["u"], ["v"]])


def test_validate_accepts_fixture():
    assert validate(load_fixture("equiv-a.opb").matrix).ok


def test_validate_reports_missing_witness():
    m = load_fixture("invalid-dup-row.opb").matrix
    report = validate(m)
    assert not report.ok
    kinds = {v.kind for v in report.violations}
    assert "orthogonality" in kinds
    pair = next(v for v in report.violations if v.kind == "orthogonality")
    assert pair.rows == (0, 1)


def test_validate_reports_unbalanced_class():
    report = validate(load_fixture("invalid-unbalanced.opb").matrix)
    assert not report.ok
    bal = [v for v in report.violations if v.kind == "balance"]
    assert bal and bal[0].column == 1


def test_validate_reports_row_count():
    m = load_fixture("equiv-a.opb").matrix
    short = PatternMatrix(m.rows[:3])
    report = validate(short)
    assert any(v.kind == "row-count" for v in report.violations)
    assert "expected 4 rows" in str(report)


def test_orthogonality_witnesses():
    m = load_fixture("equiv-a.opb").matrix
    assert orthogonality_witnesses(m, 0, 1) == {1}
    assert orthogonality_witnesses(m, 0, 2) == {0}
    assert orthogonality_witnesses(m, 2, 3) == {1}
    with pytest.raises(ValueError):
        orthogonality_witnesses(m, 1, 1)


def test_multiplicity():
    m = load_fixture("equiv-a.opb").matrix
    assert multiplicity(m, 0, 0) == (2, 2)
    assert multiplicity(m, 1, 0) == (1, 1)
    with pytest.raises(LookupError):
        multiplicity(m, 2, 0)
    with pytest.raises(LookupError):
        multiplicity(m, 1, 5)


def test_signature_matches_declared_header():
    # the fixture declares its own signature; parsing already cross-checks
    m = load_fixture("equiv-a.opb").matrix
    sig = signature(m)
    assert str(sig) == "2 | 1^2"
    assert sig.nu == 3


def test_signature_is_column_order_free():
    a = load_fixture("switch-source.opb").matrix
    b = load_fixture("switch-target.opb").matrix
    assert signature(a) == signature(b)


def test_signature_refuses_invalid():
    m = load_fixture("invalid-dup-row.opb").matrix
    with pytest.raises(InvalidMatrixError):
        signature(m)


def test_run_length_formatting():
    m = standard_matrix(2)
    assert str(signature(m)) == "2 | 2"


def test_is_reducible():
    assert is_reducible(standard_matrix(3)) == 0
    assert is_reducible(load_fixture("equiv-a.opb").matrix) == 0
    # every column of this one carries two classes
    assert is_reducible(load_fixture("compact-five-rows.opb").matrix) is None
