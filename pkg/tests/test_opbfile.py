import pytest

from opbkit.core import PatternMatrix, standard_matrix, validate
from opbkit.opbfile import (
    OpbParseError,
    atomic_write_text,
    dataset,
    expand_fragment,
    load,
    parse,
    serialize,
)

from conftest import DATA, load_fixture


def test_parse_requires_n():
    with pytest.raises(OpbParseError, match="missing required header 'n'"):
        parse("a\na'\n")


def test_parse_rejects_bad_n():
    with pytest.raises(OpbParseError, match="outside supported range"):
        parse("n = 0\n")
    with pytest.raises(OpbParseError, match="must be an integer"):
        parse("n = two\n")


def test_parse_rejects_unknown_header():
    with pytest.raises(OpbParseError, match="unknown header key"):
        parse("n = 1\ncolor = red\na\na'\n")


def test_parse_rejects_duplicate_header():
    with pytest.raises(OpbParseError, match="duplicate header"):
        parse("n = 1\nn = 1\na\na'\n")


def test_parse_rejects_header_after_rows():
    with pytest.raises(OpbParseError, match="header line after matrix rows"):
        parse("n = 1\na\nname = late\na'\n")


def test_parse_rejects_bad_token():
    with pytest.raises(OpbParseError, match="bad token"):
        parse("n = 1\nA\nA'\n")


def test_parse_rejects_wrong_token_count():
    with pytest.raises(OpbParseError, match="expected 2 tokens"):
        parse("n = 2\na\n")


def test_parse_rejects_wrong_row_count():
    with pytest.raises(OpbParseError, match="expands to 3 rows"):
        load(DATA / "invalid-row-count.opb")


def test_parse_rejects_cross_column_name():
    with pytest.raises(OpbParseError, match="used in columns 1 and 2"):
        load(DATA / "invalid-cross-column.opb")


def test_parse_rejects_wrong_declared_nu():
    with pytest.raises(OpbParseError, match="declared nu = 2"):
        load(DATA / "invalid-bad-nu.opb")


def test_parse_rejects_wrong_declared_signature():
    with pytest.raises(OpbParseError, match="declared signature"):
        load(DATA / "invalid-signature.opb")


def test_declared_headers_on_invalid_matrix():
    text = "n = 2\nnu = 3\na b\na b\na' c\na' c'\n"
    with pytest.raises(OpbParseError, match="matrix is invalid"):
        parse(text)


def test_parse_strips_comments_and_blanks():
    f = parse("# leading\nn = 1\n\na   # trailing\na'\n")
    assert f.matrix == standard_matrix(1)


def test_zero_one_shorthand():
    f = parse("n = 1\n0\n1\n")
    assert f.matrix == standard_matrix(1)


def test_star_expansion_in_full_file():
    # each star takes a fresh name per expansion branch, so the second
    # column ends up split, not single-class
    f = parse("n = 2\n* *\n")
    assert f.matrix == load_fixture("equiv-a.opb").matrix


def test_invalid_matrices_still_parse():
    # validation is a separate step unless headers promise a signature
    f = load(DATA / "invalid-dup-row.opb")
    assert not validate(f.matrix).ok


def _normalize(token_rows):
    # per-column dense renumbering in first-occurrence order, so two
    # expansions compare equal exactly when they differ only in fresh names
    ids = [{} for _ in token_rows[0]]
    out = []
    for row in token_rows:
        entries = []
        for c, t in enumerate(row):
            base, perp = (t[:-1], True) if t.endswith("'") else (t, False)
            if base not in ids[c]:
                ids[c][base] = len(ids[c])
            entries.append((ids[c][base], perp))
        out.append(tuple(entries))
    return tuple(out)


def test_expand_fragment_matches_recorded_expansion():
    fragment = (DATA / "two-row-fragment.txt").read_text()
    expected = [
        line.split()
        for line in (DATA / "two-row-fragment-expanded.txt").read_text().splitlines()
        if line.strip()
    ]
    got = expand_fragment(fragment, 4)
    assert _normalize(got) == _normalize(expected)


def test_expand_fragment_keeps_zero_one():
    got = expand_fragment("0 *\n", 2)
    assert _normalize(got) == _normalize([["0", "x"], ["0", "x'"]])


def test_expand_fragment_rejects_bad_width():
    with pytest.raises(OpbParseError):
        expand_fragment("a b\n", 3)


def test_serialize_roundtrip_plain():
    for group in ("n2-classes", "n3-classes"):
        for f in dataset(group):
            again = parse(serialize(f.matrix))
            assert again.matrix == f.matrix


def test_serialize_roundtrip_compact():
    m = load_fixture("compact-five-rows.opb").matrix
    again = parse(serialize(m, compact=True))
    assert again.matrix == m


def test_compact_output_uses_shorthand():
    m = load_fixture("compact-five-rows.opb").matrix
    text = serialize(m, compact=True)
    body = [l for l in text.splitlines() if l and "=" not in l]
    assert len(body) < len(m.rows)
    assert any("*" in l for l in body) or any("0" in l for l in body)


def test_serialize_declares_signature_when_valid():
    text = serialize(load_fixture("equiv-a.opb").matrix)
    assert "signature = 2 | 1^2" in text
    assert "nu = 3" in text


def test_serialize_omits_signature_when_invalid():
    m = load_fixture("equiv-a.opb").matrix
    text = serialize(PatternMatrix(m.rows[:3]))
    assert "signature" not in text and "nu" not in text


def test_serialize_name_header_roundtrip():
    text = serialize(load_fixture("equiv-a.opb").matrix, name="demo")
    assert parse(text).name == "demo"


def test_serialize_renames_colliding_display_names():
    # both columns call their class "a"; output must stay parseable
    m = standard_matrix(2).with_names([["a"], ["a"]])
    again = parse(serialize(m))
    assert again.matrix == m


def test_atomic_write(tmp_path):
    target = tmp_path / "out.opb"
    atomic_write_text(target, "n = 1\na\na'\n")
    assert target.read_text().startswith("n = 1")
    assert list(tmp_path.iterdir()) == [target]


def test_load_records_path():
    f = load(DATA / "equiv-a.opb")
    assert f.path == DATA / "equiv-a.opb"
    assert f.name == "equiv-a"


def test_dataset_groups():
    sizes = {
        "n2-classes": 2,
        "n3-maximal": 3,
        "n3-classes": 17,
        "n4-switching": 15,
        "n4-classes": 33,
    }
    for group, size in sizes.items():
        files = dataset(group)
        assert len(files) == size
        names = [f.path.name for f in files]
        assert names == sorted(names)
        for f in files:
            assert validate(f.matrix).ok


def test_dataset_unknown_group():
    with pytest.raises(OSError):
        dataset("no-such-group")
