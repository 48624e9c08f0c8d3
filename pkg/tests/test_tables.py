import math

import pytest
from hypothesis import given, settings, strategies as st

from openrabi import tables

SCHEMA = [("a", "float"), ("z", "complex"), ("k", "int"), ("s", "str"), ("b", "bool")]

finite = st.floats(allow_nan=False, allow_infinity=True, width=64)
rows = st.lists(st.tuples(
    finite, st.complex_numbers(allow_nan=False), st.integers(-10**12, 10**12),
    st.text(alphabet=st.characters(blacklist_characters=",\r\n", blacklist_categories=("Cs",)), max_size=12),
    st.booleans()), max_size=20)


@settings(max_examples=60, deadline=None)
@given(rows)
def test_round_trip_is_lossless(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("t") / "x.csv"
    tables.emit_table(path, "test", {"k": 1}, SCHEMA, data)
    t = tables.read_table(path)
    assert t.schema == SCHEMA
    assert len(t.rows()) == len(data)
    for got, want in zip(t.rows(), data):
        assert got[0] == want[0] or (math.isnan(got[0]) and math.isnan(want[0]))
        assert got[1] == want[1]
        assert got[2:] == want[2:]


def test_nan_and_none_round_trip(tmp_path):
    path = tmp_path / "x.csv"
    tables.emit_table(path, "test", {}, [("a", "float"), ("z", "complex")], [(None, None), (math.nan, 1j)])
    t = tables.read_table(path)
    assert math.isnan(t.columns["a"][0]) and math.isnan(t.columns["z"][0].real)
    assert t.columns["z"][1] == 1j


def test_seventeen_digits():
    assert tables.fmt_float(0.1) == "0.10000000000000001"
    assert float(tables.fmt_float(math.pi)) == math.pi


def test_complex_expands_to_two_columns():
    assert tables.expand_schema([("w", "complex"), ("t", "float")]) == ["w_re", "w_im", "t"]
    with pytest.raises(ValueError):
        tables.expand_schema([("w", "matrix")])


def test_empty_table_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    assert tables.emit_table(path, "test", {"a": 1}, SCHEMA, []) == 0
    text = path.read_text().splitlines()
    assert all(line.startswith("#") for line in text[:-1])
    assert text[-1] == ",".join(tables.expand_schema(SCHEMA))
    assert tables.count_data_rows(path) == 0
    assert len(tables.read_table(path)) == 0


def test_header_metadata(tmp_path):
    path = tmp_path / "h.csv"
    tables.emit_table(path, "mode-x", {"b": 2, "a": 1}, SCHEMA, [], extra={"note": [1, 2]})
    meta = tables.read_table(path).meta
    assert meta["mode"] == "mode-x"
    assert meta["config"] == {"a": 1, "b": 2}
    assert set(meta["versions"]) >= {"numpy", "scipy", "openrabi"}
    assert "alpha" in meta["conventions"]
    assert meta["note"] == [1, 2]


def test_output_is_byte_deterministic(tmp_path):
    data = [(0.1, 1 + 2j, 3, "x", True)]
    tables.emit_table(tmp_path / "a.csv", "m", {"q": 1}, SCHEMA, data)
    tables.emit_table(tmp_path / "b.csv", "m", {"q": 1}, SCHEMA, data)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_manifest(tmp_path):
    tables.write_manifest(tmp_path, "m", {"q": 1}, [{"name": "a.csv"}], status="partial", completed_cells=4)
    m = tables.read_manifest(tmp_path)
    assert m["status"] == "partial" and m["completed_cells"] == 4
    assert m["config_hash"] == tables.config_hash({"q": 1})
    assert tables.read_manifest(tmp_path / "missing") is None


def test_config_hash_is_order_independent():
    assert tables.config_hash({"a": 1, "b": 2}) == tables.config_hash({"b": 2, "a": 1})
    assert tables.config_hash({"a": 1}) != tables.config_hash({"a": 2})


def test_unwritable_path_raises_io_error(tmp_path):
    with pytest.raises(tables.IoError):
        tables.emit_table(tmp_path / "no" / "such" / "x.csv", "m", {}, SCHEMA, [])


def test_header_mismatch_detected(tmp_path):
    path = tmp_path / "x.csv"
    tables.emit_table(path, "m", {}, SCHEMA, [])
    text = path.read_text().replace("z_re,z_im", "z")
    path.write_text(text)
    with pytest.raises(tables.IoError):
        tables.read_table(path)
