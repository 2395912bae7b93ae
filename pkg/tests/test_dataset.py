import numpy as np
import orjson
import pytest
from numpy.testing import assert_allclose

from common import CsvParseError, DataError
from dataset.dataset_io import load_json, load_numeric_table, write_json
from dataset.dataset_profile import profile_dataset


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_loads_columns_and_dates(tmp_path):
    path = _write(tmp_path, "date,y,x\n2020-01-31,1.5,2\n2020-02-29, -0.5 ,3e-1\n")
    table = load_numeric_table(path)
    assert table.names == ("y", "x")
    assert table.dates == ("2020-01-31", "2020-02-29")
    assert table.rows == 2
    assert_allclose(table.column("x"), [2.0, 0.3])
    with pytest.raises(DataError):
        table.column("z")


def test_without_date_column(tmp_path):
    table = load_numeric_table(_write(tmp_path, "y,x\n1,2\n3,4\n"))
    assert table.dates is None
    assert_allclose(table.column("y"), [1.0, 3.0])


@pytest.mark.parametrize("body,line,column,reason", [
    ("y,x\n1,2\n3,abc\n", 3, "x", "not a number"),
    ("y,x\n1,2\n,4\n", 3, "y", "missing value"),
    ("y,x\n1,inf\n3,4\n", 2, "x", "not finite"),
])
def test_parse_errors_name_line_and_column(tmp_path, body, line, column, reason):
    with pytest.raises(CsvParseError) as info:
        load_numeric_table(_write(tmp_path, body))
    assert info.value.line == line
    assert info.value.column == column
    assert reason in str(info.value)


@pytest.mark.parametrize("dates", [["2020-02-01", "2020-01-01"], ["2020-01-01", "2020-01-01"], ["01/02/2020", "01/03/2020"]])
def test_invalid_dates(tmp_path, dates):
    body = "date,y\n" + "\n".join(f"{d},{i}" for i, d in enumerate(dates)) + "\n"
    with pytest.raises(CsvParseError):
        load_numeric_table(_write(tmp_path, body))


def test_missing_and_empty_files(tmp_path):
    with pytest.raises(DataError):
        load_numeric_table(str(tmp_path / "nope.csv"))
    with pytest.raises(DataError):
        load_numeric_table(_write(tmp_path, ""))
    with pytest.raises(DataError):
        load_numeric_table(_write(tmp_path, "y,x\n", name="header.csv"))


def test_selected_columns(tmp_path):
    path = _write(tmp_path, "y,x,z\n1,2,bad\n3,4,5\n")
    table = load_numeric_table(path, columns=["y", "x"])
    assert table.names == ("y", "x")
    with pytest.raises(DataError):
        load_numeric_table(path, columns=["w"])


def test_json_is_sorted_and_replaces_atomically(tmp_path):
    target = tmp_path / "out" / "report.json"
    write_json(str(target), {"b": 1, "a": np.array([1.0, 2.0])})
    text = target.read_text()
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    write_json(str(target), {"c": 3})
    assert orjson.loads(target.read_bytes()) == {"c": 3}
    assert [p.name for p in target.parent.iterdir()] == ["report.json"]


def test_load_json_errors(tmp_path):
    with pytest.raises(DataError):
        load_json(_write(tmp_path, "{not json", name="bad.json"))
    with pytest.raises(DataError):
        load_json(str(tmp_path / "missing.json"))


class TestProfile:
    def test_clean_file_is_ready(self, tmp_path):
        stats = profile_dataset(_write(tmp_path, "date,y,x\n2020-01-01,1,2\n2020-01-02,2,5\n2020-01-03,4,1\n"))
        assert stats['ready']
        assert stats['invalid_cells'] == 0
        assert stats['columns'] == ['y', 'x']
        assert stats['column_stats']['y']['mean'] == pytest.approx(7 / 3)
        assert stats['dates']['first'] == '2020-01-01'

    def test_problems_are_accumulated(self, tmp_path):
        body = "date,y,x,c\n2020-01-02,1,,7\n2020-01-01,abc,nan,7\n2020-01-03,2,3,7\n"
        stats = profile_dataset(_write(tmp_path, body))
        assert not stats['ready']
        assert stats['missing_cells'] == {'x': 1}
        assert stats['non_numeric_cells'] == {'y': 1}
        assert stats['non_finite_cells'] == {'x': 1}
        assert stats['constant_columns'] == ['c']
        assert stats['dates']['out_of_order'] == 1
        assert {e['line'] for e in stats['parse_errors']} == {2, 3}
