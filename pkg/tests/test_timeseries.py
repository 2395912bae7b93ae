import numpy as np
import pytest
from numpy.testing import assert_allclose

from common import DataError, DegenerateColumnError, DimensionError, GroupStructureError
from core.timeseries import GroupStructure, TimeSeriesDataset, column_sd, standardize


def test_dataset_rejects_mismatched_rows():
    with pytest.raises(DimensionError):
        TimeSeriesDataset(np.zeros(5), np.zeros((4, 2)), ("a", "b"))


def test_dataset_rejects_duplicated_names():
    with pytest.raises(DataError, match="duplicated"):
        TimeSeriesDataset(np.zeros(3), np.zeros((3, 2)), ("a", "a"))


def test_dataset_rejects_non_finite_design():
    X = np.ones((3, 2))
    X[1, 1] = np.inf
    with pytest.raises(DataError, match="'b'"):
        TimeSeriesDataset(np.zeros(3), X, ("a", "b"))


def test_dataset_requires_increasing_dates():
    with pytest.raises(DataError, match="time-ordered"):
        TimeSeriesDataset(np.zeros(3), np.ones((3, 1)), ("a",), dates=("2020-01-01", "2020-03-01", "2020-02-01"))


def test_dataset_arrays_are_read_only(rng):
    y = rng.standard_normal(4)
    data = TimeSeriesDataset(y, rng.standard_normal((4, 2)), ("a", "b"))
    assert not data.y.flags.writeable
    assert not data.X.flags.writeable
    y[0] = 100.0
    assert data.y[0] != 100.0


def test_column_helpers(rng):
    data = TimeSeriesDataset(rng.standard_normal(6), rng.standard_normal((6, 3)), ("a", "b", "c"),
                             dates=tuple(f"2020-01-0{i + 1}" for i in range(6)))
    assert data.column_index("c") == 2
    dropped = data.drop_columns([1])
    assert dropped.column_names == ("a", "c")
    sub = data.take_rows([0, 2, 4])
    assert sub.T == 3
    assert sub.dates == ("2020-01-01", "2020-01-03", "2020-01-05")
    with pytest.raises(DataError):
        data.column_index("z")


class TestGroupStructure:
    def test_overlap_names_the_index(self):
        groups = GroupStructure((("g1", (0, 1)), ("g2", (1, 2))))
        with pytest.raises(GroupStructureError) as info:
            groups.validate(3)
        assert info.value.index == 1

    def test_missing_coverage(self):
        groups = GroupStructure((("g1", (0,)), ("g2", (2,))))
        with pytest.raises(GroupStructureError, match="index 1"):
            groups.validate(3)

    def test_empty_group(self):
        with pytest.raises(GroupStructureError, match="empty"):
            GroupStructure((("g1", ()), ("g2", (0,)))).validate(1)

    def test_out_of_range(self):
        with pytest.raises(GroupStructureError):
            GroupStructure((("g1", (0, 5)),)).validate(2)

    def test_from_mapping_keeps_unlisted_columns_as_singletons(self):
        groups = GroupStructure.from_mapping({"news": ["b", "c"]}, ["a", "b", "c", "d"])
        assert groups.names == ("news", "a", "d")
        assert groups.index_of("news") == (1, 2)
        assert groups.sizes == (2, 1, 1)
        assert groups.p == 4

    def test_from_mapping_unknown_column(self):
        with pytest.raises(GroupStructureError, match="unknown column"):
            GroupStructure.from_mapping({"g": ["zz"]}, ["a"])

    def test_from_labels(self):
        groups = GroupStructure.from_labels(["x", "y", "x"])
        assert groups.groups == (("x", (0, 2)), ("y", (1,)))


def test_standardize_moments(rng):
    X = rng.standard_normal((50, 3)) * [1.0, 5.0, 0.1] + [10.0, -3.0, 0.0]
    y = rng.standard_normal(50) + 7.0
    data, record = standardize(TimeSeriesDataset(y, X, ("a", "b", "c")))
    assert_allclose(data.X.mean(axis=0), 0.0, atol=1e-14)
    assert_allclose(column_sd(data.X), 1.0, rtol=1e-12)
    assert_allclose(data.y.mean(), 0.0, atol=1e-13)
    # la respuesta solo se centra
    assert_allclose(column_sd(data.y[:, None]), column_sd(y[:, None]), rtol=1e-12)
    assert_allclose(record.invert(data).X, X, rtol=1e-12, atol=1e-12)


def test_standardize_rejects_constant_column(rng):
    X = np.column_stack([rng.standard_normal(10), np.full(10, 3.0)])
    with pytest.raises(DegenerateColumnError) as info:
        standardize(TimeSeriesDataset(rng.standard_normal(10), X, ("a", "flat")))
    assert info.value.column == "flat"


def test_coefficients_to_original(rng):
    X = rng.standard_normal((40, 2)) * [2.0, 0.5]
    beta = np.array([1.0, -2.0])
    y = X @ beta
    data, record = standardize(TimeSeriesDataset(y, X, ("a", "b")))
    scaled, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    assert_allclose(record.coefficients_to_original(scaled), beta, rtol=1e-10)
