import numpy as np
import pytest

from common import ConfigError
from core.timeseries import GroupStructure, TimeSeriesDataset
from sglasso.cv import cv_select, fold_boundaries
from sglasso.sglasso import PenaltySpec, SolverSettings, fit_sglasso

from conftest import sparse_dataset


class TestFoldBoundaries:
    def test_equal_blocks(self):
        assert fold_boundaries(100, 10)[:2] == ((0, 10), (10, 20))
        assert fold_boundaries(100, 10)[-1] == (90, 100)

    def test_uneven_blocks_cover_every_row(self):
        bounds = fold_boundaries(23, 4)
        assert bounds[0][0] == 0
        assert bounds[-1][1] == 23
        for (_, stop), (start, _) in zip(bounds, bounds[1:]):
            assert stop == start

    @pytest.mark.parametrize("T,folds", [(100, 1), (10, 6), (3, 2)])
    def test_invalid_fold_counts(self, T, folds):
        with pytest.raises(ConfigError):
            fold_boundaries(T, folds)


def test_ties_go_to_the_largest_lambda():
    X = np.random.default_rng(3).standard_normal((60, 3))
    data = TimeSeriesDataset(np.zeros(60), X, ("a", "b", "c"))
    result = cv_select(data, GroupStructure.singletons(3), alpha=1.0, n_folds=5, grid=[1.0, 0.5, 0.1])
    assert np.all(result.cv_errors == 0.0)
    assert result.selected_lambda == 1.0
    assert result.selected_index == 0


def test_grid_must_be_strictly_decreasing(rng):
    data, _ = sparse_dataset(rng)
    with pytest.raises(ConfigError):
        cv_select(data, GroupStructure.singletons(data.p), 1.0, n_folds=5, grid=[0.1, 0.2])
    with pytest.raises(ConfigError):
        cv_select(data, GroupStructure.singletons(data.p), 1.0, n_folds=5, grid=[0.2, 0.2])


def test_caller_grid_is_not_modified(rng):
    data, _ = sparse_dataset(rng)
    grid = [0.5, 0.1, 0.01]
    result = cv_select(data, GroupStructure.singletons(data.p), 1.0, n_folds=5, grid=grid)
    assert grid == [0.5, 0.1, 0.01]
    assert result.cv_errors.shape == (3, 5)
    assert not result.lambda_grid.flags.writeable


def test_strong_signal_selects_an_interior_lambda(rng):
    data, beta = sparse_dataset(rng, T=300, p=10, noise=0.3)
    groups = GroupStructure.singletons(data.p)
    settings = SolverSettings(grid_size=20, grid_min_ratio=1e-3)
    result = cv_select(data, groups, 1.0, n_folds=5, settings=settings)
    assert result.lambda_grid.shape == (20,)
    assert result.selected_lambda < result.lambda_grid[0]
    fit = fit_sglasso(data, PenaltySpec(result.selected_lambda, 1.0, groups), settings)
    assert set(np.flatnonzero(beta)) <= set(fit.support.tolist())


def test_curve_is_serializable(rng):
    data, _ = sparse_dataset(rng)
    result = cv_select(data, GroupStructure.single(data.p), 0.0, n_folds=4, grid=[1.0, 0.1])
    curve = result.curve()
    assert [point["lambda"] for point in curve] == [1.0, 0.1]
    assert all(isinstance(point["mean_mse"], float) for point in curve)
