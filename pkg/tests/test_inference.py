import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from common import ConfigError, DegenerateVarianceError, DimensionError, RankDeficiencyError
from core.timeseries import GroupStructure, TimeSeriesDataset
from hac.hac import KernelSpec, LongRunVariance, hac_estimate, score_series
from inference.inference import (
    Z_975,
    DebiasedEstimate,
    confidence_interval,
    debias,
    generalized_inverse,
    granger_report_entry,
    pivot,
    wald_test,
)
from nodewise.nodewise import PrecisionEstimate, estimate_precision_matrix, estimate_precision_rows
from sglasso.sglasso import PenaltySpec, fit_sglasso

from conftest import orthonormal_design, sparse_dataset


def _estimate(values, group=(0, 1)):
    values = np.asarray(values, dtype=float)
    return DebiasedEstimate(values, np.zeros_like(values), tuple(group), values.copy())


def _xi(matrix, group=(0, 1)):
    return LongRunVariance(np.asarray(matrix, dtype=float), KernelSpec("parzen", 5), tuple(group))


def test_orthonormal_design_debiases_to_least_squares(rng):
    X = orthonormal_design(rng, 120, 4)
    y = X @ np.array([1.0, 0.0, -0.5, 0.0]) + 0.3 * rng.standard_normal(120)
    data = TimeSeriesDataset(y, X, ("a", "b", "c", "d"))
    fit = fit_sglasso(data, PenaltySpec(0.1, 1.0, GroupStructure.singletons(4)))
    prec = estimate_precision_matrix(data, lambdas=0.1)
    assert_allclose(prec.matrix(), np.eye(4), atol=1e-8)
    est = debias(fit, prec, data)
    assert_allclose(est.beta_debiased, X.T @ y / 120, atol=1e-8)
    assert_allclose(est.beta_hat + est.bias_correction, est.beta_debiased)


def test_debias_subset_of_rows(rng):
    data, _ = sparse_dataset(rng)
    fit = fit_sglasso(data, PenaltySpec(0.05, 1.0, GroupStructure.singletons(data.p)))
    prec = estimate_precision_rows(data, [2, 0], lambdas=0.05)
    est = debias(fit, prec, data)
    assert est.group == (2, 0)
    assert est.position(0) == 1
    with pytest.raises(DimensionError):
        est.position(5)
    with pytest.raises(DimensionError):
        debias(fit, prec, data, group=[1])


def test_pivot_and_interval():
    est = _estimate([0.5, -0.1])
    xi = _xi(np.diag([4.0, 4.0]))
    assert pivot(est, xi, 0, 0.1, 100) == pytest.approx(2.0)
    low, high = confidence_interval(est, xi, 0, 100)
    assert low == pytest.approx(0.5 - Z_975 * 0.2)
    assert high == pytest.approx(0.5 + Z_975 * 0.2)
    low90, high90 = confidence_interval(est, xi, 1, 100, level=0.9)
    assert high90 - low90 == pytest.approx(2 * 1.6448536269514722 * 0.2, rel=1e-9)


def test_interval_errors():
    est = _estimate([0.5, -0.1])
    with pytest.raises(DegenerateVarianceError):
        confidence_interval(est, _xi(np.diag([0.0, 4.0])), 0, 100)
    with pytest.raises(ConfigError):
        confidence_interval(est, _xi(np.eye(2)), 0, 100, level=1.0)


def test_wald_with_identity_restrictions():
    result = wald_test(_estimate([0.5, -0.1]), _xi(np.diag([4.0, 4.0])), None, 100)
    assert result.wald_stat == pytest.approx(6.5)
    assert result.dof == 2
    assert result.p_value == pytest.approx(math.exp(-3.25))
    assert not result.rank_reduced
    assert result.kernel_kind == "parzen"
    assert len(result.ci_per_coordinate) == 2


def test_wald_at_zero_estimate():
    result = wald_test(_estimate([0.0, 0.0]), _xi(np.eye(2)), None, 50)
    assert result.wald_stat == 0.0
    assert result.p_value == 1.0


def test_wald_single_contrast():
    result = wald_test(_estimate([0.5, -0.1]), _xi(np.diag([4.0, 4.0])), np.array([[1.0, -1.0]]), 100)
    assert result.wald_stat == pytest.approx(4.5)
    assert result.dof == 1
    assert result.nominal_rows == 1


@pytest.mark.parametrize("R,rows", [
    ([[1.0, 0.0], [2.0, 0.0]], (1,)),
    ([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], (2,)),
])
def test_rank_deficient_restrictions(R, rows):
    with pytest.raises(RankDeficiencyError) as info:
        wald_test(_estimate([0.5, -0.1]), _xi(np.eye(2)), np.array(R), 100)
    assert info.value.rows == rows


def test_singular_long_run_variance_reduces_dof():
    result = wald_test(_estimate([0.3, 0.3]), _xi([[1.0, 1.0], [1.0, 1.0]]), None, 100)
    assert result.rank_reduced
    assert result.dof == 1
    assert result.nominal_rows == 2
    # Ξ⁺ = vv'/2 con v = (1,1)/√2
    assert result.wald_stat == pytest.approx(9.0)


def test_generalized_inverse():
    inverse, rank = generalized_inverse(np.diag([2.0, 0.0, 4.0]))
    assert rank == 2
    assert_allclose(inverse, np.diag([0.5, 0.0, 0.25]))


def test_granger_pipeline_detects_signal(rng):
    data, _ = sparse_dataset(rng, T=400, p=6, active=(0,), noise=0.5)
    fit = fit_sglasso(data, PenaltySpec(0.05, 1.0, GroupStructure.singletons(data.p)))
    for group, significant in (((0,), True), ((4, 5), False)):
        prec = estimate_precision_rows(data, group, lambdas=0.05)
        est = debias(fit, prec, data)
        xi = hac_estimate(score_series(fit.residuals, data, prec), KernelSpec("parzen", 10), group)
        result = wald_test(est, xi, None, data.T)
        if significant:
            assert result.p_value < 1e-6
        else:
            assert result.wald_stat < 30.0


def test_report_entry():
    est = _estimate([0.5, -0.1])
    result = wald_test(est, _xi(np.diag([4.0, 4.0])), None, 100)
    entry = granger_report_entry("x", result, est, ("a", "b"), 100)
    assert set(entry) == {
        "group_name", "bandwidth", "kernel", "wald", "dof", "nominal_dof", "rank_reduced", "p_value",
        "per_coefficient",
    }
    assert [c["name"] for c in entry["per_coefficient"]] == ["a", "b"]
    assert entry["per_coefficient"][0]["se"] == pytest.approx(0.2)


def test_exact_precision_gives_least_squares(rng):
    data, _ = sparse_dataset(rng, T=150, p=5)
    fit = fit_sglasso(data, PenaltySpec(0.1, 1.0, GroupStructure.singletons(5)))
    theta = np.linalg.inv(data.X.T @ data.X / data.T)
    prec = PrecisionEstimate(rows={j: theta[j] for j in range(5)}, requested=tuple(range(5)), nodewise_rows={})
    ols, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    assert_allclose(debias(fit, prec, data).beta_debiased, ols, atol=1e-8)


def test_single_coefficient_wald_is_squared_pivot(rng):
    data, _ = sparse_dataset(rng, T=300, p=6, active=(0, 1))
    fit = fit_sglasso(data, PenaltySpec(0.05, 1.0, GroupStructure.singletons(data.p)))
    for j in (0, 4):
        prec = estimate_precision_rows(data, [j], lambdas=0.05)
        est = debias(fit, prec, data)
        xi = hac_estimate(score_series(fit.residuals, data, prec), KernelSpec("parzen", 8), (j,))
        result = wald_test(est, xi, None, data.T)
        assert result.dof == 1
        assert_allclose(result.wald_stat, pivot(est, xi, j, 0.0, data.T) ** 2, rtol=1e-10)


def test_wald_invariant_to_restriction_basis(rng):
    est = _estimate([0.5, -0.1, 0.3], group=(0, 1, 2))
    A = rng.standard_normal((3, 3))
    xi = _xi(A @ A.T + np.eye(3), group=(0, 1, 2))
    R = np.array([[1.0, -1.0, 0.0], [0.5, 0.5, 2.0]])
    q = np.array([0.2, -0.4])
    mix = np.array([[2.0, 1.0], [-0.5, 3.0]])
    base = wald_test(est, xi, R, 100, q)
    mixed = wald_test(est, xi, mix @ R, 100, mix @ q)
    assert mixed.dof == base.dof == 2
    assert_allclose(mixed.wald_stat, base.wald_stat, rtol=1e-10)
    assert_allclose(mixed.p_value, base.p_value, rtol=1e-9)
