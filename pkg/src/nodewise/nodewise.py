"""
Estimación de la matriz de precisión por regresiones LASSO nodewise.

Para cada columna j se regresa X_j sobre X_{-j}:
    γ̂_j = argmin ‖X_j - X_{-j}γ‖²_T + 2λ_j|γ|₁
    σ̂²_j = ‖X_j - X_{-j}γ̂_j‖²_T + λ_j|γ̂_j|₁
y la fila de Θ̂ es Θ̂_j = σ̂_j⁻²(1, -γ̂_j') con las coordenadas devueltas al
orden original de columnas (Θ̂ = B̂⁻¹Ĉ).

Solo se calculan las filas pedidas; las filas son independientes y pueden
calcularse en paralelo con `n_jobs`.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from common import ConfigError, DimensionError, NearSingularDesignError
from core.timeseries import GroupStructure, TimeSeriesDataset
from sglasso.cv import CvResult, cv_select
from sglasso.sglasso import PenaltySpec, SolverSettings, fit_sglasso


SIGMA2_FLOOR = 1e-12

LambdaChoice = Union[float, str, Sequence[float], Mapping[int, float]]


@dataclass(frozen=True)
class NodewiseRow:
    """Resultado de la regresión nodewise de la columna j."""

    j: int
    gamma_hat: np.ndarray
    sigma2_j: float
    lambda_j: float
    converged: bool = True
    cv: Optional[CvResult] = None

    def theta_row(self, p: int) -> np.ndarray:
        """Fila Θ̂_j de largo p en el orden original de columnas."""
        row = np.empty(p)
        others = [k for k in range(p) if k != self.j]
        row[self.j] = 1.0
        row[others] = -self.gamma_hat
        return row / self.sigma2_j


@dataclass(frozen=True)
class PrecisionEstimate:
    """Filas Θ̂_j para j en `requested`."""

    rows: Dict[int, np.ndarray]
    requested: Tuple[int, ...]
    nodewise_rows: Dict[int, NodewiseRow]

    @property
    def p(self) -> int:
        return int(next(iter(self.rows.values())).shape[0])

    def matrix(self) -> np.ndarray:
        """Θ̂_G apilada (|G|×p) en el orden de `requested`."""
        return np.vstack([self.rows[j] for j in self.requested])

    def c_matrix(self) -> np.ndarray:
        """Filas de Ĉ = (1, -γ̂_j') para j en G."""
        return np.vstack([self.rows[j] * self.nodewise_rows[j].sigma2_j for j in self.requested])

    def b_matrix(self) -> np.ndarray:
        """B̂ = diag(σ̂²_j) para j en G."""
        return np.diag([self.nodewise_rows[j].sigma2_j for j in self.requested])


def _row_dataset(data: TimeSeriesDataset, j: int) -> TimeSeriesDataset:
    others = [k for k in range(data.p) if k != j]
    return TimeSeriesDataset(data.X[:, j], data.X[:, others], tuple(data.column_names[k] for k in others))


def fit_nodewise_row(
    data: TimeSeriesDataset,
    j: int,
    lambda_j: float,
    settings: Optional[SolverSettings] = None,
) -> NodewiseRow:
    """
    Regresión LASSO de X_j sobre X_{-j} (α=1, grupos singleton).

    Raises:
        NearSingularDesignError: si σ̂²_j <= 1e-12
    """
    if data.p < 2:
        raise DimensionError("nodewise regressions need p >= 2")
    if not 0 <= j < data.p:
        raise DimensionError(f"column {j} does not exist (p={data.p})")
    settings = settings or SolverSettings()
    row_data = _row_dataset(data, j)
    spec = PenaltySpec(float(lambda_j), 1.0, GroupStructure.singletons(row_data.p))
    fit = fit_sglasso(row_data, spec, settings)
    return _finish_row(data, j, fit, None)


def _finish_row(data: TimeSeriesDataset, j: int, fit, cv: Optional[CvResult]) -> NodewiseRow:
    # σ̂²_j coincide con el σ̂² regularizado del sg-LASSO con α=1
    sigma2 = float(fit.sigma2_hat)
    if not sigma2 > SIGMA2_FLOOR:
        raise NearSingularDesignError(
            f"column '{data.column_names[j]}' is (nearly) a linear combination of the others: sigma2_j={sigma2:.3e}"
        )
    return NodewiseRow(
        j=j,
        gamma_hat=np.asarray(fit.beta),
        sigma2_j=sigma2,
        lambda_j=float(fit.penalty.lam),
        converged=fit.converged,
        cv=cv,
    )


def fit_nodewise_row_cv(
    data: TimeSeriesDataset,
    j: int,
    n_folds: int = 10,
    settings: Optional[SolverSettings] = None,
) -> NodewiseRow:
    """Igual que `fit_nodewise_row` con λ_j elegido por CV en bloques."""
    if data.p < 2:
        raise DimensionError("nodewise regressions need p >= 2")
    settings = settings or SolverSettings()
    row_data = _row_dataset(data, j)
    groups = GroupStructure.singletons(row_data.p)
    cv = cv_select(row_data, groups, 1.0, n_folds, settings=settings)
    spec = PenaltySpec(cv.selected_lambda, 1.0, groups)
    fit = fit_sglasso(row_data, spec, settings)
    return _finish_row(data, j, fit, cv)


def _resolve_lambda(lambdas: LambdaChoice, j: int, position: int) -> Union[float, str]:
    if isinstance(lambdas, str):
        if lambdas != "cv":
            raise ConfigError(f"lambdas must be a number, a per-row collection or 'cv', got '{lambdas}'")
        return "cv"
    if isinstance(lambdas, Mapping):
        if j not in lambdas:
            raise ConfigError(f"no lambda given for row {j}")
        return float(lambdas[j])
    if isinstance(lambdas, (int, float)):
        return float(lambdas)
    return float(list(lambdas)[position])


def estimate_precision_rows(
    data: TimeSeriesDataset,
    G: Sequence[int],
    lambdas: LambdaChoice = "cv",
    settings: Optional[SolverSettings] = None,
    n_folds: int = 10,
    n_jobs: int = 1,
) -> PrecisionEstimate:
    """
    Calcula Θ̂_j para cada j en G.

    Args:
        data: Dataset (se usa solo X)
        G: Índices de columna pedidos
        lambdas: λ común, λ por fila (secuencia alineada con G o mapeo j -> λ) o "cv"
        settings: Tolerancias del solver
        n_folds: Folds de la CV cuando lambdas="cv"
        n_jobs: Filas calculadas en paralelo (hilos)

    Returns:
        PrecisionEstimate con solo las filas pedidas
    """
    requested = tuple(int(j) for j in G)
    if len(requested) == 0:
        raise ConfigError("at least one precision row must be requested")
    for j in requested:
        if not 0 <= j < data.p:
            raise DimensionError(f"requested row {j} outside [0, {data.p})")
    settings = settings or SolverSettings()

    def compute(item: Tuple[int, int]) -> NodewiseRow:
        position, j = item
        choice = _resolve_lambda(lambdas, j, position)
        if choice == "cv":
            return fit_nodewise_row_cv(data, j, n_folds, settings)
        return fit_nodewise_row(data, j, choice, settings)

    items = list(enumerate(requested))
    if n_jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            fitted = list(pool.map(compute, items))
    else:
        fitted = [compute(item) for item in items]

    nodewise_rows = {row.j: row for row in fitted}
    rows = {row.j: row.theta_row(data.p) for row in fitted}
    return PrecisionEstimate(rows=rows, requested=requested, nodewise_rows=nodewise_rows)


def estimate_precision_matrix(
    data: TimeSeriesDataset,
    lambdas: LambdaChoice = "cv",
    settings: Optional[SolverSettings] = None,
    n_folds: int = 10,
    n_jobs: int = 1,
) -> PrecisionEstimate:
    """Modo matriz completa: todas las p filas."""
    return estimate_precision_rows(data, range(data.p), lambdas, settings, n_folds, n_jobs)


def identity_defect(prec: PrecisionEstimate, data: TimeSeriesDataset) -> float:
    """max_{j∈G} |(I - Θ̂Σ̂)_j|_∞ con Σ̂ = X'X/T."""
    sigma_hat = data.X.T @ data.X / data.T
    worst = 0.0
    for j in prec.requested:
        defect = -prec.rows[j] @ sigma_hat
        defect[j] += 1.0
        worst = max(worst, float(np.max(np.abs(defect))))
    return worst
