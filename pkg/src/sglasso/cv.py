"""
Validación cruzada por bloques contiguos en el tiempo para elegir λ.

Estrategia:
- Las filas se parten en n_folds bloques adyacentes (sin barajar)
- Para cada bloque se ajusta el camino de λ sobre el complemento, con warm
  starts, y se registra el MSE fuera de muestra
- Se elige el λ con menor MSE medio; los empates van hacia el λ más grande
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from common import ConfigError
from core.timeseries import GroupStructure, TimeSeriesDataset
from sglasso.sglasso import (
    Moments,
    PenaltySpec,
    SolverSettings,
    fit_from_moments,
    lambda_grid,
)


@dataclass(frozen=True)
class CvResult:
    """Grilla, matriz de errores (grilla × folds), λ elegido y bordes de los folds."""

    lambda_grid: np.ndarray
    cv_errors: np.ndarray
    selected_lambda: float
    fold_boundaries: Tuple[Tuple[int, int], ...]

    @property
    def mean_errors(self) -> np.ndarray:
        return self.cv_errors.mean(axis=1)

    @property
    def selected_index(self) -> int:
        return int(np.flatnonzero(self.lambda_grid == self.selected_lambda)[0])

    def curve(self) -> List[dict]:
        """Curva CV serializable: λ, error medio y su desvío estándar."""
        means = self.mean_errors
        sds = self.cv_errors.std(axis=1)
        return [
            {"lambda": float(lam), "mean_mse": float(m), "sd_mse": float(s)}
            for lam, m, s in zip(self.lambda_grid, means, sds)
        ]


def fold_boundaries(T: int, n_folds: int) -> Tuple[Tuple[int, int], ...]:
    """
    Bloques contiguos [inicio, fin) que cubren 0..T-1.

    Ejemplo:
        >>> fold_boundaries(100, 10)[:2]
        ((0, 10), (10, 20))
    """
    if n_folds < 2:
        raise ConfigError(f"n_folds must be >= 2, got {n_folds}")
    if n_folds > T / 2:
        raise ConfigError(f"n_folds={n_folds} exceeds T/2={T / 2:g}; folds would be too small to fit")
    splits = np.array_split(np.arange(T), n_folds)
    return tuple((int(s[0]), int(s[-1]) + 1) for s in splits)


def cv_select(
    data: TimeSeriesDataset,
    groups: GroupStructure,
    alpha: float,
    n_folds: int = 10,
    grid: Optional[Sequence[float]] = None,
    settings: Optional[SolverSettings] = None,
    group_weights: str = "none",
) -> CvResult:
    """
    Elige λ por validación cruzada con folds adyacentes en el tiempo.

    Args:
        data: Dataset completo
        groups: Estructura de grupos
        alpha: Mezcla ℓ₁ / grupo
        n_folds: Cantidad de bloques (<= T/2)
        grid: Grilla decreciente de λ; por defecto `lambda_grid` sobre todo el dataset
        settings: Tolerancias del solver (también definen el tamaño de grilla por defecto)

    Returns:
        CvResult con la curva completa y el λ elegido
    """
    settings = settings or SolverSettings(alpha=alpha, n_folds=n_folds)
    groups.validate(data.p)
    bounds = fold_boundaries(data.T, n_folds)
    spec = PenaltySpec(0.0, alpha, groups, group_weights)
    if grid is None:
        grid = lambda_grid(data, spec, settings.grid_size, settings.grid_min_ratio)
    grid = np.array(grid, dtype=np.float64)
    if np.any(np.diff(grid) >= 0) or np.any(grid <= 0):
        raise ConfigError("lambda grid must be strictly decreasing and positive")

    errors = np.empty((grid.shape[0], n_folds))
    for k, (start, stop) in enumerate(bounds):
        train = np.r_[0:start, stop:data.T]
        if train.shape[0] < 2:
            raise ConfigError(f"fold {k} leaves {train.shape[0]} training rows")
        moments = Moments.from_arrays(data.X[train], data.y[train])
        X_test, y_test = data.X[start:stop], data.y[start:stop]
        beta = None
        for i, lam in enumerate(grid):
            beta, *_ = fit_from_moments(moments, spec.with_lambda(lam), settings, beta)
            resid = y_test - X_test @ beta
            errors[i, k] = float(resid @ resid) / resid.shape[0]

    means = errors.mean(axis=1)
    # np.argmin devuelve el primer mínimo: el λ más grande entre empatados
    selected = float(grid[int(np.argmin(means))])
    grid.setflags(write=False)
    errors.setflags(write=False)
    return CvResult(lambda_grid=grid, cv_errors=errors, selected_lambda=selected, fold_boundaries=bounds)
