"""
Experimento Monte Carlo de cobertura de la inferencia debiased con HAC.

DGP:
    x_{t,j} = ρ x_{t-1,j} + ε_{t,j},   u_t = ρ u_{t-1} + ν_t,   ε, ν ~ iid N(0,1)
    y = Xβ + u, con las primeras n_active entradas de β ~ U(0,4) y el resto cero.
Cada proceso arranca de su distribución estacionaria N(0, 1/(1-ρ²)).

Por réplica: LASSO (α=1) con CV en bloques -> nodewise para las p
columnas con CV -> debias -> Ξ̂ para cada M_T -> pivotes contra el β verdadero.

Reproducibilidad:
- Cada réplica recibe su propio hijo de `SeedSequence(seed)` por índice,
  de modo que el resultado no depende del orden ni de la cantidad de workers
- La agregación usa math.fsum, exacta e independiente del orden
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import polars as pl
import scipy
from scipy.signal import lfilter

from common import ConfigError, DataError, SgGrangerError
from core.timeseries import GroupStructure, TimeSeriesDataset, standardize
from hac.hac import KernelSpec, hac_estimate, score_series
from inference.inference import TABLE_Z, debias
from nodewise.nodewise import estimate_precision_matrix
from sglasso.cv import cv_select
from sglasso.sglasso import PenaltySpec, SolverSettings, fit_sglasso


TABLE_MT_GRID = tuple(range(5, 65, 5))
TABLE_COLUMNS = ["M_T", "p", "T", "avcov_active", "avcov_inactive", "length_active", "length_inactive"]


@dataclass(frozen=True)
class DgpConfig:
    """Parámetros del DGP AR(1) gaussiano."""

    T: int
    p: int
    rho: float = 0.6
    n_active: int = 5
    beta_low: float = 0.0
    beta_high: float = 4.0
    seed: int = 0
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.T < 2:
            raise ConfigError(f"T must be >= 2, got {self.T}")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if not -1.0 < self.rho < 1.0:
            raise ConfigError(f"rho must be in (-1, 1), got {self.rho}")
        if not 0 <= self.n_active <= self.p:
            raise ConfigError(f"n_active must be in [0, p], got {self.n_active}")
        if not self.beta_low <= self.beta_high:
            raise ConfigError("beta_low must not exceed beta_high")
        if not self.noise_sd >= 0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")


@dataclass(frozen=True)
class ReplicationResult:
    """Resultados por coordenada de una réplica, por cada M_T."""

    index: int
    T: int
    beta_true: np.ndarray
    beta_hat: np.ndarray
    beta_debiased: np.ndarray
    pivots: Dict[float, np.ndarray]
    half_widths: Dict[float, np.ndarray]
    selected_lambda: float
    converged: bool
    failure: Optional[str] = None

    @property
    def active(self) -> np.ndarray:
        return self.beta_true != 0.0


@dataclass(frozen=True)
class CoverageRow:
    M_T: float
    p: int
    T: int
    avcov_active: float
    avcov_inactive: float
    length_active: float
    length_inactive: float


@dataclass(frozen=True)
class CoverageTable:
    """Filas indexadas por (M_T, p, T) y la cantidad de réplicas N."""

    rows: Tuple[CoverageRow, ...]
    n_reps: int
    n_failed: int = 0

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            [[getattr(row, c) for c in TABLE_COLUMNS] for row in self.rows],
            schema=TABLE_COLUMNS,
            orient="row",
        )

    def cell(self, M_T: float, p: int, T: int) -> CoverageRow:
        for row in self.rows:
            if row.M_T == M_T and row.p == p and row.T == T:
                return row
        raise KeyError((M_T, p, T))


def _ar1(rng: np.random.Generator, rho: float, shape: Tuple[int, ...], scale: float = 1.0) -> np.ndarray:
    """Caminos AR(1) iniciados en la distribución estacionaria."""
    innovations = rng.standard_normal(shape) * scale
    start = innovations[0] / math.sqrt(1.0 - rho ** 2)
    if shape[0] == 1:
        return start[None, ...]
    zi = (rho * start)[None, ...]
    rest, _ = lfilter([1.0], [1.0, -rho], innovations[1:], axis=0, zi=zi)
    return np.concatenate([start[None, ...], rest], axis=0)


def draw_beta(config: DgpConfig, rng: np.random.Generator) -> np.ndarray:
    beta = np.zeros(config.p)
    beta[: config.n_active] = rng.uniform(config.beta_low, config.beta_high, config.n_active)
    return beta


def simulate_dgp(
    config: DgpConfig,
    rng: Optional[np.random.Generator] = None,
    beta: Optional[np.ndarray] = None,
) -> Tuple[TimeSeriesDataset, np.ndarray]:
    """
    Simula (dataset, β verdadero) del DGP AR(1).

    Args:
        config: Parámetros del DGP
        rng: Generador; por defecto `default_rng(config.seed)`
        beta: β fijo; por defecto se sortea
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    beta = draw_beta(config, rng) if beta is None else np.asarray(beta, dtype=np.float64)
    X = _ar1(rng, config.rho, (config.T, config.p))
    u = _ar1(rng, config.rho, (config.T,), scale=config.noise_sd)
    y = X @ beta + u
    names = tuple(f"x{j}" for j in range(config.p))
    return TimeSeriesDataset(y, X, names, frequency="simulated"), beta


def run_replication(
    config: DgpConfig,
    mt_grid: Sequence[float] = TABLE_MT_GRID,
    kernel: str = "parzen",
    settings: Optional[SolverSettings] = None,
    rng: Optional[np.random.Generator] = None,
    beta: Optional[np.ndarray] = None,
    standardize_data: bool = False,
    index: int = 0,
) -> ReplicationResult:
    """
    Una réplica completa: ajuste -> nodewise -> debias -> HAC -> pivotes.

    Las fallas numéricas no detienen el experimento: se registran en `failure`.
    """
    settings = settings or SolverSettings(alpha=1.0)
    data, beta_true = simulate_dgp(config, rng, beta)
    if standardize_data:
        data, record = standardize(data)
        beta_true = beta_true * record.column_sds
    groups = GroupStructure.singletons(data.p)
    try:
        cv = cv_select(data, groups, settings.alpha, settings.n_folds, settings=settings)
        fit = fit_sglasso(data, PenaltySpec(cv.selected_lambda, settings.alpha, groups), settings)
        prec = estimate_precision_matrix(data, "cv", settings, settings.n_folds)
        est = debias(fit, prec, data)
        scores = score_series(fit.residuals, data, prec)
        pivots: Dict[float, np.ndarray] = {}
        half_widths: Dict[float, np.ndarray] = {}
        for M in mt_grid:
            xi = hac_estimate(scores, KernelSpec(kernel, M), prec.requested)
            se = np.sqrt(np.clip(np.diag(xi.xi), 0.0, None) / data.T)
            with np.errstate(divide="ignore", invalid="ignore"):
                pivots[M] = (est.beta_debiased - beta_true) / se
            half_widths[M] = TABLE_Z * se
        converged = fit.converged and all(row.converged for row in prec.nodewise_rows.values())
        return ReplicationResult(
            index=index,
            T=data.T,
            beta_true=beta_true,
            beta_hat=np.asarray(fit.beta),
            beta_debiased=est.beta_debiased,
            pivots=pivots,
            half_widths=half_widths,
            selected_lambda=cv.selected_lambda,
            converged=converged,
        )
    except SgGrangerError as e:
        return ReplicationResult(
            index=index,
            T=data.T,
            beta_true=beta_true,
            beta_hat=np.full(data.p, np.nan),
            beta_debiased=np.full(data.p, np.nan),
            pivots={},
            half_widths={},
            selected_lambda=math.nan,
            converged=False,
            failure=f"{type(e).__name__}: {e}",
        )


def _mean_indicator(values: np.ndarray) -> float:
    return math.fsum(float(v) for v in values) / len(values)


def aggregate_coverage(
    replications: Sequence[ReplicationResult],
    config: Optional[DgpConfig] = None,
    critical_value: float = TABLE_Z,
) -> CoverageTable:
    """
    Cobertura y largo medio de los IC, por separado para el conjunto activo e inactivo.

    av.cov = promedio sobre réplicas del promedio sobre coordenadas de 1{|pivot| <= 1.96};
    length = promedio de 2·1.96·√(Ξ̂_jj/T). Las réplicas fallidas se excluyen.
    """
    if len(replications) == 0:
        raise DataError("cannot aggregate an empty set of replications")
    ok = [r for r in replications if r.failure is None]
    if not ok:
        raise DataError("every replication failed; nothing to aggregate")
    T = config.T if config is not None else ok[0].T
    p = config.p if config is not None else int(ok[0].beta_true.shape[0])
    rows = []
    for M in ok[0].pivots:
        per_rep = {"cov_a": [], "cov_i": [], "len_a": [], "len_i": []}
        for r in ok:
            inside = np.abs(r.pivots[M]) <= critical_value
            lengths = 2.0 * r.half_widths[M]
            active = r.active
            if active.any():
                per_rep["cov_a"].append(_mean_indicator(inside[active]))
                per_rep["len_a"].append(math.fsum(lengths[active]) / active.sum())
            if (~active).any():
                per_rep["cov_i"].append(_mean_indicator(inside[~active]))
                per_rep["len_i"].append(math.fsum(lengths[~active]) / (~active).sum())
        means = {k: (math.fsum(v) / len(v) if v else math.nan) for k, v in per_rep.items()}
        rows.append(CoverageRow(M, p, T, means["cov_a"], means["cov_i"], means["len_a"], means["len_i"]))
    return CoverageTable(rows=tuple(rows), n_reps=len(ok), n_failed=len(replications) - len(ok))


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuración completa de un experimento (una o varias celdas T×p)."""

    T: Tuple[int, ...] = (1000,)
    p: Tuple[int, ...] = (10,)
    rho: float = 0.6
    n_active: int = 5
    N: int = 500
    mt_grid: Tuple[float, ...] = TABLE_MT_GRID
    kernel: str = "parzen"
    alpha: float = 1.0
    seed: int = 20240101
    freeze_beta: bool = False
    standardize: bool = False
    noise_sd: float = 1.0
    grid_size: int = 30
    n_folds: int = 10
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "T", tuple(int(t) for t in np.atleast_1d(self.T)))
        object.__setattr__(self, "p", tuple(int(v) for v in np.atleast_1d(self.p)))
        object.__setattr__(self, "mt_grid", tuple(int(m) if float(m).is_integer() else float(m) for m in np.atleast_1d(self.mt_grid)))
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if not self.mt_grid:
            raise ConfigError("mt_grid must not be empty")
        for T in self.T:
            for M in self.mt_grid:
                if not (M > 0 and float(M).is_integer() and M < T):
                    raise ConfigError(f"mt_grid entry {M} must be a positive integer smaller than T={T}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        KernelSpec(self.kernel, 1.0)
        for T in self.T:
            for p in self.p:
                DgpConfig(T=T, p=p, rho=self.rho, n_active=self.n_active, noise_sd=self.noise_sd)

    def settings(self) -> SolverSettings:
        return SolverSettings(alpha=self.alpha, grid_size=self.grid_size, n_folds=self.n_folds)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def _replication_task(args) -> ReplicationResult:
    config, mt_grid, kernel, settings, seed_seq, beta, standardize_data, index = args
    rng = np.random.default_rng(seed_seq)
    return run_replication(config, mt_grid, kernel, settings, rng, beta, standardize_data, index)


def replication_seeds(seed: int, T: int, p: int, n: int) -> List[np.random.SeedSequence]:
    """Semillas por réplica: hijos de SeedSequence([seed, T, p]) por índice."""
    return np.random.SeedSequence([seed, T, p]).spawn(n)


def run_cell(experiment: ExperimentConfig, T: int, p: int) -> Tuple[CoverageTable, List[ReplicationResult]]:
    """Corre las N réplicas de una celda (T, p)."""
    config = DgpConfig(T=T, p=p, rho=experiment.rho, n_active=experiment.n_active,
                       seed=experiment.seed, noise_sd=experiment.noise_sd)
    beta = None
    if experiment.freeze_beta:
        beta = draw_beta(config, np.random.default_rng(np.random.SeedSequence([experiment.seed, T, p, 1])))
    settings = experiment.settings()
    seeds = replication_seeds(experiment.seed, T, p, experiment.N)
    tasks = [
        (config, experiment.mt_grid, experiment.kernel, settings, s, beta, experiment.standardize, i)
        for i, s in enumerate(seeds)
    ]
    if experiment.workers > 1:
        with ProcessPoolExecutor(max_workers=experiment.workers) as pool:
            results = list(pool.map(_replication_task, tasks, chunksize=max(1, len(tasks) // (4 * experiment.workers))))
    else:
        results = [_replication_task(task) for task in tasks]
    results.sort(key=lambda r: r.index)
    return aggregate_coverage(results, config), results


def run_experiment(experiment: ExperimentConfig) -> Tuple[CoverageTable, Dict[str, object]]:
    """
    Corre todas las celdas T×p y arma la tabla completa más metadatos.

    Returns:
        (tabla con filas ordenadas por T, p, M_T; metadatos con semillas y conteos)
    """
    rows: List[CoverageRow] = []
    cells = []
    n_reps = 0
    n_failed = 0
    for T in experiment.T:
        for p in experiment.p:
            table, results = run_cell(experiment, T, p)
            rows.extend(table.rows)
            n_reps += table.n_reps
            n_failed += table.n_failed
            cells.append({
                "T": T,
                "p": p,
                "replications": table.n_reps,
                "failed": table.n_failed,
                "nonconverged": sum(1 for r in results if r.failure is None and not r.converged),
                "failures": sorted({r.failure for r in results if r.failure is not None}),
            })
    metadata = {
        "config": experiment.as_dict(),
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__, "polars": pl.__version__},
        "beta_mode": "frozen" if experiment.freeze_beta else "redrawn_per_replication",
        "seed_scheme": "SeedSequence([seed, T, p]).spawn(N)",
        "cells": cells,
    }
    return CoverageTable(rows=tuple(rows), n_reps=n_reps, n_failed=n_failed), metadata
