"""
Configuración resuelta de una corrida del CLI.

Orden de precedencia: defaults de `RunConfig` < archivo `--config` (JSON) <
flags explícitos. La validación de todo lo que no depende de los datos se
hace acá, antes de leer archivos o abrir salidas; lo que depende de T o de
los nombres de columna se valida en `cli.design` antes de estimar.
"""

from dataclasses import dataclass, field, fields
from typing import Any, Dict, Mapping, Optional, Tuple

import psutil

from common import ConfigError
from hac.hac import kernel_name
from montecarlo.montecarlo import ExperimentConfig
from sglasso.sglasso import SolverSettings


COMMANDS = ("fit", "granger", "nodewise", "simulate", "profile")
DEFAULT_MT_GRID = (20, 40, 60)
DEFAULT_KERNELS = ("parzen", "quadratic_spectral")
DEFAULT_ALPHA = 0.5
DEFAULT_HF_LAGS = 22
DEFAULT_LEGENDRE_DEGREE = 3

# Claves del objeto "solver" del archivo de configuración
SOLVER_KEYS = ("tol", "max_cycles", "grid_size", "grid_min_ratio", "group_weights")


def default_workers() -> int:
    """Cantidad de núcleos físicos, o 1 si no se puede determinar."""
    return psutil.cpu_count(logical=False) or 1


def _as_tuple(value: Any) -> Tuple[Any, ...]:
    if value is None:
        return ()
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


@dataclass(frozen=True)
class RunConfig:
    """
    Configuración completa de un comando. `as_dict()` se embebe en cada reporte
    para que la corrida sea re-ejecutable desde su propia salida.
    """

    command: str
    data: Optional[str] = None
    response: Optional[str] = None
    out: Optional[str] = None
    columns: Tuple[str, ...] = ()
    groups: Optional[str] = None
    date_column: str = "date"
    alpha: float = DEFAULT_ALPHA
    lam: Optional[float] = None
    folds: int = 10
    test_groups: Tuple[str, ...] = ()
    mt_grid: Tuple[int, ...] = DEFAULT_MT_GRID
    kernels: Tuple[str, ...] = DEFAULT_KERNELS
    seed: int = 0
    horizon: int = 1
    ar_lags: int = 0
    covariate_lags: int = 1
    covariate_legendre: bool = False
    hf_data: Optional[str] = None
    hf_column: Optional[str] = None
    hf_date_column: str = "date"
    hf_lags: int = DEFAULT_HF_LAGS
    legendre_degree: int = DEFAULT_LEGENDRE_DEGREE
    standardize: bool = True
    nodewise_columns: Tuple[str, ...] = ()
    workers: int = 1
    solver: SolverSettings = field(default_factory=SolverSettings)
    experiment: Optional[ExperimentConfig] = None
    quiet: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command '{self.command}'; expected one of {COMMANDS}")
        if self.command != "simulate" and not self.data:
            raise ConfigError(f"command '{self.command}' requires --data")
        if self.command in ("fit", "granger", "nodewise") and not self.response:
            raise ConfigError(f"command '{self.command}' requires --response")
        if self.command in ("fit", "granger", "nodewise", "simulate") and not self.out:
            raise ConfigError(f"command '{self.command}' requires --out")
        if self.command == "simulate" and self.experiment is None:
            raise ConfigError("command 'simulate' requires an experiment configuration")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.lam is not None and not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        for M in self.mt_grid:
            if not (float(M).is_integer() and M > 0):
                raise ConfigError(f"mt_grid entries must be positive integers, got {M}")
        object.__setattr__(self, "mt_grid", tuple(int(M) for M in self.mt_grid))
        if not self.mt_grid:
            raise ConfigError("mt_grid must not be empty")
        if not self.kernels:
            raise ConfigError("at least one kernel is required")
        object.__setattr__(self, "kernels", tuple(kernel_name(k) for k in self.kernels))
        if self.command == "granger" and not self.test_groups:
            raise ConfigError("command 'granger' requires at least one --test-group")
        if self.horizon < 0:
            raise ConfigError(f"horizon must be >= 0, got {self.horizon}")
        if self.ar_lags < 0:
            raise ConfigError(f"ar_lags must be >= 0, got {self.ar_lags}")
        if self.covariate_lags < 1:
            raise ConfigError(f"covariate_lags must be >= 1, got {self.covariate_lags}")
        if self.legendre_degree < 0:
            raise ConfigError(f"legendre_degree must be >= 0, got {self.legendre_degree}")
        if self.covariate_legendre and self.covariate_lags < self.legendre_degree + 1:
            raise ConfigError(
                f"--covariate-legendre needs covariate_lags >= legendre_degree+1 = {self.legendre_degree + 1}"
            )
        if self.hf_data is not None:
            if not self.hf_column:
                raise ConfigError("--hf-data requires --hf-column")
            if self.hf_lags < self.legendre_degree + 1:
                raise ConfigError(f"hf_lags must be >= legendre_degree+1 = {self.legendre_degree + 1}")
        if self.response is not None and self.response in self.columns:
            raise ConfigError(f"response '{self.response}' cannot also be a covariate")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def settings(self) -> SolverSettings:
        """Ajustes del solver con α y folds de esta corrida."""
        return SolverSettings(**{**self.solver.as_dict(), "alpha": self.alpha, "n_folds": self.folds})

    def as_dict(self) -> Dict[str, Any]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, SolverSettings):
                value = {key: value.as_dict()[key] for key in SOLVER_KEYS}
            elif isinstance(value, ExperimentConfig):
                value = value.as_dict()
            out[f.name] = value
        return out


_CASTS = {
    "alpha": float, "lam": float, "folds": int, "seed": int, "horizon": int, "ar_lags": int,
    "covariate_lags": int, "covariate_legendre": bool, "hf_lags": int, "legendre_degree": int,
    "standardize": bool, "workers": int, "quiet": bool,
}
_TUPLES = ("columns", "test_groups", "mt_grid", "kernels", "nodewise_columns")

EXPERIMENT_CASTS = {
    "rho": float, "n_active": int, "N": int, "kernel": str, "alpha": float, "seed": int,
    "freeze_beta": bool, "standardize": bool, "noise_sd": float, "grid_size": int,
    "n_folds": int, "workers": int,
}


# Claves del archivo que difieren del nombre del campo
KEY_ALIASES = {"lambda": "lam", "rows": "nodewise_columns", "test_group": "test_groups", "mt": "mt_grid"}


def _normalize_keys(values: Mapping[str, Any]) -> Dict[str, Any]:
    normalized = (str(key).replace("-", "_") for key in values)
    return {KEY_ALIASES.get(key, key): value for key, value in zip(normalized, values.values())}


def experiment_from_mapping(values: Mapping[str, Any]) -> ExperimentConfig:
    """ExperimentConfig desde el objeto JSON plano del experimento."""
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown experiment keys: {unknown}")
    resolved: Dict[str, Any] = {"workers": default_workers()}
    try:
        for key, value in values.items():
            if value is None:
                continue
            if key in ("T", "p", "mt_grid"):
                resolved[key] = tuple(int(v) if float(v).is_integer() else float(v) for v in _as_tuple(value))
            else:
                resolved[key] = EXPERIMENT_CASTS[key](value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid experiment value: {e}") from None
    return ExperimentConfig(**resolved)


def resolve_config(command: str, file_values: Mapping[str, Any], flag_values: Mapping[str, Any]) -> RunConfig:
    """
    Combina el archivo de configuración y los flags en un RunConfig validado.

    Args:
        command: Subcomando
        file_values: Objeto JSON de `--config` (puede estar vacío)
        flag_values: Flags dados explícitamente en la línea de comandos

    Raises:
        ConfigError: claves desconocidas, tipos inválidos o combinaciones inválidas
    """
    if not isinstance(file_values, Mapping):
        raise ConfigError("the configuration file must contain a JSON object")
    merged = {**_normalize_keys(file_values), **_normalize_keys(flag_values)}
    merged.pop("command", None)
    merged.pop("config", None)

    if command == "simulate":
        run_keys = {"out", "quiet"}
        experiment = experiment_from_mapping({k: v for k, v in merged.items() if k not in run_keys})
        return RunConfig(
            command=command,
            out=merged.get("out"),
            quiet=bool(merged.get("quiet", False)),
            alpha=experiment.alpha,
            seed=experiment.seed,
            workers=experiment.workers,
            experiment=experiment,
        )

    solver_values = merged.pop("solver", None) or {}
    if not isinstance(solver_values, Mapping):
        raise ConfigError("'solver' must be a JSON object")
    solver_values = _normalize_keys(solver_values)
    for key in SOLVER_KEYS:
        if key in merged:
            solver_values[key] = merged.pop(key)
    unknown_solver = sorted(set(solver_values) - set(SOLVER_KEYS))
    if unknown_solver:
        raise ConfigError(f"unknown solver settings: {unknown_solver}")

    known = {f.name for f in fields(RunConfig)} - {"command", "solver", "experiment"}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")

    resolved: Dict[str, Any] = {}
    try:
        for key, value in merged.items():
            if value is None:
                continue
            if key in _TUPLES:
                resolved[key] = _as_tuple(value)
            elif key in _CASTS:
                resolved[key] = _CASTS[key](value)
            else:
                resolved[key] = str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid configuration value: {e}") from None
    solver = SolverSettings.from_mapping(solver_values)
    return RunConfig(command=command, solver=solver, **resolved)
