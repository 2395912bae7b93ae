"""
Construcción de la matriz de diseño ARDL-MIDAS desde los CSV de entrada.

Para cada fila t (período de baja frecuencia) la respuesta es y_{t+h} y las
covariables están fechadas en t:
- covariables de `--data`: L rezagos crudos x_t..x_{t-L+1} (`{col}_lag{j}`)
  o esos rezagos agregados con el diccionario de Legendre (`{col}_leg{k}`)
- rezagos autorregresivos y_t..y_{t-J+1} (`{respuesta}_lag{j}`); con h=0
  pasan a y_{t-1}..y_{t-J}, siempre estrictamente antes de la respuesta
- rezagos de alta frecuencia de `--hf-data`: los m últimos valores con fecha
  <= fecha de t, estandarizados por rezago y agregados con Legendre
  (`{hf_col}_leg{k}`)

Grupos: por defecto todas las columnas derivadas de una misma serie base
forman un grupo con el nombre de la serie. El sidecar `--groups` mapea
nombre de grupo -> series base, y las series no mencionadas conservan su
grupo propio.
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from common import ConfigError, DataError, DegenerateColumnError, DimensionError
from core.midas import aggregate_midas, high_frequency_lags, legendre_dictionary
from core.timeseries import (
    GroupStructure,
    StandardizationRecord,
    TimeSeriesDataset,
    column_sd,
    standardize,
)
from dataset.dataset_io import NumericTable

from cli.config import RunConfig


@dataclass(frozen=True)
class DesignMatrix:
    """Dataset listo para estimar, su partición en grupos y la serie base de cada columna."""

    dataset: TimeSeriesDataset
    groups: GroupStructure
    sources: Tuple[str, ...]
    record: Optional[StandardizationRecord] = None

    def describe(self) -> Dict[str, object]:
        """Resumen serializable del diseño para los reportes."""
        data = self.dataset
        return {
            "T": data.T,
            "p": data.p,
            "columns": list(data.column_names),
            "groups": {name: [data.column_names[j] for j in idx] for name, idx in self.groups.groups},
            "first_target_date": data.dates[0] if data.dates else None,
            "last_target_date": data.dates[-1] if data.dates else None,
            "standardized": self.record is not None,
        }


def _lag_block(series: np.ndarray, rows: np.ndarray, lags: int) -> np.ndarray:
    return np.column_stack([series[rows - j] for j in range(lags)])


def _standardize_block(block: np.ndarray, name: str) -> np.ndarray:
    sds = column_sd(block)
    means = block.mean(axis=0)
    for j, sd in enumerate(sds):
        if not sd > 1e-14 * max(abs(float(means[j])), 1.0):
            raise DegenerateColumnError(f"{name} lag {j + 1}")
    return (block - means) / sds


def group_structure(
    sources: Sequence[str],
    column_names: Sequence[str],
    spec: Optional[Mapping[str, Sequence[str]]] = None,
) -> GroupStructure:
    """
    Partición de las columnas de diseño a partir de sus series base.

    Args:
        sources: Serie base de cada columna de diseño
        column_names: Nombres de las columnas de diseño
        spec: Mapeo nombre de grupo -> series base (sidecar)

    Raises:
        ConfigError: el sidecar nombra una serie que no está en el diseño
    """
    by_source: Dict[str, List[str]] = {}
    for source, name in zip(sources, column_names):
        by_source.setdefault(source, []).append(name)
    mapping: Dict[str, List[str]] = {}
    mentioned = set()
    for group_name, bases in (spec or {}).items():
        if isinstance(bases, str):
            bases = [bases]
        columns: List[str] = []
        for base in bases:
            if base not in by_source:
                raise ConfigError(
                    f"group '{group_name}' references unknown series '{base}'; available: {sorted(by_source)}"
                )
            mentioned.add(base)
            columns.extend(by_source[base])
        mapping[str(group_name)] = columns
    for source, columns in by_source.items():
        if source not in mentioned:
            mapping[source] = columns
    ordered = dict(sorted(mapping.items(), key=lambda item: min(column_names.index(c) for c in item[1])))
    return GroupStructure.from_mapping(ordered, column_names)


def build_design(
    config: RunConfig,
    table: NumericTable,
    hf_table: Optional[NumericTable] = None,
    group_spec: Optional[Mapping[str, Sequence[str]]] = None,
) -> DesignMatrix:
    """
    Arma el dataset ARDL-MIDAS de la corrida.

    Raises:
        ConfigError: columnas pedidas inexistentes
        DimensionError: la muestra no alcanza para los rezagos y el horizonte
        DataError: faltan fechas para alinear la alta frecuencia
    """
    response = table.column(config.response)
    covariates = list(config.columns) or [c for c in table.names if c != config.response]
    for name in covariates:
        if name not in table.columns:
            raise ConfigError(f"unknown covariate column '{name}'")
    if config.response in covariates:
        raise ConfigError(f"response '{config.response}' cannot also be a covariate")

    n = table.rows
    # with horizon 0 the autoregressive lags start one period before the target
    ar_offset = 1 if config.horizon == 0 else 0
    start = max(config.covariate_lags, config.ar_lags + ar_offset, 1) - 1
    stop = n - config.horizon
    if stop - start < 2:
        raise DimensionError(
            f"{n} rows leave {max(stop - start, 0)} usable rows after lags and horizon={config.horizon}"
        )
    rows = np.arange(start, stop)

    blocks: List[np.ndarray] = []
    names: List[str] = []
    sources: List[str] = []

    def add(block: np.ndarray, column_names: Sequence[str], source: str) -> None:
        blocks.append(block)
        names.extend(column_names)
        sources.extend([source] * len(column_names))

    covariate_dictionary = None
    if config.covariate_legendre:
        covariate_dictionary = legendre_dictionary(config.legendre_degree, config.covariate_lags)
    for name in covariates:
        block = _lag_block(table.column(name), rows, config.covariate_lags)
        if covariate_dictionary is not None:
            block = aggregate_midas(block, covariate_dictionary)
            add(block, [f"{name}_leg{k}" for k in range(block.shape[1])], name)
        else:
            add(block, [f"{name}_lag{j}" for j in range(config.covariate_lags)], name)

    if config.ar_lags > 0:
        add(_lag_block(response, rows - ar_offset, config.ar_lags),
            [f"{config.response}_lag{j + ar_offset}" for j in range(config.ar_lags)], config.response)

    keep = np.ones(rows.shape[0], dtype=bool)
    if hf_table is not None:
        if table.dates is None:
            raise DataError(f"--hf-data needs a '{config.date_column}' column in {table.path} to align periods")
        if hf_table.dates is None:
            raise DataError(f"{hf_table.path} has no '{config.hf_date_column}' column")
        lf_dates = [table.dates[t] for t in rows]
        hf_block = high_frequency_lags(hf_table.dates, hf_table.column(config.hf_column), lf_dates, config.hf_lags)
        keep = ~np.isnan(hf_block).any(axis=1)
        if keep.sum() < 2:
            raise DimensionError(f"only {int(keep.sum())} periods have {config.hf_lags} high-frequency lags")
        hf_block = _standardize_block(hf_block[keep], config.hf_column)
        aggregated = np.full((rows.shape[0], config.legendre_degree + 1), np.nan)
        aggregated[keep] = aggregate_midas(hf_block, legendre_dictionary(config.legendre_degree, config.hf_lags))
        add(aggregated, [f"{config.hf_column}_leg{k}" for k in range(aggregated.shape[1])], config.hf_column)

    if not blocks:
        raise ConfigError("the design has no columns; add covariates, --ar-lags or --hf-data")
    X = np.column_stack(blocks)[keep]
    y = response[rows + config.horizon][keep]
    dates = None
    if table.dates is not None:
        dates = tuple(table.dates[t + config.horizon] for t in rows[keep])
    dataset = TimeSeriesDataset(y, X, tuple(names), dates)
    record = None
    if config.standardize:
        dataset, record = standardize(dataset)
    groups = group_structure(sources, dataset.column_names, group_spec)
    return DesignMatrix(dataset=dataset, groups=groups, sources=tuple(sources), record=record)


def granger_group_indices(design: DesignMatrix, group_names: Sequence[str]) -> Dict[str, Tuple[int, ...]]:
    """
    Índices de cada grupo a testear.

    Raises:
        ConfigError: grupo desconocido o que cubre todas las columnas
    """
    out: Dict[str, Tuple[int, ...]] = {}
    for name in group_names:
        if name not in design.groups.names:
            raise ConfigError(f"unknown test group '{name}'; available: {list(design.groups.names)}")
        idx = design.groups.index_of(name)
        if len(idx) == design.dataset.p:
            raise ConfigError(f"test group '{name}' covers every column; no controls are left")
        out[name] = idx
    return out


def check_bandwidths(mt_grid: Sequence[int], T: int) -> None:
    for M in mt_grid:
        if not M < T:
            raise ConfigError(f"bandwidth M_T={M} must be smaller than T={T}")
