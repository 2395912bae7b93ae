"""
Tipos base de la regresión: dataset, estructura de grupos y estandarización.

Este módulo contiene:
- TimeSeriesDataset: respuesta y matriz de diseño T×p, validadas e inmutables
- GroupStructure: partición de los índices de columna en grupos con nombre
- StandardizationRecord + standardize: demeaning de la respuesta y
  estandarización de las covariables con denominador poblacional (1/T)

Convenciones:
- Índices de columna 0-based
- Filas ordenadas en el tiempo, la más antigua primero
- Los arrays se guardan como copias de solo lectura
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from common import DataError, DegenerateColumnError, DimensionError, GroupStructureError


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeSeriesDataset:
    """
    Respuesta y (largo T) y diseño X (T×p) alineados en el tiempo.

    Args:
        y: Vector respuesta
        X: Matriz de diseño, columnas alineadas con y
        column_names: Nombres únicos de las p columnas
        dates: Fechas ISO-8601 por fila (opcional)
        frequency: Metadato de frecuencia, p.ej. "monthly" (opcional)
    """

    y: np.ndarray
    X: np.ndarray
    column_names: Tuple[str, ...]
    dates: Optional[Tuple[str, ...]] = None
    frequency: Optional[str] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        X = np.asarray(self.X, dtype=np.float64)
        if y.ndim != 1:
            raise DimensionError(f"response must be a vector, got shape {y.shape}")
        if X.ndim != 2:
            raise DimensionError(f"design must be a matrix, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(f"design has {X.shape[0]} rows but response has {y.shape[0]}")
        if y.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError("dataset needs T >= 1 and p >= 1")
        names = tuple(str(name) for name in self.column_names)
        if len(names) != X.shape[1]:
            raise DimensionError(f"{len(names)} column names for {X.shape[1]} columns")
        if len(set(names)) != len(names):
            seen = set()
            duplicated = [n for n in names if n in seen or seen.add(n)]
            raise DataError(f"duplicated column names: {sorted(set(duplicated))}")
        if not np.isfinite(y).all():
            raise DataError(f"response has non-finite values at rows {np.flatnonzero(~np.isfinite(y))[:5].tolist()}")
        bad = ~np.isfinite(X)
        if bad.any():
            rows, cols = np.nonzero(bad)
            raise DataError(f"column '{names[cols[0]]}' has a non-finite value at row {rows[0]}")
        if self.dates is not None:
            dates = tuple(str(d) for d in self.dates)
            if len(dates) != y.shape[0]:
                raise DimensionError(f"{len(dates)} dates for {y.shape[0]} rows")
            # ISO-8601 ordena lexicográficamente igual que cronológicamente
            for i in range(1, len(dates)):
                if dates[i] <= dates[i - 1]:
                    raise DataError(f"rows are not strictly time-ordered at row {i} ({dates[i - 1]} >= {dates[i]})")
            object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "column_names", names)

    @property
    def T(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DataError(f"unknown column '{name}'") from None

    def take_rows(self, rows: Sequence[int]) -> "TimeSeriesDataset":
        """Subconjunto de filas (en orden creciente para preservar el tiempo)."""
        rows = np.asarray(rows, dtype=int)
        dates = None if self.dates is None else tuple(self.dates[i] for i in rows)
        return TimeSeriesDataset(self.y[rows], self.X[rows], self.column_names, dates, self.frequency)

    def select_columns(self, columns: Sequence[int]) -> "TimeSeriesDataset":
        columns = list(columns)
        return TimeSeriesDataset(
            self.y, self.X[:, columns], tuple(self.column_names[c] for c in columns), self.dates, self.frequency
        )

    def drop_columns(self, columns: Iterable[int]) -> "TimeSeriesDataset":
        dropped = set(columns)
        return self.select_columns([c for c in range(self.p) if c not in dropped])


@dataclass(frozen=True)
class GroupStructure:
    """
    Partición ordenada de las columnas en grupos con nombre.

    `groups` es una tupla de pares (nombre, índices). La validación contra p
    se hace con `validate(p)`; los constructores la ejecutan siempre.
    """

    groups: Tuple[Tuple[str, Tuple[int, ...]], ...]

    def __post_init__(self):
        normalized = tuple((str(name), tuple(int(i) for i in idx)) for name, idx in self.groups)
        names = [name for name, _ in normalized]
        if len(set(names)) != len(names):
            raise GroupStructureError(f"duplicated group names in {names}")
        object.__setattr__(self, "groups", normalized)

    @classmethod
    def singletons(cls, p: int, names: Optional[Sequence[str]] = None) -> "GroupStructure":
        names = list(names) if names is not None else [f"x{j}" for j in range(p)]
        out = cls(tuple((names[j], (j,)) for j in range(p)))
        out.validate(p)
        return out

    @classmethod
    def single(cls, p: int, name: str = "all") -> "GroupStructure":
        out = cls(((name, tuple(range(p))),))
        out.validate(p)
        return out

    @classmethod
    def from_labels(cls, labels: Sequence[object]) -> "GroupStructure":
        """Un grupo por etiqueta distinta, en orden de primera aparición."""
        order: Dict[str, List[int]] = {}
        for j, label in enumerate(labels):
            order.setdefault(str(label), []).append(j)
        out = cls(tuple((name, tuple(idx)) for name, idx in order.items()))
        out.validate(len(labels))
        return out

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Sequence[str]], column_names: Sequence[str]) -> "GroupStructure":
        """
        Construye la partición desde un mapeo nombre de grupo -> nombres de columna.

        Las columnas no mencionadas quedan como grupos singleton con el nombre
        de la columna, así el resultado siempre cubre {0..p-1}.
        """
        index = {name: j for j, name in enumerate(column_names)}
        groups: List[Tuple[str, Tuple[int, ...]]] = []
        used: Dict[int, str] = {}
        for group_name, columns in mapping.items():
            idx = []
            for column in columns:
                if column not in index:
                    raise GroupStructureError(f"group '{group_name}' references unknown column '{column}'")
                j = index[column]
                if j in used:
                    raise GroupStructureError(
                        f"column index {j} ('{column}') is in both '{used[j]}' and '{group_name}'", index=j
                    )
                used[j] = group_name
                idx.append(j)
            groups.append((group_name, tuple(idx)))
        taken = {name for name, _ in groups}
        for j, column in enumerate(column_names):
            if j not in used:
                name = column if column not in taken else f"{column}#{j}"
                groups.append((name, (j,)))
        out = cls(tuple(groups))
        out.validate(len(column_names))
        return out

    def validate(self, p: int) -> None:
        """Verifica que los grupos sean no vacíos, disjuntos y cubran {0..p-1}."""
        owner: Dict[int, str] = {}
        for name, idx in self.groups:
            if len(idx) == 0:
                raise GroupStructureError(f"group '{name}' is empty")
            for j in idx:
                if j < 0 or j >= p:
                    raise GroupStructureError(f"group '{name}' has index {j} outside [0, {p})", index=j)
                if j in owner:
                    raise GroupStructureError(f"index {j} appears in both '{owner[j]}' and '{name}'", index=j)
                owner[j] = name
        missing = [j for j in range(p) if j not in owner]
        if missing:
            raise GroupStructureError(f"index {missing[0]} is not covered by any group", index=missing[0])

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.groups)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(idx) for _, idx in self.groups)

    @property
    def p(self) -> int:
        return sum(self.sizes)

    def index_of(self, name: str) -> Tuple[int, ...]:
        for group_name, idx in self.groups:
            if group_name == name:
                return idx
        raise GroupStructureError(f"unknown group '{name}'")

    def index_arrays(self) -> List[np.ndarray]:
        return [np.asarray(idx, dtype=int) for _, idx in self.groups]


@dataclass(frozen=True)
class StandardizationRecord:
    """Estadísticos removidos por `standardize` (todas las sd > 0)."""

    response_mean: float
    column_means: np.ndarray = field(repr=False)
    column_sds: np.ndarray = field(repr=False)

    def apply(self, dataset: TimeSeriesDataset) -> TimeSeriesDataset:
        """Aplica la transformación registrada a otro dataset con las mismas columnas."""
        X = (dataset.X - self.column_means) / self.column_sds
        y = dataset.y - self.response_mean
        return TimeSeriesDataset(y, X, dataset.column_names, dataset.dates, dataset.frequency)

    def invert(self, dataset: TimeSeriesDataset) -> TimeSeriesDataset:
        """Deshace la transformación."""
        X = dataset.X * self.column_sds + self.column_means
        y = dataset.y + self.response_mean
        return TimeSeriesDataset(y, X, dataset.column_names, dataset.dates, dataset.frequency)

    def coefficients_to_original(self, beta: np.ndarray) -> np.ndarray:
        """Reescala coeficientes estimados sobre el diseño estandarizado."""
        return np.asarray(beta) / self.column_sds


def column_sd(X: np.ndarray) -> np.ndarray:
    """Desviación estándar con denominador poblacional, acorde a ‖·‖²_T."""
    return np.sqrt(np.mean((X - X.mean(axis=0)) ** 2, axis=0))


def standardize(dataset: TimeSeriesDataset) -> Tuple[TimeSeriesDataset, StandardizationRecord]:
    """
    Demean de la respuesta y estandarización de cada columna (media 0, sd 1).

    Args:
        dataset: Dataset original

    Returns:
        Tupla (dataset transformado, registro de estadísticos)

    Raises:
        DegenerateColumnError: si alguna columna es constante
    """
    X = dataset.X
    means = X.mean(axis=0)
    centered = X - means
    sds = np.sqrt(np.mean(centered ** 2, axis=0))
    scale = np.maximum(np.abs(means), 1.0)
    for j, sd in enumerate(sds):
        if not sd > 1e-14 * scale[j]:
            raise DegenerateColumnError(dataset.column_names[j])
    Z = centered / sds
    # Segunda pasada: elimina el residuo de redondeo de la media
    residual_mean = Z.mean(axis=0)
    Z = Z - residual_mean
    means = means + residual_mean * sds
    response_mean = float(dataset.y.mean())
    y = dataset.y - response_mean
    record = StandardizationRecord(response_mean, _frozen(means), _frozen(sds))
    return TimeSeriesDataset(y, Z, dataset.column_names, dataset.dates, dataset.frequency), record
