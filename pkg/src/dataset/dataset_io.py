"""
Lectura de CSV y escritura de artefactos (JSON y CSV).

Lectura:
- El CSV se lee completo con Polars usando esquema de strings
  (`infer_schema_length=0`), y cada columna se castea a Float64 por separado
  para poder reportar la línea y la columna exactas de cada falla
- La columna de fechas (si existe) debe ser ISO-8601 y estrictamente creciente

Escritura:
- JSON con orjson (indentado, claves ordenadas, arrays numpy nativos)
- Cada archivo se escribe en un temporal hermano y se renombra, así una
  falla nunca deja un archivo parcial
"""

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import orjson
import polars as pl

from common import CsvParseError, DataError


DEFAULT_DATE_COLUMN = "date"
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
ISO_DATE_PATTERN = r"^\d{4}-\d{2}-\d{2}"

# La fila 0 de datos es la línea 2 del archivo (la 1 es el encabezado)
HEADER_LINES = 1


@dataclass(frozen=True)
class NumericTable:
    """Columnas numéricas de un CSV, en el orden del encabezado, más fechas opcionales."""

    path: str
    names: Tuple[str, ...]
    columns: Dict[str, np.ndarray]
    dates: Optional[Tuple[str, ...]] = None

    @property
    def rows(self) -> int:
        return int(next(iter(self.columns.values())).shape[0]) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise DataError(f"{self.path}: unknown column '{name}'; available: {list(self.names)}")
        return self.columns[name]


def read_raw_csv(path: str) -> pl.DataFrame:
    """Lee el CSV con todas las columnas como strings."""
    file_path = Path(path)
    if not file_path.exists():
        raise DataError(f"file not found: {path}")
    try:
        frame = pl.read_csv(file_path, infer_schema_length=0)
    except pl.exceptions.NoDataError:
        raise DataError(f"{path}: file is empty") from None
    except pl.exceptions.ComputeError as e:
        raise DataError(f"{path}: cannot parse CSV: {e}") from None
    if frame.height == 0:
        raise DataError(f"{path}: no data rows")
    return frame


def _line(row: int) -> int:
    return row + HEADER_LINES + 1


def cast_numeric(frame: pl.DataFrame, name: str, path: str) -> np.ndarray:
    """
    Castea una columna de strings a float64 reportando la primera celda inválida.

    Raises:
        CsvParseError: celda vacía, no numérica o no finita
    """
    raw = frame.get_column(name).str.strip_chars()
    missing = raw.is_null() | (raw == "")
    if missing.any():
        row = int(missing.arg_true()[0])
        raise CsvParseError(path, _line(row), name, None, "missing value")
    values = raw.cast(pl.Float64, strict=False)
    invalid = values.is_null()
    if invalid.any():
        row = int(invalid.arg_true()[0])
        raise CsvParseError(path, _line(row), name, raw[row], "not a number")
    array = values.to_numpy().astype(np.float64)
    bad = ~np.isfinite(array)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise CsvParseError(path, _line(row), name, raw[row], "value is not finite")
    return array


def parse_dates(frame: pl.DataFrame, name: str, path: str) -> Tuple[str, ...]:
    """Fechas ISO-8601 estrictamente crecientes, como strings."""
    raw = frame.get_column(name).str.strip_chars()
    valid = raw.str.contains(ISO_DATE_PATTERN).fill_null(False)
    if not valid.all():
        row = int((~valid).arg_true()[0])
        raise CsvParseError(path, _line(row), name, raw[row], "date is not ISO-8601 (YYYY-MM-DD)")
    dates = tuple(raw.to_list())
    for row in range(1, len(dates)):
        if dates[row] <= dates[row - 1]:
            raise CsvParseError(path, _line(row), name, dates[row], f"dates must be strictly increasing (previous {dates[row - 1]})")
    return dates


def load_numeric_table(
    path: str,
    columns: Optional[Sequence[str]] = None,
    date_column: Optional[str] = DEFAULT_DATE_COLUMN,
) -> NumericTable:
    """
    Carga un CSV de series de tiempo.

    Args:
        path: Ruta al CSV con encabezado
        columns: Columnas a cargar; por defecto todas salvo la de fechas
        date_column: Nombre de la columna de fechas; si no está en el archivo se ignora

    Returns:
        NumericTable con las columnas casteadas
    """
    frame = read_raw_csv(path)
    dates = None
    if date_column is not None and date_column in frame.columns:
        dates = parse_dates(frame, date_column, path)
    if columns is None:
        names = tuple(c for c in frame.columns if c != date_column)
    else:
        names = tuple(columns)
        unknown = [c for c in names if c not in frame.columns]
        if unknown:
            raise DataError(f"{path}: unknown columns {unknown}; available: {frame.columns}")
    if not names:
        raise DataError(f"{path}: no numeric columns")
    data = {name: cast_numeric(frame, name, path) for name in names}
    return NumericTable(path=str(path), names=names, columns=data, dates=dates)


def load_json(path: str) -> Any:
    """Lee un archivo JSON (config, sidecar de grupos)."""
    file_path = Path(path)
    if not file_path.exists():
        raise DataError(f"file not found: {path}")
    try:
        return orjson.loads(file_path.read_bytes())
    except orjson.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON: {e}") from None


def dumps(payload: Any) -> bytes:
    return orjson.dumps(payload, option=JSON_OPTIONS)


def write_atomic(path: str, content: bytes) -> Path:
    """Escribe en un temporal del mismo directorio y lo renombra sobre `path`."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(content)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def write_json(path: str, payload: Dict[str, Any]) -> Path:
    return write_atomic(path, dumps(payload) + b"\n")


def write_frame(path: str, frame: pl.DataFrame) -> Path:
    """CSV de una tabla Polars, con escritura atómica."""
    return write_atomic(path, frame.write_csv().encode("utf-8"))
