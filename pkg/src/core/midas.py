"""
Matrices de rezagos y agregación MIDAS con diccionario de Legendre.

Este módulo contiene:
- build_lag_matrix / lag_targets: bloques de rezagos de baja frecuencia
- legendre_dictionary: polinomios de Legendre desplazados a [0,1] sobre la
  grilla uniforme u_l = (l-1)/(L-1), ortogonalizados sobre esa grilla
- aggregate_midas: lag_block · weights / L
- high_frequency_lags: bloque de m rezagos de alta frecuencia por período

Convención de rezagos: la columna 0 es el rezago más reciente (para datos
diarios, el último día del período).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from common import DataError, DimensionError, RankDeficiencyError


@dataclass(frozen=True)
class MidasDictionary:
    """Pesos L×(d+1); la columna k es el polinomio de grado k sobre la grilla."""

    weights: np.ndarray
    degree: int
    lag_count: int


def build_lag_matrix(series: Sequence[float], lags: int) -> np.ndarray:
    """
    Construye la matriz (T-lags)×lags de rezagos de `series`.

    La fila t contiene series[t+lags-1-j] en la columna j, de modo que la
    columna 0 es el rezago más reciente de la meta series[t+lags].

    Ejemplo:
        >>> build_lag_matrix([1, 2, 3, 4], 2)
        array([[2., 1.],
               [3., 2.]])
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"series must be a vector, got shape {x.shape}")
    if lags < 1:
        raise DimensionError(f"lags must be >= 1, got {lags}")
    T = x.shape[0]
    if lags >= T:
        raise DimensionError(f"lags={lags} must be smaller than the series length {T}")
    rows = T - lags
    return np.column_stack([x[lags - 1 - j: lags - 1 - j + rows] for j in range(lags)])


def lag_targets(series: Sequence[float], lags: int) -> np.ndarray:
    """Metas series[lags:] alineadas con `build_lag_matrix(series, lags)`."""
    x = np.asarray(series, dtype=np.float64)
    if lags >= x.shape[0]:
        raise DimensionError(f"lags={lags} must be smaller than the series length {x.shape[0]}")
    return x[lags:].copy()


def legendre_dictionary(degree: int, lag_count: int, normalize: bool = False) -> MidasDictionary:
    """
    Diccionario de Legendre desplazado a [0,1] evaluado sobre la grilla de rezagos.

    Los polinomios se evalúan en u_l = (l-1)/(L-1) y se ortogonalizan sobre la
    grilla en orden de grado (Gram-Schmidt vía QR), lo que conserva el span de
    grado <= k en cada columna k. Cada columna se escala para valer 1 en u=1,
    la normalización de Legendre; así la columna 0 es de unos y la columna 1 es
    exactamente 2u-1. Con `normalize=True` cada columna tiene norma euclídea 1.

    Args:
        degree: Grado máximo d >= 0
        lag_count: Cantidad de rezagos L >= d+1
        normalize: Escalar columnas a norma unitaria

    Raises:
        RankDeficiencyError: si L < d+1
    """
    if degree < 0:
        raise DataError(f"degree must be >= 0, got {degree}")
    if lag_count < degree + 1:
        raise RankDeficiencyError(
            f"lag_count={lag_count} is smaller than degree+1={degree + 1}; the dictionary would be rank deficient"
        )
    if lag_count == 1:
        grid = np.zeros(1)
    else:
        grid = np.arange(lag_count, dtype=np.float64) / (lag_count - 1)
    # legvander evalúa P_k(2u-1) = P̃_k(u) para k = 0..d
    raw = legendre.legvander(2.0 * grid - 1.0, degree)
    q, _ = np.linalg.qr(raw)
    weights = q / q[-1, :]
    if normalize:
        weights = weights / np.linalg.norm(weights, axis=0)
    weights.setflags(write=False)
    return MidasDictionary(weights=weights, degree=degree, lag_count=lag_count)


def aggregate_midas(lag_block: np.ndarray, dictionary: MidasDictionary) -> np.ndarray:
    """
    Agrega un bloque T×L de rezagos de alta frecuencia: lag_block · weights / L.

    Con el diccionario de grado 0 el resultado es el promedio por fila.
    """
    block = np.asarray(lag_block, dtype=np.float64)
    if block.ndim != 2 or block.shape[1] != dictionary.lag_count:
        raise DimensionError(
            f"lag block has shape {block.shape} but the dictionary expects {dictionary.lag_count} columns"
        )
    return block @ dictionary.weights / dictionary.lag_count


def high_frequency_lags(
    hf_dates: Sequence[str],
    hf_values: Sequence[float],
    lf_dates: Sequence[str],
    lag_count: int,
) -> np.ndarray:
    """
    Bloque de `lag_count` rezagos de alta frecuencia para cada fecha de baja frecuencia.

    Para el período con fecha de cierre D, el rezago 1 es la última
    observación con fecha <= D, el rezago 2 la anterior, etc. Las fechas
    deben ser ISO-8601 ordenadas.

    Returns:
        Matriz len(lf_dates)×lag_count; filas sin historia suficiente quedan en NaN
    """
    hf_dates = np.asarray([str(d) for d in hf_dates])
    values = np.asarray(hf_values, dtype=np.float64)
    if hf_dates.shape[0] != values.shape[0]:
        raise DimensionError(f"{hf_dates.shape[0]} high-frequency dates for {values.shape[0]} values")
    if np.any(hf_dates[1:] <= hf_dates[:-1]):
        raise DataError("high-frequency dates are not strictly increasing")
    positions = np.searchsorted(hf_dates, np.asarray([str(d) for d in lf_dates]), side="right") - 1
    out = np.full((len(positions), lag_count), np.nan)
    for i, last in enumerate(positions):
        first = last - lag_count + 1
        if first < 0:
            continue
        out[i] = values[first: last + 1][::-1]
    return out
