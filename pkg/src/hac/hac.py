"""
Kernels y estimador HAC de la varianza de largo plazo Ξ̂_G.

    Ξ̂_G = Σ_{|k|<T} K(k/M_T) Γ̂_k,   Γ̂_k = (1/T) Σ_{t=1}^{T-k} V̂_t V̂_{t+k}',   Γ̂_{-k} = Γ̂_k'

con scores V̂_t = û_t Θ̂_G x_t construidos desde los residuos del sg-LASSO y
las filas nodewise de Θ̂.

Estrategia:
- Parzen y Bartlett tienen soporte |x| <= 1: solo se suman los rezagos con peso no nulo
- Quadratic Spectral tiene soporte infinito: las autocovarianzas de todos los
  rezagos se obtienen por FFT cuando hay muchos rezagos
- El resultado se simetriza con (A + A')/2
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from common import ConfigError, DataError, DimensionError
from core.timeseries import TimeSeriesDataset
from nodewise.nodewise import PrecisionEstimate


KERNELS = ("parzen", "quadratic_spectral", "bartlett")
KERNEL_ALIASES = {"qs": "quadratic_spectral", "pr": "parzen", "newey-west": "bartlett"}

# A partir de esta cantidad de rezagos las autocovarianzas se calculan por FFT
DIRECT_LAG_LIMIT = 256


def kernel_name(kind: str) -> str:
    name = KERNEL_ALIASES.get(kind.lower(), kind.lower())
    if name not in KERNELS:
        raise ConfigError(f"unknown kernel '{kind}'; expected one of {KERNELS}")
    return name


@dataclass(frozen=True)
class KernelSpec:
    """Tipo de kernel y ancho de banda M_T > 0."""

    kind: str
    bandwidth: float

    def __post_init__(self):
        object.__setattr__(self, "kind", kernel_name(self.kind))
        if not self.bandwidth > 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class LongRunVariance:
    """Ξ̂_G simetrizada, el kernel usado y el grupo."""

    xi: np.ndarray
    kernel: KernelSpec
    group: tuple
    asymmetry: float = 0.0

    def variance(self, position: int) -> float:
        return float(self.xi[position, position])


def default_bandwidth(T: int) -> int:
    """M_T = ⌈1.3·T^{1/3}⌉."""
    return int(math.ceil(1.3 * T ** (1.0 / 3.0)))


def _qs(x: np.ndarray) -> np.ndarray:
    out = np.ones_like(x)
    z = 6.0 * np.pi * x / 5.0
    small = np.abs(x) < 1e-4
    zs = z[small]
    # expansión en serie de 3/z²(sin z/z - cos z) alrededor de 0
    out[small] = 1.0 - zs ** 2 / 10.0 + zs ** 4 / 280.0
    zl = z[~small]
    out[~small] = 3.0 / zl ** 2 * (np.sin(zl) / zl - np.cos(zl))
    return out


def kernel_weights(kind: str, x: np.ndarray) -> np.ndarray:
    """Versión vectorizada de `kernel_value`."""
    kind = kernel_name(kind)
    a = np.abs(np.asarray(x, dtype=np.float64))
    if kind == "parzen":
        return np.where(
            a <= 0.5,
            1.0 - 6.0 * a ** 2 + 6.0 * a ** 3,
            np.where(a <= 1.0, 2.0 * (1.0 - a) ** 3, 0.0),
        )
    if kind == "bartlett":
        return np.maximum(0.0, 1.0 - a)
    return _qs(a)


def kernel_value(spec: KernelSpec, x: float) -> float:
    """
    K(x) para el kernel de `spec` (el ancho de banda no interviene).

    Ejemplo:
        >>> kernel_value(KernelSpec("parzen", 1.0), 0.25)
        0.71875
    """
    return float(kernel_weights(spec.kind, np.array([x]))[0])


def score_series(
    residuals: np.ndarray,
    data: TimeSeriesDataset,
    prec: PrecisionEstimate,
    group: Sequence[int] = None,
) -> np.ndarray:
    """
    Scores V̂_t = û_t Θ̂_G x_t, una fila por t (T×|G|).

    Args:
        residuals: Residuos del sg-LASSO ajustado sobre `data`
        data: Dataset
        prec: Filas de precisión que cubren G
        group: Índices G; por defecto `prec.requested`
    """
    residuals = np.asarray(residuals, dtype=np.float64)
    if residuals.shape != (data.T,):
        raise DimensionError(f"residuals have shape {residuals.shape}, expected ({data.T},)")
    group = prec.requested if group is None else tuple(group)
    missing = [j for j in group if j not in prec.rows]
    if missing:
        raise DimensionError(f"precision rows missing for columns {missing}")
    theta = np.vstack([prec.rows[j] for j in group])
    if theta.shape[1] != data.p:
        raise DimensionError(f"precision rows have length {theta.shape[1]}, expected p={data.p}")
    return (data.X @ theta.T) * residuals[:, None]


def _autocovariances_direct(scores: np.ndarray, max_lag: int) -> np.ndarray:
    T = scores.shape[0]
    return np.stack([scores[: T - k].T @ scores[k:] / T for k in range(max_lag + 1)])


def _autocovariances_fft(scores: np.ndarray, max_lag: int) -> np.ndarray:
    T, g = scores.shape
    n = 1 << int(math.ceil(math.log2(2 * T)))
    f = np.fft.rfft(scores, n=n, axis=0)
    out = np.empty((max_lag + 1, g, g))
    for a in range(g):
        # Γ_k[a, b] = (1/T) Σ_t V_{t,a} V_{t+k,b}
        cross = np.fft.irfft(np.conj(f[:, a])[:, None] * f, n=n, axis=0)
        out[:, a, :] = cross[: max_lag + 1] / T
    return out


def autocovariances(scores: np.ndarray, max_lag: int) -> np.ndarray:
    """Γ̂_k para k = 0..max_lag, apiladas (max_lag+1)×g×g."""
    if max_lag <= DIRECT_LAG_LIMIT:
        return _autocovariances_direct(scores, max_lag)
    return _autocovariances_fft(scores, max_lag)


def hac_estimate(scores: np.ndarray, kernel: KernelSpec, group: Sequence[int] = ()) -> LongRunVariance:
    """
    Estimador HAC Ξ̂ = Σ_{|k|<T} K(k/M_T) Γ̂_k con denominador T en cada Γ̂_k.

    Args:
        scores: Matriz T×|G| de scores
        kernel: Kernel y ancho de banda
        group: Índices G a registrar en el resultado

    Returns:
        LongRunVariance simetrizada
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores[:, None]
    T = scores.shape[0]
    if T < 2:
        raise DimensionError(f"HAC estimation needs T >= 2, got {T}")
    if not np.all(np.isfinite(scores)):
        raise DataError("scores contain non-finite values")

    if kernel.kind == "quadratic_spectral":
        max_lag = T - 1
    else:
        # K(k/M) = 0 para k >= M
        max_lag = min(T - 1, max(int(math.ceil(kernel.bandwidth)) - 1, 0))
    lags = np.arange(max_lag + 1)
    weights = kernel_weights(kernel.kind, lags / kernel.bandwidth)
    keep = np.flatnonzero(weights != 0.0)
    max_lag = int(keep[-1]) if keep.size else 0
    gammas = autocovariances(scores, max_lag)

    xi = weights[0] * gammas[0]
    for k in range(1, max_lag + 1):
        if weights[k] != 0.0:
            xi = xi + weights[k] * (gammas[k] + gammas[k].T)
    scale = max(float(np.max(np.abs(xi))), np.finfo(float).tiny)
    asymmetry = float(np.max(np.abs(xi - xi.T))) / scale
    xi = (xi + xi.T) / 2.0
    xi.setflags(write=False)
    return LongRunVariance(xi=xi, kernel=kernel, group=tuple(group), asymmetry=asymmetry)
