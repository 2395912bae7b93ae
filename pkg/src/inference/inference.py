"""
Estimador debiased, pivotes, intervalos de confianza y test de Wald (Granger).

Estrategia:
- B_G = Θ̂_G X'û/T corrige el sesgo de contracción del sg-LASSO
- Los pivotes y los intervalos usan la diagonal de Ξ̂_G
- El test de Wald usa la inversa generalizada de RΞ̂_GR' por autovalores,
  anulando los autovalores por debajo de 1e-10·λ_max; los grados de libertad
  son el rango numérico efectivamente usado
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from common import ConfigError, DegenerateVarianceError, DimensionError, RankDeficiencyError
from core.timeseries import TimeSeriesDataset
from hac.hac import LongRunVariance
from inference.distributions import chi2_sf, normal_cdf, normal_ppf
from nodewise.nodewise import PrecisionEstimate
from sglasso.sglasso import SgLassoFit


PINV_RELATIVE_CUTOFF = 1e-10
RANK_RELATIVE_CUTOFF = 1e-10
# Cuantil exacto usado internamente; los reportes estilo tabla usan 1.96
Z_975 = 1.959963984540054
TABLE_Z = 1.96


@dataclass(frozen=True)
class DebiasedEstimate:
    """β̂_G + B_G, la corrección B_G y el grupo G."""

    beta_debiased: np.ndarray
    bias_correction: np.ndarray
    group: Tuple[int, ...]
    beta_hat: np.ndarray = field(default=None, repr=False)

    def position(self, j: int) -> int:
        try:
            return self.group.index(j)
        except ValueError:
            raise DimensionError(f"column {j} is not in the debiased group {self.group}") from None


@dataclass(frozen=True)
class GrangerTestResult:
    """Resultado del test de Wald para un grupo y un par (kernel, M_T)."""

    wald_stat: float
    dof: int
    p_value: float
    xi: LongRunVariance
    ci_per_coordinate: Tuple[Tuple[float, float], ...]
    kernel_kind: str
    bandwidth: float
    nominal_rows: int
    rank_reduced: bool = False

    def significant(self, level: float) -> bool:
        return self.p_value < level


def debias(
    fit: SgLassoFit,
    prec: PrecisionEstimate,
    data: TimeSeriesDataset,
    group: Optional[Sequence[int]] = None,
) -> DebiasedEstimate:
    """
    Corrección de sesgo B_G = Θ̂_G X'û/T y estimador β̂_G + B_G.

    Raises:
        DimensionError: si el ajuste, las filas de precisión y los datos no coinciden
    """
    group = prec.requested if group is None else tuple(int(j) for j in group)
    if fit.residuals.shape != (data.T,) or fit.beta.shape != (data.p,):
        raise DimensionError("fit was not produced on this dataset")
    missing = [j for j in group if j not in prec.rows]
    if missing:
        raise DimensionError(f"precision rows missing for group columns {missing}")
    theta = np.vstack([prec.rows[j] for j in group])
    if theta.shape[1] != data.p:
        raise DimensionError(f"precision rows have length {theta.shape[1]}, expected p={data.p}")
    correction = theta @ (data.X.T @ fit.residuals) / data.T
    beta_hat = np.asarray(fit.beta)[list(group)]
    return DebiasedEstimate(
        beta_debiased=beta_hat + correction,
        bias_correction=correction,
        group=group,
        beta_hat=beta_hat,
    )


def _standard_error(est: DebiasedEstimate, xi: LongRunVariance, j: int, T: int) -> Tuple[int, float]:
    position = est.position(j)
    variance = xi.variance(position)
    if not variance > 0:
        raise DegenerateVarianceError(f"long-run variance of column {j} is {variance:g}; must be positive")
    return position, math.sqrt(variance / T)


def pivot(est: DebiasedEstimate, xi: LongRunVariance, j: int, beta0: float, T: int) -> float:
    """
    (β̂_j + B_j - β₀)/√(Ξ̂_jj/T).

    Args:
        est: Estimación debiased
        xi: Varianza de largo plazo del mismo grupo
        j: Índice de columna (debe estar en el grupo)
        beta0: Valor bajo la hipótesis
        T: Tamaño muestral
    """
    position, se = _standard_error(est, xi, j, T)
    return float((est.beta_debiased[position] - beta0) / se)


def confidence_interval(
    est: DebiasedEstimate, xi: LongRunVariance, j: int, T: int, level: float = 0.95
) -> Tuple[float, float]:
    """Intervalo centrado en el coeficiente debiased con semiancho z_{(1+level)/2}·√(Ξ̂_jj/T)."""
    if not 0.0 < level < 1.0:
        raise ConfigError(f"confidence level must be in (0, 1), got {level}")
    position, se = _standard_error(est, xi, j, T)
    z = Z_975 if level == 0.95 else normal_ppf((1.0 + level) / 2.0)
    center = float(est.beta_debiased[position])
    return center - z * se, center + z * se


def two_sided_p_value(z: float) -> float:
    return 2.0 * (1.0 - normal_cdf(abs(z)))


def _deficient_rows(R: np.ndarray) -> List[int]:
    """Filas que no aumentan el rango al agregarse en orden."""
    deficient = []
    kept: List[np.ndarray] = []
    scale = max(float(np.linalg.norm(R, 2)), np.finfo(float).tiny)
    for i, row in enumerate(R):
        candidate = np.vstack(kept + [row])
        s = np.linalg.svd(candidate, compute_uv=False)
        if s[-1] <= RANK_RELATIVE_CUTOFF * scale:
            deficient.append(i)
        else:
            kept.append(row)
    return deficient


def generalized_inverse(A: np.ndarray) -> Tuple[np.ndarray, int]:
    """Inversa de Moore-Penrose de una matriz simétrica por autovalores; retorna (A⁺, rango)."""
    A = (A + A.T) / 2.0
    values, vectors = np.linalg.eigh(A)
    top = float(np.max(np.abs(values))) if values.size else 0.0
    keep = np.abs(values) > PINV_RELATIVE_CUTOFF * top if top > 0 else np.zeros_like(values, dtype=bool)
    inverse = (vectors[:, keep] / values[keep]) @ vectors[:, keep].T
    return inverse, int(keep.sum())


def wald_test(
    est: DebiasedEstimate,
    xi: LongRunVariance,
    R: Optional[np.ndarray],
    T: int,
    q: Optional[np.ndarray] = None,
    level: float = 0.95,
) -> GrangerTestResult:
    """
    W_T = T [R(β̂_G + B_G) - q]' (RΞ̂_GR')⁺ [R(β̂_G + B_G) - q] frente a χ²_r.

    Para el test de Granger R = I_{|G|} y q = 0 (pasar R=None).

    Raises:
        RankDeficiencyError: si R no tiene rango fila completo, nombrando las filas
    """
    g = len(est.group)
    R = np.eye(g) if R is None else np.atleast_2d(np.asarray(R, dtype=np.float64))
    if R.shape[1] != g:
        raise DimensionError(f"R has {R.shape[1]} columns but the group has {g} coefficients")
    singular = np.linalg.svd(R, compute_uv=False)
    if singular.size < R.shape[0] or singular[-1] <= RANK_RELATIVE_CUTOFF * singular[0]:
        rows = tuple(_deficient_rows(R))
        raise RankDeficiencyError(f"restriction matrix R is rank deficient; dependent rows: {list(rows)}", rows=rows)
    q = np.zeros(R.shape[0]) if q is None else np.asarray(q, dtype=np.float64)
    deviation = R @ est.beta_debiased - q
    inverse, rank = generalized_inverse(R @ xi.xi @ R.T)
    if rank == 0:
        raise DegenerateVarianceError("R Ξ̂ R' is numerically zero; the Wald statistic is undefined")
    wald = float(T * deviation @ inverse @ deviation)
    wald = max(wald, 0.0)
    intervals = tuple(confidence_interval(est, xi, j, T, level) for j in est.group)
    return GrangerTestResult(
        wald_stat=wald,
        dof=rank,
        p_value=chi2_sf(wald, rank),
        xi=xi,
        ci_per_coordinate=intervals,
        kernel_kind=xi.kernel.kind,
        bandwidth=float(xi.kernel.bandwidth),
        nominal_rows=int(R.shape[0]),
        rank_reduced=rank != R.shape[0],
    )


def granger_report_entry(
    group_name: str,
    result: GrangerTestResult,
    est: DebiasedEstimate,
    column_names: Sequence[str],
    T: int,
) -> Dict[str, object]:
    """Entrada JSON del reporte de Granger para un grupo y una celda (kernel, M_T)."""
    coefficients = []
    for position, j in enumerate(est.group):
        low, high = result.ci_per_coordinate[position]
        coefficients.append({
            "name": column_names[j],
            "estimate": float(est.beta_hat[position]),
            "debiased": float(est.beta_debiased[position]),
            "se": math.sqrt(max(result.xi.variance(position), 0.0) / T),
            "ci_low": low,
            "ci_high": high,
        })
    return {
        "group_name": group_name,
        "bandwidth": result.bandwidth,
        "kernel": result.kernel_kind,
        "wald": result.wald_stat,
        "dof": result.dof,
        "nominal_dof": result.nominal_rows,
        "rank_reduced": result.rank_reduced,
        "p_value": result.p_value,
        "per_coefficient": coefficients,
    }
