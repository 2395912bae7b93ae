"""
Distribuciones de referencia: chi-cuadrado y normal estándar.

La función de supervivencia de χ²_r es la gamma incompleta superior
regularizada Q(r/2, x/2), evaluada con la serie cuando x < a+1 y con la
fracción continua (Lentz modificado) en otro caso. La normal se evalúa con
erfc, que conserva precisión relativa en las colas.

Precisión documentada: error absoluto < 1e-10 en [0, 50].
"""

import math
import sys


EPS = 1e-16
MAX_ITERATIONS = 10_000
TINY = sys.float_info.min / sys.float_info.epsilon


def _gamma_p_series(a: float, x: float) -> float:
    """P(a, x) por la serie de Pearson."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAX_ITERATIONS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_continued_fraction(a: float, x: float) -> float:
    """Q(a, x) por fracción continua."""
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITERATIONS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_q(a: float, x: float) -> float:
    """Gamma incompleta superior regularizada Q(a, x) = Γ(a, x)/Γ(a)."""
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_p_series(a, x))
    return min(1.0, _gamma_q_continued_fraction(a, x))


def chi2_sf(x: float, r: int) -> float:
    """
    P(χ²_r > x).

    Ejemplo:
        >>> round(chi2_sf(3.841459, 1), 6)
        0.05
    """
    if r < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {r}")
    if x <= 0:
        return 1.0
    return regularized_gamma_q(r / 2.0, x / 2.0)


def normal_cdf(x: float) -> float:
    """Φ(x) = erfc(-x/√2)/2."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def normal_ppf(q: float) -> float:
    """
    Cuantil de la normal estándar.

    Aproximación racional de Acklam seguida de dos pasos de Newton sobre
    `normal_cdf`, suficiente para error relativo ~1e-15.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {q}")
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00, 3.754408661907416e00)
    low = 0.02425
    if q < low:
        s = math.sqrt(-2.0 * math.log(q))
        x = (((((c[0] * s + c[1]) * s + c[2]) * s + c[3]) * s + c[4]) * s + c[5]) / \
            ((((d[0] * s + d[1]) * s + d[2]) * s + d[3]) * s + 1.0)
    elif q > 1.0 - low:
        s = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -(((((c[0] * s + c[1]) * s + c[2]) * s + c[3]) * s + c[4]) * s + c[5]) / \
            ((((d[0] * s + d[1]) * s + d[2]) * s + d[3]) * s + 1.0)
    else:
        s = q - 0.5
        r = s * s
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    for _ in range(2):
        density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if density == 0.0:
            break
        x -= (normal_cdf(x) - q) / density
    return x
