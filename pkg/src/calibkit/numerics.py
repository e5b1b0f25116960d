"""Special functions and small statistical helpers."""
import math
from statistics import NormalDist

import numpy as np

from .errors import BadParameter, EmptyInput, TooFewSamples

_STD_NORMAL = NormalDist()

_CF_MAX_ITER = 10_000
_CF_EPS = 1e-16
_CF_TINY = 1e-300


_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Stirling series B_2k / (2k (2k - 1)), k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)


def _lgamma_correction(x: float) -> float:
    """``lgamma(x) - ((x - 1/2) log x - x + log sqrt(2 pi))`` for ``x >= 10``."""
    inv2 = 1.0 / (x * x)
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * inv2 + c
    return acc / x


def log_beta(a: float, b: float) -> float:
    """Natural logarithm of the Beta function ``B(a, b)``.

    Large arguments use the Stirling correction terms directly so the
    ``lgamma`` differences never cancel.
    """
    if not (a > 0 and b > 0):
        raise BadParameter(f"log_beta needs a, b > 0, got a={a}, b={b}")
    p, q = min(a, b), max(a, b)
    s = p + q
    if p >= 10.0:
        corr = _lgamma_correction(p) + _lgamma_correction(q) - _lgamma_correction(s)
        return -0.5 * math.log(q) + _LOG_SQRT_2PI + corr + (p - 0.5) * math.log(p / s) + q * math.log1p(-p / s)
    if q >= 10.0:
        corr = _lgamma_correction(q) - _lgamma_correction(s)
        return math.lgamma(p) + corr + p - p * math.log(s) + (q - 0.5) * math.log1p(-p / s)
    return math.log(math.gamma(p) * (math.gamma(q) / math.gamma(s)))


def _beta_cf(x, a, b):
    # modified Lentz evaluation of the continued fraction for I(x; a, b)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for k in range(1, _CF_MAX_ITER + 1):
        k2 = 2 * k
        aa = k * (b - k) * x / ((qam + k2) * (a + k2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + k) * (qab + k) * x / ((a + k2) * (qap + k2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete Beta function ``I(x; a, b)``.

    Arguments outside ``[0, 1]`` are clamped: ``x <= 0`` gives 0 and
    ``x >= 1`` gives 1. Uses the continued fraction expansion, evaluated on
    the side of the symmetry ``I(x; a, b) = 1 - I(1 - x; b, a)`` where it
    converges quickly.
    """
    if not (a > 0 and b > 0):
        raise BadParameter(f"reg_inc_beta needs a, b > 0, got a={a}, b={b}")
    if math.isnan(x):
        raise BadParameter("reg_inc_beta got x = nan")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(x, a, b) / a
    return 1.0 - math.exp(log_front) * _beta_cf(1.0 - x, b, a) / b


def normal_cdf(z: float) -> float:
    """Standard normal CDF, accurate in both tails."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Inverse of :func:`normal_cdf` on ``(0, 1)``."""
    if not 0.0 < p < 1.0:
        raise BadParameter(f"normal_quantile needs 0 < p < 1, got {p}")
    return _STD_NORMAL.inv_cdf(p)


def sample_std(xs) -> float:
    """Sample standard deviation with ``n - 1`` denominator (two-pass)."""
    xs = np.asarray(xs, dtype=float)
    if xs.size < 2:
        raise TooFewSamples(f"sample_std needs at least 2 values, got {xs.size}")
    centered = xs - xs.mean()
    return math.sqrt(float(np.dot(centered, centered)) / (xs.size - 1))


def median(xs) -> float:
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise EmptyInput("median of an empty sequence")
    return float(np.median(xs))
