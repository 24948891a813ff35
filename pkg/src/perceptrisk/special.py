"""Scalar special functions: log-gamma, digamma, inverse digamma, and the
regularized lower incomplete gamma function.

Each function exists twice: a scalar kernel (``_lgamma``, ``_digamma``, ...)
written in numba-compatible Python, and a vectorized numpy twin
(``lgamma_np``, ``digamma_np``, ...) used by the fallback paths when numba is
disabled.  The public wrappers validate their arguments and always call the
scalar kernels.
"""
import math

import numpy as np

from ._accel import njit
from .errors import ConvergenceError, ValidationError

EULER_GAMMA = 0.57721566490153286061
HALF_LOG_2PI = 0.91893853320467274178
TINY = 1e-300
MAX_TERMS = 500
INV_DIGAMMA_MAX_ITER = 20

# shift threshold for the asymptotic expansions below
_ASYMPTOTIC_MIN = 10.0


# ----------------------------------------------------------------------------
# scalar kernels
# ----------------------------------------------------------------------------


@njit
def _stirling_corr(z):
    # lgamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2], valid for z >= 10
    r = 1.0 / z
    r2 = r * r
    return r * (
        1.0 / 12.0
        + r2
        * (
            -1.0 / 360.0
            + r2
            * (
                1.0 / 1260.0
                + r2
                * (
                    -1.0 / 1680.0
                    + r2
                    * (
                        1.0 / 1188.0
                        + r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0 + r2 * (-3617.0 / 122400.0)))
                    )
                )
            )
        )
    )


@njit
def _lgamma(x):
    if not (x > 0.0) or math.isinf(x):
        return math.nan
    prod = 1.0
    z = x
    while z < _ASYMPTOTIC_MIN:
        prod *= z
        z += 1.0
    val = (z - 0.5) * math.log(z) - z + HALF_LOG_2PI + _stirling_corr(z)
    if prod != 1.0:
        val -= math.log(prod)
    return val


@njit
def _digamma(x):
    if not (x > 0.0) or math.isinf(x):
        return math.nan
    acc = 0.0
    z = x
    while z < _ASYMPTOTIC_MIN:
        acc -= 1.0 / z
        z += 1.0
    r = 1.0 / z
    r2 = r * r
    tail = r2 * (
        1.0 / 12.0
        - r2
        * (
            1.0 / 120.0
            - r2
            * (
                1.0 / 252.0
                - r2 * (1.0 / 240.0 - r2 * (1.0 / 132.0 - r2 * (691.0 / 32760.0 - r2 / 12.0)))
            )
        )
    )
    return acc + math.log(z) - 0.5 * r - tail


@njit
def _trigamma(x):
    acc = 0.0
    z = x
    while z < _ASYMPTOTIC_MIN:
        acc += 1.0 / (z * z)
        z += 1.0
    r = 1.0 / z
    r2 = r * r
    tail = r * (
        1.0
        + r
        * (
            0.5
            + r
            * (
                1.0 / 6.0
                + r2
                * (
                    -1.0 / 30.0
                    + r2
                    * (
                        1.0 / 42.0
                        + r2 * (-1.0 / 30.0 + r2 * (5.0 / 66.0 + r2 * (-691.0 / 2730.0 + r2 * 7.0 / 6.0)))
                    )
                )
            )
        )
    )
    return acc + tail


@njit
def _inv_digamma(y):
    """Newton solve of digamma(x) = y; NaN when 20 iterations do not suffice."""
    if not math.isfinite(y):
        return math.nan
    if y >= -2.22:
        x = math.exp(y) + 0.5
    else:
        x = -1.0 / (y + EULER_GAMMA)
    tol = max(1e-10, 8.9e-16 * abs(y))
    for _ in range(INV_DIGAMMA_MAX_ITER):
        resid = _digamma(x) - y
        if abs(resid) <= 0.25 * tol:
            return x
        step = resid / _trigamma(x)
        x_new = x - step
        if x_new <= 0.0:
            x_new = 0.5 * x
        if abs(x_new - x) <= 1e-15 * x:
            x = x_new
            break
        x = x_new
    if abs(_digamma(x) - y) <= tol:
        return x
    return math.nan


@njit
def _log_prefactor(a, x):
    # a ln x - x - lgamma(a), arranged to avoid cancellation when x ~ a >> 1
    if a < _ASYMPTOTIC_MIN:
        return a * math.log(x) - x - _lgamma(a)
    d = (x - a) / a
    return a * (math.log1p(d) - d) + 0.5 * math.log(a) - HALF_LOG_2PI - _stirling_corr(a)


@njit
def _gammainc_pair(a, x):
    """Return (log P(a, x), P(a, x)); both NaN on non-convergence or bad domain."""
    if not (a > 0.0) or not (x >= 0.0) or math.isinf(a) or math.isnan(x):
        return math.nan, math.nan
    if x == 0.0:
        return -math.inf, 0.0
    if math.isinf(x):
        return 0.0, 1.0
    pre = _log_prefactor(a, x)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        ok = False
        for _ in range(MAX_TERMS):
            ap += 1.0
            term *= x / ap
            total += term
            if term < total * 1e-17:
                ok = True
                break
        if not ok:
            return math.nan, math.nan
        log_p = pre + math.log(total)
        return log_p, math.exp(log_p)
    # modified Lentz continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    ok = False
    for i in range(1, MAX_TERMS + 1):
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
        if abs(delta - 1.0) < 1e-15:
            ok = True
            break
    if not ok:
        return math.nan, math.nan
    q = math.exp(pre) * h
    return math.log1p(-q), 1.0 - q


@njit
def _log_gammainc(a, x):
    return _gammainc_pair(a, x)[0]


# ----------------------------------------------------------------------------
# vectorized numpy twins (fallback path)
# ----------------------------------------------------------------------------


def _stirling_corr_np(z):
    r = 1.0 / z
    r2 = r * r
    coeffs = (-3617.0 / 122400.0, 1.0 / 156.0, -691.0 / 360360.0, 1.0 / 1188.0,
              -1.0 / 1680.0, 1.0 / 1260.0, -1.0 / 360.0, 1.0 / 12.0)
    acc = np.zeros_like(z)
    for c in coeffs:
        acc = acc * r2 + c
    return acc * r


def _shift_up(x):
    z = np.array(x, dtype=float, copy=True)
    prod = np.ones_like(z)
    inv_sum = np.zeros_like(z)
    inv_sq_sum = np.zeros_like(z)
    mask = z < _ASYMPTOTIC_MIN
    while mask.any():
        zm = z[mask]
        prod[mask] *= zm
        inv_sum[mask] += 1.0 / zm
        inv_sq_sum[mask] += 1.0 / (zm * zm)
        z[mask] = zm + 1.0
        mask = z < _ASYMPTOTIC_MIN
    return z, prod, inv_sum, inv_sq_sum


def lgamma_np(x):
    x = np.asarray(x, dtype=float)
    z, prod, _, _ = _shift_up(x)
    return (z - 0.5) * np.log(z) - z + HALF_LOG_2PI + _stirling_corr_np(z) - np.log(prod)


def digamma_np(x):
    x = np.asarray(x, dtype=float)
    z, _, inv_sum, _ = _shift_up(x)
    r2 = 1.0 / (z * z)
    coeffs = (-1.0 / 12.0, 691.0 / 32760.0, -1.0 / 132.0, 1.0 / 240.0,
              -1.0 / 252.0, 1.0 / 120.0, -1.0 / 12.0)
    acc = np.zeros_like(z)
    for c in coeffs:
        acc = acc * r2 + c
    return -inv_sum + np.log(z) - 0.5 / z + acc * r2


def trigamma_np(x):
    x = np.asarray(x, dtype=float)
    z, _, _, inv_sq_sum = _shift_up(x)
    r = 1.0 / z
    r2 = r * r
    coeffs = (7.0 / 6.0, -691.0 / 2730.0, 5.0 / 66.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0)
    acc = np.zeros_like(z)
    for c in coeffs:
        acc = acc * r2 + c
    tail = r * (1.0 + r * (0.5 + r * (1.0 / 6.0 + r2 * acc)))
    return inv_sq_sum + tail


def inv_digamma_np(y):
    y = np.asarray(y, dtype=float)
    x = np.where(y >= -2.22, np.exp(np.minimum(y, 700.0)) + 0.5, -1.0 / (y + EULER_GAMMA))
    for _ in range(INV_DIGAMMA_MAX_ITER):
        x_new = x - (digamma_np(x) - y) / trigamma_np(x)
        x_new = np.where(x_new <= 0.0, 0.5 * x, x_new)
        done = np.all(np.abs(x_new - x) <= 1e-15 * x)
        x = x_new
        if done:
            break
    tol = np.maximum(1e-10, 8.9e-16 * np.abs(y))
    return np.where(np.abs(digamma_np(x) - y) <= tol, x, np.nan)


def _log_prefactor_np(a, x):
    small = a < _ASYMPTOTIC_MIN
    a_big = np.where(small, _ASYMPTOTIC_MIN, a)
    d = (x - a_big) / a_big
    with np.errstate(divide="ignore", invalid="ignore"):
        big_val = (a_big * (np.log1p(d) - d) + 0.5 * np.log(a_big) - HALF_LOG_2PI
                   - _stirling_corr_np(a_big))
        small_val = a * np.log(x) - x - lgamma_np(np.where(small, a, 1.0))
    return np.where(small, small_val, big_val)


def log_gammainc_np(a, x):
    """Vectorized log P(a, x); broadcasts ``a`` against ``x``.  NaN marks
    entries whose series or continued fraction did not converge."""
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    out = np.full(a.shape, np.nan)
    zero = x == 0.0
    out[zero] = -np.inf
    series = (~zero) & (x < a + 1.0)
    frac = (~zero) & ~series

    if series.any():
        aa, xx = a[series], x[series]
        ap = aa.copy()
        term = 1.0 / aa
        total = term.copy()
        active = np.ones(aa.shape, dtype=bool)
        for _ in range(MAX_TERMS):
            ap = ap + 1.0
            term = np.where(active, term * xx / ap, 0.0)
            total = total + term
            active &= ~(term < total * 1e-17)
            if not active.any():
                break
        val = _log_prefactor_np(aa, xx) + np.log(total)
        val[active] = np.nan
        out[series] = val

    if frac.any():
        aa, xx = a[frac], x[frac]
        b = xx + 1.0 - aa
        c = np.full(aa.shape, 1.0 / TINY)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(aa.shape, dtype=bool)
        for i in range(1, MAX_TERMS + 1):
            an = -i * (i - aa)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < TINY, TINY, d)
            c = b + an / c
            c = np.where(np.abs(c) < TINY, TINY, c)
            d = 1.0 / d
            delta = np.where(active, d * c, 1.0)
            h = h * delta
            active &= ~(np.abs(delta - 1.0) < 1e-15)
            if not active.any():
                break
        q = np.exp(_log_prefactor_np(aa, xx)) * h
        val = np.log1p(-q)
        val[active] = np.nan
        out[frac] = val
    return out


# ----------------------------------------------------------------------------
# public API
# ----------------------------------------------------------------------------


def _check_positive(name, x):
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValidationError(f"{name} must be positive and finite, got {x!r}")
    return x


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``.

    >>> round(log_gamma(5.0), 9)
    3.17805383
    """
    return float(_lgamma(_check_positive("x", x)))


def digamma(x: float) -> float:
    """Digamma function for ``x > 0``."""
    return float(_digamma(_check_positive("x", x)))


def inv_digamma(y: float) -> float:
    """Return ``x > 0`` with ``digamma(x) == y`` to within 1e-10."""
    y = float(y)
    if not math.isfinite(y):
        raise ValidationError(f"inv_digamma needs a finite argument, got {y!r}")
    x = _inv_digamma(y)
    if math.isnan(x):
        raise ConvergenceError(
            f"inv_digamma({y!r}) did not converge in {INV_DIGAMMA_MAX_ITER} Newton steps"
        )
    return float(x)


def reg_lower_inc_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``.

    Series expansion below ``x = a + 1``, continued fraction above it.
    """
    a = _check_positive("a", a)
    x = float(x)
    if not (x >= 0.0):
        raise ValidationError(f"x must be nonnegative, got {x!r}")
    p = _gammainc_pair(a, x)[1]
    if math.isnan(p):
        raise ConvergenceError(f"P({a!r}, {x!r}) did not converge within {MAX_TERMS} terms")
    return float(min(max(p, 0.0), 1.0))
