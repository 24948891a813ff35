"""Adaptive Gauss-Legendre kernels for Dirichlet Voronoi-cell probabilities.

For cell ``k`` the integrand over ``x >= 0`` is

    prod_{i != k} P(alpha_i, x) * x**(alpha_k - 1) * exp(-x) / Gamma(alpha_k)

evaluated in log space.  When ``alpha_k < 1`` the variable is changed to
``y = x**alpha_k``, which turns the endpoint singularity into a bounded,
continuous integrand ``prod_{i != k} P(alpha_i, x(y)) * exp(-x) / Gamma(alpha_k + 1)``.

Each panel is accepted once its Gauss-Legendre value and the sum over its two
halves agree to within the panel's share of ``tol``.
"""
import math

import numpy as np

from ._accel import njit
from .special import (
    _gammainc_pair,
    _lgamma,
    lgamma_np,
    log_gammainc_np,
)

GL_ORDER = 10
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)
INITIAL_PANELS = 4
MAX_DEPTH = 48
# below this concentration the lower truncation point is simply 0
_LOWER_CUT_MIN_ALPHA = 2.0


@njit
def _quantile_bounds(a, tail):
    """Return (lo, hi) with P(a, lo) <= tail and 1 - P(a, hi) <= tail."""
    hi = a + 10.0 * math.sqrt(a) + 10.0
    while 1.0 - _gammainc_pair(a, hi)[1] > tail:
        hi *= 2.0
    lo_b, hi_b = a, hi
    for _ in range(200):
        if hi_b - lo_b <= 1e-9 * hi_b:
            break
        mid = 0.5 * (lo_b + hi_b)
        if 1.0 - _gammainc_pair(a, mid)[1] > tail:
            lo_b = mid
        else:
            hi_b = mid
    upper = hi_b
    lower = 0.0
    if a > _LOWER_CUT_MIN_ALPHA:
        lo_b, hi_b = 0.0, a
        for _ in range(200):
            if hi_b - lo_b <= 1e-9 * a:
                break
            mid = 0.5 * (lo_b + hi_b)
            if _gammainc_pair(a, mid)[1] <= tail:
                lo_b = mid
            else:
                hi_b = mid
        lower = lo_b
    return lower, upper


@njit
def _log_integrand(alpha, k, y, log_norm, power):
    if power != 1.0:
        x = y**power
    else:
        x = y
    if not (x > 0.0):
        return -math.inf
    acc = -x - log_norm
    if power == 1.0:
        acc += (alpha[k] - 1.0) * math.log(x)
    for i in range(alpha.shape[0]):
        if i == k:
            continue
        lp = _gammainc_pair(alpha[i], x)[0]
        if math.isnan(lp):
            return math.nan
        acc += lp
    return acc


@njit
def _gl_panel(alpha, k, a, b, log_norm, power, nodes, weights):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    total = 0.0
    for j in range(nodes.shape[0]):
        v = _log_integrand(alpha, k, mid + half * nodes[j], log_norm, power)
        if math.isnan(v):
            return math.nan
        total += weights[j] * math.exp(v)
    return half * total


@njit
def _cell_probability(alpha, k, tol, nodes, weights):
    ak = alpha[k]
    lower, upper = _quantile_bounds(ak, 0.1 * tol)
    if ak < 1.0:
        power = 1.0 / ak
        log_norm = _lgamma(ak + 1.0)
        y_lo = lower**ak
        y_hi = upper**ak
    else:
        power = 1.0
        log_norm = _lgamma(ak)
        y_lo = lower
        y_hi = upper
    width = y_hi - y_lo
    # DFS stack of panels: (a, b, whole-panel value, depth)
    cap = INITIAL_PANELS + 2 * MAX_DEPTH + 4
    st_a = np.empty(cap)
    st_b = np.empty(cap)
    st_v = np.empty(cap)
    st_d = np.empty(cap, dtype=np.int64)
    top = 0
    for p in range(INITIAL_PANELS - 1, -1, -1):
        a = y_lo + width * p / INITIAL_PANELS
        b = y_lo + width * (p + 1) / INITIAL_PANELS
        st_a[top] = a
        st_b[top] = b
        st_v[top] = _gl_panel(alpha, k, a, b, log_norm, power, nodes, weights)
        st_d[top] = 0
        top += 1
    total = 0.0
    exhausted = 0
    while top > 0:
        top -= 1
        a = st_a[top]
        b = st_b[top]
        whole = st_v[top]
        depth = st_d[top]
        m = 0.5 * (a + b)
        left = _gl_panel(alpha, k, a, m, log_norm, power, nodes, weights)
        right = _gl_panel(alpha, k, m, b, log_norm, power, nodes, weights)
        if math.isnan(whole) or math.isnan(left) or math.isnan(right):
            return math.nan, exhausted
        local_tol = tol * (b - a) / width
        if abs(left + right - whole) <= local_tol:
            total += left + right
        elif depth >= MAX_DEPTH:
            total += left + right
            exhausted += 1
        else:
            st_a[top] = m
            st_b[top] = b
            st_v[top] = right
            st_d[top] = depth + 1
            top += 1
            st_a[top] = a
            st_b[top] = m
            st_v[top] = left
            st_d[top] = depth + 1
            top += 1
    return total, exhausted


@njit
def exceedance_numba(alpha, tol, nodes, weights):
    """Raw (unnormalized) cell probabilities; NaN entries flag special-function
    failure.  Second output counts panels that hit the depth limit."""
    m = alpha.shape[0]
    out = np.empty(m)
    exhausted = 0
    for k in range(m):
        val, ex = _cell_probability(alpha, k, tol, nodes, weights)
        out[k] = val
        exhausted += ex
    return out, exhausted


# ----------------------------------------------------------------------------
# numpy fallback: breadth-first over all live panels of one cell at a time
# ----------------------------------------------------------------------------


def _log_integrand_np(alpha, k, y, log_norm, power):
    x = y**power if power != 1.0 else y
    with np.errstate(divide="ignore"):
        acc = -x - log_norm
        if power == 1.0:
            acc = acc + (alpha[k] - 1.0) * np.log(x)
    for i in range(alpha.shape[0]):
        if i != k:
            acc = acc + log_gammainc_np(alpha[i], x)
    return np.where(x > 0.0, acc, -np.inf)


def _gl_panels_np(alpha, k, a, b, log_norm, power, nodes, weights):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.exp(_log_integrand_np(alpha, k, y.ravel(), log_norm, power)).reshape(y.shape)
    return half * (vals @ weights)


def _quantile_bounds_np(a, tail):
    # scalar bisection; cheap relative to the integrand evaluations
    def upper_tail(x):
        return 1.0 - math.exp(float(log_gammainc_np(a, x)))

    def lower_cdf(x):
        return math.exp(float(log_gammainc_np(a, x))) if x > 0 else 0.0

    hi = a + 10.0 * math.sqrt(a) + 10.0
    while upper_tail(hi) > tail:
        hi *= 2.0
    lo_b, hi_b = a, hi
    for _ in range(200):
        if hi_b - lo_b <= 1e-9 * hi_b:
            break
        mid = 0.5 * (lo_b + hi_b)
        if upper_tail(mid) > tail:
            lo_b = mid
        else:
            hi_b = mid
    upper = hi_b
    lower = 0.0
    if a > _LOWER_CUT_MIN_ALPHA:
        lo_b, hi_b = 0.0, a
        for _ in range(200):
            if hi_b - lo_b <= 1e-9 * a:
                break
            mid = 0.5 * (lo_b + hi_b)
            if lower_cdf(mid) <= tail:
                lo_b = mid
            else:
                hi_b = mid
        lower = lo_b
    return lower, upper


def exceedance_numpy(alpha, tol, nodes, weights):
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.shape[0]
    out = np.empty(m)
    exhausted = 0
    for k in range(m):
        ak = alpha[k]
        lower, upper = _quantile_bounds_np(ak, 0.1 * tol)
        if ak < 1.0:
            power, log_norm = 1.0 / ak, float(lgamma_np(ak + 1.0))
            y_lo, y_hi = lower**ak, upper**ak
        else:
            power, log_norm = 1.0, float(lgamma_np(ak))
            y_lo, y_hi = lower, upper
        width = y_hi - y_lo
        edges = y_lo + width * np.arange(INITIAL_PANELS + 1) / INITIAL_PANELS
        a, b = edges[:-1], edges[1:]
        whole = _gl_panels_np(alpha, k, a, b, log_norm, power, nodes, weights)
        accepted = []
        depth = 0
        while a.size:
            mid = 0.5 * (a + b)
            pair = _gl_panels_np(
                alpha, k, np.concatenate([a, mid]), np.concatenate([mid, b]),
                log_norm, power, nodes, weights,
            )
            left, right = pair[: a.size], pair[a.size:]
            if np.isnan(pair).any() or np.isnan(whole).any():
                out[k] = np.nan
                break
            ok = np.abs(left + right - whole) <= tol * (b - a) / width
            if depth >= MAX_DEPTH:
                exhausted += int(np.count_nonzero(~ok))
                ok[:] = True
            accepted.append((a[ok], left[ok] + right[ok]))
            keep = ~ok
            a = np.concatenate([a[keep], mid[keep]])
            b = np.concatenate([mid[keep], b[keep]])
            whole = np.concatenate([left[keep], right[keep]])
            depth += 1
        else:
            starts = np.concatenate([s for s, _ in accepted])
            vals = np.concatenate([v for _, v in accepted])
            # fixed summation order: left to right along the integration axis
            out[k] = vals[np.argsort(starts, kind="stable")].sum()
    return out, exhausted
