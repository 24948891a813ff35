"""Dirichlet model of belief batches: density, sampling, fixed-point maximum
likelihood, and Voronoi-cell (exceedance) probabilities."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from ._quadrature import GL_NODES, GL_WEIGHTS, exceedance_numba, exceedance_numpy
from .belief import validate_beliefs
from .errors import ConvergenceError, DivergentMLEError, QuadratureError, ValidationError
from .special import _digamma, _inv_digamma, digamma_np, inv_digamma_np, lgamma_np

MASS_TOLERANCE = 1e-6
MOMENT_SCALE_BOUNDS = (1e-2, 1e6)


@dataclass(frozen=True)
class DirichletParams:
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        if alpha.ndim != 1 or alpha.shape[0] < 2:
            raise ValidationError(f"alpha must be a vector of length >= 2, got shape {alpha.shape}")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0.0):
            raise ValidationError(f"alpha components must be positive and finite: {alpha}")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()

    def to_list(self) -> list[float]:
        return [float(a) for a in self.alpha]


@dataclass(frozen=True)
class BeliefBatch:
    """``q`` beliefs observed in the interval ``[t - tau, t)``.

    Construction validates and clamps every row (see
    :func:`perceptrisk.belief.validate_beliefs`).
    """

    beliefs: np.ndarray
    interval_end: float = 0.0
    interval_length: float = 1.0

    def __post_init__(self):
        raw = np.asarray(self.beliefs, dtype=float)
        if raw.ndim != 2:
            raise ValidationError(f"belief batch must be (q, m), got shape {raw.shape}")
        if raw.shape[0] < 2:
            raise ValidationError(f"q < 2: interval holds {raw.shape[0]} belief(s)")
        if not self.interval_length > 0:
            raise ValidationError(f"interval_length must be positive, got {self.interval_length}")
        clean, _ = validate_beliefs(raw)
        clean.setflags(write=False)
        object.__setattr__(self, "beliefs", clean)

    @property
    def q(self) -> int:
        return self.beliefs.shape[0]

    @property
    def m(self) -> int:
        return self.beliefs.shape[1]


@dataclass(frozen=True)
class MLEFit:
    params: DirichletParams
    iterations: int
    converged: bool
    initial: DirichletParams


def log_density(params: DirichletParams, b) -> float | np.ndarray:
    """Log Dirichlet density at one belief (vector) or a ``(q, m)`` batch."""
    z = np.asarray(b, dtype=float)
    if z.shape[-1] != params.m:
        raise ValidationError(f"belief dimension {z.shape[-1]} != alpha dimension {params.m}")
    alpha = params.alpha
    log_norm = float(lgamma_np(alpha.sum())) - float(lgamma_np(alpha).sum())
    out = log_norm + np.log(z) @ (alpha - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def log_likelihood(params: DirichletParams, beliefs) -> float:
    """Total log-likelihood of a ``(q, m)`` belief array."""
    return float(np.sum(log_density(params, np.asarray(beliefs, dtype=float))))


def sample(params: DirichletParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` Dirichlet vectors as normalized independent Gamma variates.

    Returns an ``(n, m)`` array; deterministic for a given generator state.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    g = rng.gamma(params.alpha, size=(int(n), params.m))
    return g / g.sum(axis=1, keepdims=True)


def moment_initializer(beliefs: np.ndarray) -> np.ndarray:
    mean = beliefs.mean(axis=0)
    var = beliefs[:, 0].var(ddof=1)
    with np.errstate(divide="ignore"):
        scale = mean[0] * (1.0 - mean[0]) / var - 1.0
    lo, hi = MOMENT_SCALE_BOUNDS
    scale = min(max(scale, lo), hi) if math.isfinite(scale) else hi
    return scale * mean


@njit
def _fixed_point_numba(alpha0, mean_log, tol, max_iter):
    m = alpha0.shape[0]
    cur = alpha0.copy()
    new = np.empty(m)
    for it in range(1, max_iter + 1):
        ds = _digamma(cur.sum())
        delta = 0.0
        for i in range(m):
            v = _inv_digamma(ds + mean_log[i])
            if math.isnan(v):
                return cur, it, -1
            new[i] = v
            delta = max(delta, abs(v - cur[i]))
        cur[:] = new
        if delta < tol:
            return cur, it, 1
    return cur, max_iter, 0


def _fixed_point_numpy(alpha0, mean_log, tol, max_iter):
    cur = alpha0.copy()
    for it in range(1, max_iter + 1):
        new = inv_digamma_np(digamma_np(cur.sum()) + mean_log)
        if np.isnan(new).any():
            return cur, it, -1
        delta = np.max(np.abs(new - cur))
        cur = new
        if delta < tol:
            return cur, it, 1
    return cur, max_iter, 0


def estimate_mle(batch: BeliefBatch, tol: float = 1e-10, max_iter: int = 1000) -> MLEFit:
    """Maximum-likelihood concentration vector for a belief batch.

    Runs the fixed point ``alpha_i <- inv_digamma(digamma(sum(alpha)) + mean(log p_i))``
    from a method-of-moments start until the largest component change drops
    below ``tol``.  Hitting ``max_iter`` returns the last iterate with
    ``converged=False`` and a :class:`RuntimeWarning`.
    """
    beliefs = batch.beliefs
    if batch.q < 2:
        raise ValidationError(f"q < 2: interval holds {batch.q} belief(s)")
    if np.all(beliefs == beliefs[0]):
        raise DivergentMLEError("divergent MLE: all beliefs in the batch are identical")
    alpha0 = moment_initializer(beliefs)
    mean_log = np.log(beliefs).mean(axis=0)
    if _accel.USE_NUMBA:
        alpha, iters, status = _fixed_point_numba(alpha0, mean_log, float(tol), int(max_iter))
    else:
        alpha, iters, status = _fixed_point_numpy(alpha0, mean_log, float(tol), int(max_iter))
    if status < 0:
        raise ConvergenceError(f"inverse digamma failed during fixed-point iteration {iters}")
    if not np.all(np.isfinite(alpha)):
        raise DivergentMLEError(f"divergent MLE: iterate left the finite range ({alpha})")
    converged = status == 1
    if not converged:
        warnings.warn(
            f"Dirichlet MLE did not converge in {max_iter} iterations", RuntimeWarning, stacklevel=2
        )
    return MLEFit(DirichletParams(alpha), int(iters), converged, DirichletParams(alpha0))


def raw_exceedance(alpha: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, int]:
    """Unnormalized cell probabilities from the active backend."""
    alpha = np.ascontiguousarray(alpha, dtype=float)
    if _accel.USE_NUMBA:
        return exceedance_numba(alpha, float(tol), GL_NODES, GL_WEIGHTS)
    return exceedance_numpy(alpha, float(tol), GL_NODES, GL_WEIGHTS)


def exceedance_probs(params: DirichletParams, tol: float = 1e-8) -> np.ndarray:
    """Probability that a Dirichlet draw lands in each Voronoi cell.

    Integrates, for every cell ``k``, the product of the other components'
    regularized lower incomplete gammas against the Gamma(alpha_k) density
    with adaptive composite Gauss-Legendre quadrature.  The raw vector is
    renormalized when its sum is within 1e-6 of one; a larger deviation
    raises :class:`QuadratureError`.
    """
    raw, exhausted = raw_exceedance(params.alpha, tol)
    if np.isnan(raw).any():
        raise QuadratureError(f"incomplete gamma evaluation failed for alpha={params.to_list()}")
    total = raw.sum()
    if abs(total - 1.0) > MASS_TOLERANCE:
        raise QuadratureError(
            f"exceedance mass {total!r} deviates from 1 by more than {MASS_TOLERANCE} "
            f"({exhausted} panel(s) hit the depth limit)"
        )
    return np.clip(raw, 0.0, None) / total
