"""Brute-force reference computations for cross-checking the fast paths.

Nothing here reuses the quadrature or the closed-form CVaR: Monte Carlo
exceedance draws Gamma variates and counts argmax cells, and ``tail_cvar``
averages the worst ``epsilon`` of probability mass directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MC_CHUNK = 1 << 17
SIGMA_BUDGET = 3.0
# two-sided normal tail beyond 3 sigma
SIGMA_TAIL = 0.0026997960632601866


@dataclass(frozen=True)
class MCExceedance:
    probs: np.ndarray
    stderr: np.ndarray
    n: int


def mc_exceedance(alpha, n: int, rng: np.random.Generator) -> MCExceedance:
    """Empirical Voronoi-cell frequencies of ``n`` Dirichlet draws.

    Dirichlet normalization does not change the argmax, so the raw Gamma
    variates are compared directly.  Ties (probability zero) go to the lower
    index.
    """
    alpha = np.asarray(alpha, dtype=float)
    if n < 10_000:
        raise ValidationError(f"need at least 1e4 draws, got {n}")
    counts = np.zeros(alpha.shape[0], dtype=np.int64)
    done = 0
    while done < n:
        size = min(MC_CHUNK, n - done)
        g = rng.gamma(alpha, size=(size, alpha.shape[0]))
        counts += np.bincount(g.argmax(axis=1), minlength=alpha.shape[0])
        done += size
    probs = counts / n
    return MCExceedance(probs, np.sqrt(probs * (1.0 - probs) / n), int(n))


def tail_cvar(values, probs, epsilon: float) -> float:
    """Mean of the worst ``epsilon`` probability mass, splitting the boundary atom.

    Outcomes need not be sorted or unique.
    """
    epsilon = float(epsilon)
    if not (0.0 < epsilon <= 1.0):
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    order = sorted(range(values.size), key=lambda j: -values[j])
    need = epsilon
    acc = 0.0
    for j in order:
        if need <= 0.0:
            break
        take = min(probs[j], need)
        acc += take * values[j]
        need -= take
    return acc / epsilon


def binomial_budget(cells: int, tail: float = SIGMA_TAIL, quantile: float = 0.999) -> int:
    """Largest number of 3-sigma exceedances still consistent with chance.

    The ``quantile`` point of Binomial(cells, tail), so that a correct
    quadrature fails the multi-cell check with probability at most 1 - quantile.
    """
    cdf = 0.0
    for k in range(cells + 1):
        cdf += math.comb(cells, k) * tail**k * (1.0 - tail) ** (cells - k)
        if cdf >= quantile:
            return k
    return cells


@dataclass(frozen=True)
class CellComparison:
    z: np.ndarray
    outside: int
    cells: int

    @property
    def max_z(self) -> float:
        return float(np.max(self.z)) if self.z.size else 0.0


def compare_cells(quad, mc: MCExceedance, slack: float = 0.0) -> CellComparison:
    """Standardized deviation of each quadrature cell from its MC estimate.

    The standard error uses the larger of the empirical and the
    quadrature-implied binomial variance, so an empty MC cell facing a tiny
    quadrature value is not divided by zero.  ``slack`` is an absolute
    allowance subtracted before standardizing.
    """
    quad = np.asarray(quad, dtype=float)
    var = np.maximum(mc.probs * (1 - mc.probs), quad * (1 - quad)) / mc.n
    se = np.sqrt(np.maximum(var, 1.0 / mc.n**2))
    dev = np.maximum(np.abs(quad - mc.probs) - slack, 0.0)
    z = dev / se
    return CellComparison(z, int(np.count_nonzero(z > SIGMA_BUDGET)), int(quad.size))
