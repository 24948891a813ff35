"""Closed-form CVaR of misperception, risk profiles, discounted accumulation,
and the threshold-gated decision rule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cost import CostDistribution, CostMatrix, cost_distribution, ordered_cost_vector
from .dirichlet import DirichletParams, exceedance_probs
from .errors import ValidationError


@dataclass(frozen=True)
class RiskProfile:
    epsilon: float
    interval_end: float
    values: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def argmin(self) -> tuple[int, bool]:
        return _argmin_with_tie(self.values)


@dataclass(frozen=True)
class Decision:
    risk_output: int | None
    gated: bool
    t_exec: float
    tie: bool = False
    min_risk: float = math.nan


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not (0.0 < epsilon <= 1.0):
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    return epsilon


def _argmin_with_tie(values) -> tuple[int, bool]:
    values = np.asarray(values, dtype=float)
    i = int(np.argmin(values))
    return i, bool(np.count_nonzero(values == values[i]) > 1)


def cvar(dist: CostDistribution, epsilon: float) -> float:
    """CVaR at confidence ``1 - epsilon`` of a discrete cost distribution.

    ``dist.values`` must be strictly descending (an ordered cost vector).
    With ``v`` the longest prefix whose mass is at most ``epsilon``, the
    result is ``c[v] + sum_{j<v} (c[j] - c[v]) p[j] / epsilon``, which is the
    usual ``(sum_{j<v} c[j] p[j] + c[v] (epsilon - sum_{j<v} p[j])) / epsilon``
    rearranged so that a tail inside the top atom returns the top cost exactly.
    """
    epsilon = _check_epsilon(epsilon)
    c = dist.values
    p = dist.probs
    if c.size > 1 and np.any(np.diff(c) >= 0):
        raise ValidationError("cost values must be strictly descending")
    if epsilon <= p[0]:
        return float(c[0])
    prefix = np.cumsum(p)
    v = int(np.searchsorted(prefix, epsilon, side="right"))
    # v == len(c) only at epsilon == 1 (up to rounding): the boundary term vanishes
    c_next = c[v] if v < c.size else 0.0
    return float(c_next + np.dot(c[:v] - c_next, p[:v]) / epsilon)


def risk_profile(
    params: DirichletParams,
    cm: CostMatrix,
    epsilon: float,
    interval_end: float = 0.0,
    tol: float = 1e-8,
    cell_probs: np.ndarray | None = None,
) -> RiskProfile:
    """CVaR of every candidate label for one interval.

    The Voronoi-cell probabilities are computed once and shared by all
    columns; pass ``cell_probs`` to reuse an existing computation.
    """
    epsilon = _check_epsilon(epsilon)
    if params.m != cm.m:
        raise ValidationError(f"alpha has {params.m} components but the cost matrix {cm.m} labels")
    if cell_probs is None:
        cell_probs = exceedance_probs(params, tol)
    values = np.array(
        [cvar(cost_distribution(ordered_cost_vector(cm, i), cell_probs), epsilon) for i in range(cm.m)]
    )
    return RiskProfile(epsilon, float(interval_end), values)


def accumulation_weights(mu: float, K: int) -> np.ndarray:
    """Normalized weights ``(1 - mu) / (1 - mu**K) * mu**(K - k)`` for k = 1..K."""
    if not 0.0 < mu < 1.0:
        raise ValidationError(f"mu must lie in (0, 1), got {mu!r}")
    if K < 1:
        raise ValidationError(f"K must be >= 1, got {K}")
    powers = mu ** (K - np.arange(1, K + 1, dtype=float))
    return powers * ((1.0 - mu) / (1.0 - mu**K))


@dataclass
class AccumulatedRiskState:
    """Running discounted average of interval risk profiles.

    One instance per tracked trajectory; not meant for concurrent writers.
    """

    mu: float
    history: list = field(default_factory=list)
    epsilon: float | None = None

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValidationError(f"mu must lie in (0, 1), got {self.mu!r}")

    @property
    def step(self) -> int:
        return len(self.history)

    def current(self) -> np.ndarray:
        if not self.history:
            raise ValidationError("no risk profile accumulated yet")
        w = accumulation_weights(self.mu, self.step)
        return w @ np.vstack(self.history)


def accumulate(state: AccumulatedRiskState, new_profile: RiskProfile) -> np.ndarray:
    """Append ``new_profile`` and return the per-label accumulated risk."""
    if state.history:
        if new_profile.m != len(state.history[0]):
            raise ValidationError("risk profiles must share the label dimension")
        if state.epsilon is not None and new_profile.epsilon != state.epsilon:
            raise ValidationError("risk profiles must share epsilon")
    state.epsilon = new_profile.epsilon
    state.history.append(np.array(new_profile.values, dtype=float))
    return state.current()


def decide(accumulated, eta: float, t: float, horizon: float) -> Decision:
    """Gate the argmin label on ``min(accumulated) <= eta``.

    ``t_exec`` is ``horizon - t`` when gated and 0 otherwise.
    """
    if eta < 0:
        raise ValidationError(f"eta must be nonnegative, got {eta!r}")
    if not 0.0 <= t <= horizon:
        raise ValidationError(f"need 0 <= t <= T, got t={t!r}, T={horizon!r}")
    i, tie = _argmin_with_tie(accumulated)
    lowest = float(np.asarray(accumulated, dtype=float)[i])
    if lowest <= eta:
        return Decision(i, True, float(horizon - t), tie, lowest)
    return Decision(None, False, 0.0, tie, lowest)
