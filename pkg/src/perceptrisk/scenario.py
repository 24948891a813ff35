"""Synthetic approach-to-sign trajectories and the experiment drivers built on
them (threshold sweep and risk-vs-perception accuracy)."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .belief import LabelSet
from .cost import CostMatrix
from .dirichlet import BeliefBatch, DirichletParams, estimate_mle, exceedance_probs, sample
from .errors import ValidationError
from .risk import AccumulatedRiskState, Decision, accumulate, decide, risk_profile

# noise level at which the noise quality factor is 1/2
NOISE_REFERENCE = 0.02


@dataclass(frozen=True)
class DegradationSchedule:
    """Time-varying input quality while approaching a sign.

    Noise at time ``t`` is ``noise_coeff * horizon / t`` and resolution is the
    fraction ``t / horizon``.
    """

    horizon: float = 6.0
    intervals: int = 6
    noise_coeff: float = 0.02
    noise_ref: float = NOISE_REFERENCE

    def __post_init__(self):
        if self.intervals < 1:
            raise ValidationError(f"intervals must be >= 1, got {self.intervals}")
        if not self.horizon > 0:
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        if self.noise_coeff < 0:
            raise ValidationError(f"noise_coeff must be nonnegative, got {self.noise_coeff}")
        if not self.noise_ref > 0:
            raise ValidationError(f"noise_ref must be positive, got {self.noise_ref}")

    @property
    def tau(self) -> float:
        return self.horizon / self.intervals

    def time(self, k: int) -> float:
        return k * self.tau

    def noise(self, t: float) -> float:
        return self.noise_coeff * self.horizon / t

    def resolution(self, t: float) -> float:
        return t / self.horizon


def input_quality(resolution: float, noise: float, noise_ref: float = NOISE_REFERENCE) -> float:
    """Scalar quality in [0, 1]: resolution fraction times ``ref / (ref + noise)``."""
    return float(resolution) * noise_ref / (noise_ref + float(noise))


@dataclass(frozen=True)
class GeneratorModel:
    """Stand-in for the detector: Dirichlet beliefs peaked on the true label.

    The true-label concentration moves from ``s_min`` to ``s_max`` with input
    quality; every other label gets ``kappa``.
    """

    ground_truth: int
    m: int
    s_min: float = 0.5
    s_max: float = 200.0
    kappa: float = 0.5

    def __post_init__(self):
        if not 0 <= self.ground_truth < self.m:
            raise ValidationError(f"ground truth {self.ground_truth} outside 0..{self.m - 1}")
        if not 0 < self.s_min < self.s_max:
            raise ValidationError(f"need 0 < s_min < s_max, got {self.s_min}, {self.s_max}")
        if not self.kappa > 0:
            # a zero concentration is not a valid Dirichlet parameter
            raise ValidationError(f"kappa must be positive, got {self.kappa}")

    def params_at(self, quality: float) -> DirichletParams:
        alpha = np.full(self.m, self.kappa)
        alpha[self.ground_truth] = self.s_min + (self.s_max - self.s_min) * quality
        return DirichletParams(alpha)

    def with_truth(self, label: int) -> GeneratorModel:
        return GeneratorModel(label, self.m, self.s_min, self.s_max, self.kappa)


def interval_params(model: GeneratorModel, sched: DegradationSchedule, k: int) -> DirichletParams:
    """Belief-generating Dirichlet for interval ``k`` (1-based, ending at ``k * tau``)."""
    if not 1 <= k <= sched.intervals:
        raise ValidationError(f"interval {k} outside 1..{sched.intervals}")
    t = sched.time(k)
    return model.params_at(input_quality(sched.resolution(t), sched.noise(t), sched.noise_ref))


@dataclass(frozen=True)
class ActionMap:
    """Total map from labels to high-level action identifiers."""

    actions: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "actions", dict(self.actions))

    def check_total(self, labels: LabelSet) -> ActionMap:
        missing = [lb for lb in labels if lb not in self.actions]
        if missing:
            raise ValidationError(f"action map has no entry for {missing}")
        return self

    def action_of(self, labels: LabelSet, i: int) -> str:
        return self.actions[labels[i]]

    def same_action(self, labels: LabelSet, i: int, j: int) -> bool:
        return self.actions[labels[i]] == self.actions[labels[j]]

    @property
    def action_set(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.actions.values())))


@dataclass(frozen=True)
class RiskSettings:
    epsilon: float = 0.1
    mu: float = 0.5
    eta: float = 10.0
    q: int = 20
    quad_tol: float = 1e-8
    mle_tol: float = 1e-10
    mle_max_iter: int = 100_000

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValidationError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0 < self.mu < 1:
            raise ValidationError(f"mu must lie in (0, 1), got {self.mu}")
        if self.eta < 0:
            raise ValidationError(f"eta must be nonnegative, got {self.eta}")
        if self.q < 2:
            raise ValidationError(f"q must be >= 2, got {self.q}")


@dataclass
class IntervalRecord:
    k: int
    t: float
    alpha: np.ndarray
    mle_iterations: int
    mle_converged: bool
    cell_probs: np.ndarray
    risk: np.ndarray
    accumulated: np.ndarray
    decision: Decision


@dataclass
class TrajectoryRecord:
    ground_truth: int | None
    intervals: list[IntervalRecord] = field(default_factory=list)
    output: int | None = None
    decided_at: int | None = None
    t_exec: float = 0.0
    action: str | None = None
    action_correct: bool | None = False

    def to_json(self, labels: LabelSet, trial: int | None = None, unit: str = "k") -> dict:
        def lab(i):
            return None if i is None else labels[i]

        return {
            "trial": trial,
            "ground_truth": lab(self.ground_truth),
            "output": lab(self.output),
            "decided_at_step": self.decided_at,
            "t_exec": self.t_exec,
            "action": self.action,
            "action_correct": self.action_correct,
            "unit": unit,
            "intervals": [
                {
                    "step": r.k,
                    "t": r.t,
                    "alpha": [float(a) for a in r.alpha],
                    "mle_iterations": r.mle_iterations,
                    "mle_converged": r.mle_converged,
                    "cell_probs": [float(p) for p in r.cell_probs],
                    "risk": [float(v) for v in r.risk],
                    "accumulated_risk": [float(v) for v in r.accumulated],
                    "argmin": labels[int(np.argmin(r.accumulated))],
                    "gated": r.decision.gated,
                    "t_exec": r.decision.t_exec,
                }
                for r in self.intervals
            ],
        }


def analyze_interval(
    beliefs: np.ndarray,
    cm: CostMatrix,
    settings: RiskSettings,
    t: float = 0.0,
    tau: float = 1.0,
):
    """Fit a Dirichlet to one interval's beliefs and evaluate its risk profile."""
    batch = BeliefBatch(beliefs, t, tau)
    fit = estimate_mle(batch, settings.mle_tol, settings.mle_max_iter)
    cells = exceedance_probs(fit.params, settings.quad_tol)
    profile = risk_profile(fit.params, cm, settings.epsilon, t, cell_probs=cells)
    return fit, cells, profile


def _quiet(fn, *args, **kwargs):
    # non-convergence is recorded per interval; suppress the per-call warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args, **kwargs)


def run_trajectory(
    model: GeneratorModel | None,
    sched: DegradationSchedule,
    cm: CostMatrix,
    action_map: ActionMap,
    settings: RiskSettings,
    rng: np.random.Generator,
    belief_source: Callable[[int], np.ndarray] | None = None,
) -> TrajectoryRecord:
    """Simulate one approach: sample, fit, score, accumulate, and gate each interval.

    The committed output is the decision at the first gated interval; its
    ``t_exec`` and mapped action are recorded.  Later intervals are still
    evaluated so the full accumulated-risk history is available.
    ``belief_source(k)`` replaces the generator with externally produced
    beliefs for interval ``k``; ``model`` may then be None, in which case the
    ground truth is unknown and ``action_correct`` is None.
    """
    if model is None and belief_source is None:
        raise ValidationError("need a generator model or a belief source")
    if model is not None and cm.m != model.m:
        raise ValidationError(f"generator has {model.m} labels, cost matrix {cm.m}")
    record = TrajectoryRecord(None if model is None else model.ground_truth)
    state = AccumulatedRiskState(settings.mu)
    for k in range(1, sched.intervals + 1):
        t = sched.time(k)
        if belief_source is None:
            beliefs = sample(interval_params(model, sched, k), rng, settings.q)
        else:
            beliefs = belief_source(k)
        fit, cells, profile = _quiet(analyze_interval, beliefs, cm, settings, t, sched.tau)
        acc = accumulate(state, profile)
        decision = decide(acc, settings.eta, min(t, sched.horizon), sched.horizon)
        record.intervals.append(
            IntervalRecord(k, t, fit.params.alpha, fit.iterations, fit.converged, cells,
                           profile.values, acc, decision)
        )
        if decision.gated and record.output is None:
            record.output = decision.risk_output
            record.decided_at = k
            record.t_exec = decision.t_exec
    if record.output is not None:
        record.action = action_map.action_of(cm.labels, record.output)
        if model is not None:
            record.action_correct = action_map.same_action(cm.labels, record.output, model.ground_truth)
    if model is None:
        record.action_correct = None
    return record


def trial_rng(base_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(base_seed + trial)


def _ordered_map(fn, items, workers: int):
    # results come back in submission order whatever the worker count
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_trials(
    base_model: GeneratorModel,
    sched: DegradationSchedule,
    cm: CostMatrix,
    action_map: ActionMap,
    settings: RiskSettings,
    trials: int,
    base_seed: int,
    workers: int = 1,
) -> list[TrajectoryRecord]:
    """Independent trajectories; trial ``i`` uses ground truth ``i mod m`` and
    seed ``base_seed + i``."""

    def one(i):
        model = base_model.with_truth(i % base_model.m)
        return run_trajectory(model, sched, cm, action_map, settings, trial_rng(base_seed, i))

    return _ordered_map(one, range(trials), workers)


# ----------------------------------------------------------------------------
# threshold sweep
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class EtaSweepRow:
    eta: float
    delays: np.ndarray  # T - t_exec per trial
    gated: int

    @property
    def median(self) -> float:
        return float(np.median(self.delays))

    def histogram(self, support: Sequence[float]) -> list[int]:
        return [int(np.count_nonzero(np.isclose(self.delays, s))) for s in support]


def first_gate_step(record: TrajectoryRecord, eta: float) -> int | None:
    """First interval whose accumulated-risk minimum is at most ``eta``."""
    for r in record.intervals:
        if float(np.min(r.accumulated)) <= eta:
            return r.k
    return None


def eta_sweep(
    records: Sequence[TrajectoryRecord], etas: Sequence[float], sched: DegradationSchedule
) -> list[EtaSweepRow]:
    """Distribution of ``T - t_exec`` for each threshold over the same trials.

    The risk history does not depend on ``eta``, so every threshold is
    replayed against identical trajectories.
    """
    rows = []
    for eta in etas:
        if eta < 0:
            raise ValidationError(f"eta must be nonnegative, got {eta}")
        delays = []
        gated = 0
        for rec in records:
            k = first_gate_step(rec, eta)
            if k is None:
                delays.append(sched.horizon)
            else:
                gated += 1
                delays.append(sched.time(k))
        rows.append(EtaSweepRow(float(eta), np.array(delays), gated))
    return rows


def delay_support(sched: DegradationSchedule) -> list[float]:
    return [sched.time(k) for k in range(1, sched.intervals + 1)]


# ----------------------------------------------------------------------------
# risk output vs perception output
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class AccuracyRow:
    resolution: float
    noise: float
    quality: float
    trials: int
    perception_accuracy: float
    single_belief_accuracy: float
    risk_accuracy: float
    modal_risk_output: int
    risk_output_counts: np.ndarray


def compare_outputs(
    base_model: GeneratorModel,
    cm: CostMatrix,
    action_map: ActionMap,
    settings: RiskSettings,
    points: Sequence[tuple[float, float]],
    trials: int,
    base_seed: int,
    workers: int = 1,
    noise_ref: float = NOISE_REFERENCE,
) -> list[AccuracyRow]:
    """Action accuracy of the perception output and the risk output per
    ``(resolution, noise)`` point.

    Each trial draws one interval of ``q`` beliefs.  The perception output is
    the argmax of the mean belief (``single_belief_accuracy`` scores the
    argmax of each individual belief instead); the risk output is the argmin of that
    interval's risk profile (no accumulation).  Trial ``i`` uses ground truth
    ``i mod m`` and seed ``base_seed + i`` at every point.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    labels = cm.labels
    rows = []
    for resolution, noise in points:
        if not (math.isfinite(resolution) and math.isfinite(noise)):
            raise ValidationError("sweep points must be finite")
        quality = input_quality(resolution, noise, noise_ref)

        def one(i, quality=quality):
            truth = i % base_model.m
            params = base_model.with_truth(truth).params_at(quality)
            beliefs = sample(params, trial_rng(base_seed, i), settings.q)
            perceived = int(np.argmax(beliefs.mean(axis=0)))
            single = np.mean(
                [action_map.same_action(labels, int(j), truth) for j in np.argmax(beliefs, axis=1)]
            )
            _, _, profile = _quiet(analyze_interval, beliefs, cm, settings)
            chosen = int(np.argmin(profile.values))
            return (
                action_map.same_action(labels, perceived, truth),
                action_map.same_action(labels, chosen, truth),
                chosen,
                single,
            )

        results = _ordered_map(one, range(trials), workers)
        counts = np.bincount([r[2] for r in results], minlength=cm.m)
        rows.append(
            AccuracyRow(
                float(resolution), float(noise), quality, trials,
                float(np.mean([r[0] for r in results])),
                float(np.mean([r[3] for r in results])),
                float(np.mean([r[1] for r in results])),
                int(np.argmax(counts)), counts,
            )
        )
    return rows
