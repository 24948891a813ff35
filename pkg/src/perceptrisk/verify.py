"""On-demand oracle cross-checks: quadrature against Monte Carlo, closed-form
CVaR against direct tail averaging."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostDistribution
from .dirichlet import MASS_TOLERANCE, raw_exceedance
from .oracles import binomial_budget, compare_cells, mc_exceedance, tail_cvar
from .risk import cvar
from .scenario import DegradationSchedule, GeneratorModel, interval_params

CVAR_TOLERANCE = 1e-9
EPSILON_GRID = (0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "check": self.name,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def random_alphas(rng: np.random.Generator, count: int, lo=0.1, hi=50.0, m_range=(2, 10)):
    """Concentration vectors with log-uniform components and uniform length."""
    out = []
    for _ in range(count):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        out.append(np.exp(rng.uniform(np.log(lo), np.log(hi), size=m)))
    return out


def random_cost_distribution(rng: np.random.Generator) -> CostDistribution:
    n = int(rng.integers(1, 12))
    values = np.sort(rng.choice(np.arange(0, 200), size=n, replace=False).astype(float))[::-1]
    values = values + rng.choice([0.0, 0.5], size=n)
    values = np.unique(values)[::-1]
    probs = rng.dirichlet(np.full(values.size, 0.7))
    return CostDistribution(values, probs)


def check_quadrature(
    alphas, draws: int, rng: np.random.Generator, tol: float = 1e-8, slack: float = 0.0
) -> list[CheckResult]:
    """Raw mass and per-cell Monte Carlo agreement over a list of alphas.

    The cell check passes when the number of cells beyond 3 standard errors
    stays within the binomial budget for the total cell count.
    """
    mass_dev = 0.0
    outside = 0
    cells = 0
    max_z = 0.0
    for alpha in alphas:
        raw, _ = raw_exceedance(np.asarray(alpha, dtype=float), tol)
        mass_dev = max(mass_dev, abs(float(raw.sum()) - 1.0))
        probs = np.clip(raw, 0.0, None) / raw.sum()
        cmp = compare_cells(probs, mc_exceedance(alpha, draws, rng), slack)
        outside += cmp.outside
        cells += cmp.cells
        max_z = max(max_z, cmp.max_z)
    budget = binomial_budget(cells)
    mass_tol = max(MASS_TOLERANCE, slack)
    return [
        CheckResult(
            "quadrature_mass", bool(mass_dev <= mass_tol), mass_dev, mass_tol,
            f"{len(alphas)} alpha vectors",
        ),
        CheckResult(
            "quadrature_vs_mc", bool(outside <= budget), float(max_z), 3.0,
            f"{outside} of {cells} cells beyond 3 standard errors (budget {budget})",
        ),
    ]


def check_cvar(cases: int, rng: np.random.Generator, slack: float = 0.0) -> CheckResult:
    worst = 0.0
    for _ in range(cases):
        dist = random_cost_distribution(rng)
        for eps in EPSILON_GRID:
            worst = max(worst, abs(cvar(dist, eps) - tail_cvar(dist.values, dist.probs, eps)))
    tol = max(CVAR_TOLERANCE, slack)
    return CheckResult(
        "cvar_vs_tail_average", bool(worst <= tol), float(worst), tol,
        f"{cases} distributions x {len(EPSILON_GRID)} epsilon values",
    )


def run_suite(
    seed: int,
    cases: int,
    draws: int,
    cvar_cases: int,
    slack: float = 0.0,
    quad_tol: float = 1e-8,
    model: GeneratorModel | None = None,
    sched: DegradationSchedule | None = None,
) -> list[CheckResult]:
    """Full oracle suite; ``model``/``sched`` add the scenario's own interval
    parameters to the random quadrature cases."""
    rng = np.random.default_rng(seed)
    alphas = random_alphas(rng, cases)
    if model is not None and sched is not None:
        alphas += [interval_params(model, sched, k).alpha for k in range(1, sched.intervals + 1)]
    results = check_quadrature(alphas, draws, rng, quad_tol, slack)
    results.append(check_cvar(cvar_cases, rng, slack))
    return results
