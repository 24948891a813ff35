"""CVaR-based risk of misperception for classifiers with noisy belief outputs.

Beliefs collected over a short interval are summarized by a Dirichlet fit; the
probability that a draw lands in each label's argmax cell turns a misperception
cost matrix into a discrete cost distribution per candidate label, and the CVaR
of those distributions is the risk profile used for gated decisions.
"""
from ._accel import backend
from .belief import Belief, LabelSet, validate_belief, validate_beliefs, voronoi_cell
from .cost import (
    UNIT,
    CostDistribution,
    CostMatrix,
    OrderedCostVector,
    cost_distribution,
    load_cost_csv,
    ordered_cost_vector,
)
from .dirichlet import (
    BeliefBatch,
    DirichletParams,
    MLEFit,
    estimate_mle,
    exceedance_probs,
    log_density,
    log_likelihood,
    sample,
)
from .errors import (
    ConvergenceError,
    DivergentMLEError,
    NumericalError,
    PerceptRiskError,
    QuadratureError,
    ValidationError,
)
from .risk import (
    AccumulatedRiskState,
    Decision,
    RiskProfile,
    accumulate,
    accumulation_weights,
    cvar,
    decide,
    risk_profile,
)
from .special import digamma, inv_digamma, log_gamma, reg_lower_inc_gamma

__version__ = "0.1.0"

__all__ = [
    "AccumulatedRiskState",
    "Belief",
    "BeliefBatch",
    "ConvergenceError",
    "CostDistribution",
    "CostMatrix",
    "Decision",
    "DirichletParams",
    "DivergentMLEError",
    "LabelSet",
    "MLEFit",
    "NumericalError",
    "OrderedCostVector",
    "PerceptRiskError",
    "QuadratureError",
    "RiskProfile",
    "UNIT",
    "ValidationError",
    "accumulate",
    "accumulation_weights",
    "backend",
    "cost_distribution",
    "cvar",
    "decide",
    "digamma",
    "estimate_mle",
    "exceedance_probs",
    "inv_digamma",
    "load_cost_csv",
    "log_density",
    "log_gamma",
    "log_likelihood",
    "ordered_cost_vector",
    "reg_lower_inc_gamma",
    "risk_profile",
    "sample",
    "validate_belief",
    "validate_beliefs",
    "voronoi_cell",
]
