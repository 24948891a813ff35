"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class PerceptRiskError(Exception):
    """Base class for all library errors."""


class ValidationError(PerceptRiskError, ValueError):
    """Input violates a documented precondition or invariant."""


class NumericalError(PerceptRiskError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""


class ConvergenceError(NumericalError):
    pass


class QuadratureError(NumericalError):
    pass


class DivergentMLEError(NumericalError):
    """Dirichlet likelihood is unbounded (e.g. all beliefs identical)."""
