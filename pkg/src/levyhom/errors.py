"""Exception types shared across the package."""


class LevyHomError(Exception):
    """Base class for all package errors."""


class DomainError(LevyHomError, ValueError):
    """Argument outside the domain of a density or operator."""


class QuadratureError(LevyHomError, ArithmeticError):
    """Quadrature did not reach the requested tolerance.

    Attributes
    ----------
    bound : float
        Best error bound that was achieved.
    """

    def __init__(self, message, bound=float("nan")):
        super().__init__(message)
        self.bound = bound


class ConvergenceError(LevyHomError, ArithmeticError):
    """An iterative solver failed to converge.

    Carries the best iterate and the residual history so callers can
    inspect or warm-start from it.
    """

    def __init__(self, message, best=None, residuals=None, stage=None):
        super().__init__(message)
        self.best = best
        self.residuals = list(residuals) if residuals is not None else []
        self.stage = stage


class CertificationError(LevyHomError):
    """A computed object failed one of its invariant certificates."""


class ConfigError(LevyHomError, ValueError):
    """Malformed or incomplete experiment configuration."""
