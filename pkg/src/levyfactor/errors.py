"""Exception hierarchy shared by all modules."""


class LevyFactorError(Exception):
    """Base class for every error raised by the package."""


class NonConvergent(LevyFactorError):
    """A quadrature or refinement loop failed to reach its tolerance."""

    def __init__(self, message, worst_interval=None, estimate=None, error=None):
        super().__init__(message)
        self.worst_interval = worst_interval
        self.estimate = estimate
        self.error = error


class InsufficientNodes(LevyFactorError):
    pass


class ZeroCrossing(LevyFactorError):
    """A characteristic function (numerically) vanished on the grid."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NonDifferentiable(LevyFactorError):
    """Finite-difference estimates at two step sizes disagree."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class LogMomentDivergent(LevyFactorError):
    pass


class _WitnessError(LevyFactorError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotClassL(_WitnessError):
    pass


class NotClassU(_WitnessError):
    pass


class Undecidable(LevyFactorError):
    pass


class ParamOutOfRange(ValueError, LevyFactorError):
    pass


class DivergentCoefficients(ValueError, LevyFactorError):
    pass


class RouteDisagreement(LevyFactorError):
    def __init__(self, message, discrepancy=None):
        super().__init__(message)
        self.discrepancy = discrepancy


class SpecParseError(ValueError, LevyFactorError):
    """Malformed spec document or density expression."""
