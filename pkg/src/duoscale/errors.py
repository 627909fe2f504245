"""Exception types raised by duoscale."""


class DuoscaleError(Exception):
    """Base class for all library errors."""


class InvalidArgument(DuoscaleError, ValueError):
    pass


class DomainError(DuoscaleError, ValueError):
    """Evaluation outside the amplitude/phase chart (a <= 0)."""


class DecompositionFailure(DuoscaleError):
    pass


class DegenerateSpectrum(DecompositionFailure):
    pass


class NoConvergence(DuoscaleError):
    pass


class IntegrationFailure(DuoscaleError):
    def __init__(self, message, step=None, epsilon=None):
        super().__init__(message)
        self.step = step
        self.epsilon = epsilon


class EmptyCurve(DuoscaleError):
    pass
