class QueueingError(Exception):
    """Base class for every failure raised by the queueing app."""


class InvalidModel(QueueingError, ValueError):
    """Distribution parameters are out of range or the queue is unstable."""


class PoleEvaluation(QueueingError, ZeroDivisionError):
    pass


class NonAnalytic(QueueingError):
    """Evaluation requested at an essential singularity."""


class Unsupported(QueueingError):
    pass


class NoBracket(QueueingError):
    pass


class NoConvergence(QueueingError):
    def __init__(self, message, index=None, last=None):
        super().__init__(message)
        self.index = index
        self.last = last


class DerivativeVanished(NoConvergence):
    pass


class CountMismatch(QueueingError):
    def __init__(self, message, expected=None, found=None):
        super().__init__(message)
        self.expected = expected
        self.found = found


class RepeatedRoot(QueueingError):
    pass


class HelperMismatch(QueueingError):
    pass


class ImaginaryLeak(QueueingError):
    pass


class NonProbability(QueueingError):
    pass


class NoStationaryConvergence(QueueingError):
    pass


class CoefficientOverflow(QueueingError):
    pass


class InvalidParameter(QueueingError, ValueError):
    """A numerical parameter is outside the range the method supports."""
