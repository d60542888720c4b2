"""Exception hierarchy shared by every module."""


class SpinWitnessError(Exception):
    """Base class for all package errors."""


class InvalidArgument(SpinWitnessError, ValueError):
    pass


class ConvergenceFailure(SpinWitnessError):
    """An iterative solver stopped without meeting its tolerance.

    The best value seen and the final residual are kept so callers can decide
    whether the partial answer is still usable.
    """

    def __init__(self, message, best_value=None, residual=None):
        super().__init__(message)
        self.best_value = best_value
        self.residual = residual


class DegenerateMeasurement(SpinWitnessError):
    pass


class MissingData(SpinWitnessError):
    pass


class TruncationError(SpinWitnessError):
    def __init__(self, message, leaked=None):
        super().__init__(message)
        self.leaked = leaked


class DegenerateObjective(SpinWitnessError):
    pass
