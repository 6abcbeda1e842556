"""Exception types raised across the toolkit."""


class RelaxkitError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedImpurity(RelaxkitError):
    pass


class SpanError(RelaxkitError):
    pass


class BudgetError(RelaxkitError):
    pass


class SizeError(RelaxkitError):
    pass


class EigFailure(RelaxkitError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class WindowError(RelaxkitError):
    pass


class NonPositiveValue(RelaxkitError):
    pass


class DomainError(RelaxkitError):
    pass


class QuadratureFailure(RelaxkitError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class RootFindFailure(RelaxkitError):
    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class UnknownRegime(RelaxkitError):
    pass


class ConvergenceFailure(RelaxkitError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class OverlapError(RelaxkitError):
    pass


class ValidationError(RelaxkitError):
    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class GridMismatch(RelaxkitError):
    pass
