"""Exception hierarchy shared by the library and the command line."""


class DPWermError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1
    kind = "error"


class ConfigError(DPWermError, ValueError):
    """A configuration value is invalid or inconsistent."""

    exit_code = 2
    kind = "config"


class DataError(DPWermError, ValueError):
    """Input data violates a documented precondition."""

    exit_code = 3
    kind = "data"


class DomainError(DataError):
    """Values fall outside the admissible domain (e.g. features outside [0, 1])."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class NoMatchError(DataError):
    """No record received the treatment the rule assigns."""


class ConvergenceError(DPWermError, RuntimeError):
    """The optimizer stopped before reaching the gradient tolerance."""

    exit_code = 4
    kind = "convergence"

    def __init__(self, message, grad_norm=float("nan"), n_iter=0):
        super().__init__(message)
        self.grad_norm = grad_norm
        self.n_iter = n_iter


class UsageError(DPWermError, RuntimeError):
    """An API was called in a way that would silently break a guarantee."""

    exit_code = 2
    kind = "usage"
