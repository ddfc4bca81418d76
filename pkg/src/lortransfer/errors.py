"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Invalid argument or incompatible inputs."""


class CompatibilityError(ArgumentError):
    """High-order / low-order space pairing violates n(q+1) >= p+1."""


class UnsupportedError(ArgumentError):
    """Configuration that is deliberately not supported."""


class ConvergenceError(RuntimeError):
    """An iterative method failed to converge.

    ``report`` carries the solver report (when there is one) and
    ``history`` the residual history.
    """

    def __init__(self, message, report=None, history=()):
        super().__init__(message)
        self.report = report
        self.history = tuple(history)
