"""Exception types shared across the package."""


class GdmsError(Exception):
    """Base class for all package errors."""


class ConfigError(GdmsError):
    """Invalid configuration or spec data (CLI exit code 2)."""


class LayoutInfeasibleError(ConfigError):
    """Requested geometric realization cannot satisfy the open set condition."""


class CapExceededError(GdmsError):
    """A configured enumeration/ball/point cap would be exceeded (CLI exit code 3)."""


class ConvergenceError(GdmsError):
    """An iterative solver failed to reach its tolerance (CLI exit code 4).

    Carries the best residual seen so the caller can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InconsistentReportError(GdmsError):
    """Cross-checks inside one report disagree (CLI exit code 5)."""
