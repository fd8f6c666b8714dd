"""Exception types shared across the package."""


class WinpError(Exception):
    """Base class for all package errors."""


class ConfigError(WinpError, ValueError):
    """Invalid configuration value; ``field`` names the offending key when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class StructuralError(WinpError):
    """Cyclic graph, engine deadlock or another broken structural assumption."""


class InfeasibleError(WinpError):
    """Some slices were not delivered within the rate-trace horizon."""

    def __init__(self, unfinished, message=None):
        self.unfinished = sorted(int(k) for k in unfinished)
        if message is None:
            message = f"slices not delivered within trace horizon: {self.unfinished}"
        super().__init__(message)
