class ConfigurationError(ValueError):
    """Raised when inputs are dimensionally or semantically inconsistent."""

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems or [])


class LineInactiveError(ValueError):
    pass


class StopInactiveError(KeyError):
    pass


class InstanceError(RuntimeError):
    """A dial-a-ride request cannot be served even by a dedicated vehicle."""
