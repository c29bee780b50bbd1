"""Error types shared across the package.

All of these derive from ValueError so callers that do not care about the
distinction can catch one thing.
"""


class ShapeError(ValueError):
    """An array has the wrong rank, length, or incompatible dimensions."""


class ParameterError(ValueError):
    """A scalar argument or weight table is out of its legal range."""


class ConfigError(ValueError):
    """A model or suite configuration is internally inconsistent."""


class TraceError(ValueError):
    """A selection trace does not match the tensors it is replayed against."""
