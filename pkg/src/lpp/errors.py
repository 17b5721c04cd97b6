"""Error family raised by the library and the experiment runners."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class GridTooLargeError(ValueError):
    """Vertex count overflows the platform word or the configured memory budget."""


class VertexOutOfRangeError(ValueError):
    """A vertex outside the cube [0, n]^d was passed to a grid operation."""


class PathCapExceededError(RuntimeError):
    """Brute-force path enumeration would exceed the configured cap."""


class DegenerateTailError(ValueError):
    """P(X > k) is too small for conditional tail statistics to be meaningful."""


class ConditionNotMetError(ValueError):
    """The weight law fails a hypothesis an operation depends on."""
