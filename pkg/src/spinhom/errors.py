"""Exception hierarchy shared by all spinhom modules.

Each class maps to a CLI exit code (see spinhom.cli).
"""


class SpinhomError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(SpinhomError):
    """Boundary counts of composed diagrams or complexes do not match."""


class AdmissibilityError(SpinhomError):
    """Spin-network vertex labels violate parity or the triangle condition."""


class ArityError(SpinhomError):
    """An expression has free boundary where a closed network is required."""


class ParseError(SpinhomError):
    """Syntax error in the network DSL, with position information."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class DivergenceError(SpinhomError):
    """Projector sweeps failed to stabilize within the iteration cap."""


class ResourceError(SpinhomError):
    """A configured resource cap (diagram count, object count) was exceeded."""


class IntegrityError(SpinhomError):
    """Internal consistency violation: d*d != 0, cache corruption, etc."""
