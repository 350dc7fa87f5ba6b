"""Exception types shared across the package."""


class ImpulsekitError(Exception):
    """Base class for errors raised by this package."""


class ParseError(ImpulsekitError, ValueError):
    """Raised for malformed expression text. Carries a 1-based position."""

    def __init__(self, message, line=1, col=1):
        super().__init__("%s (line %d, column %d)" % (message, line, col))
        self.line = line
        self.col = col


class DomainError(ImpulsekitError, ArithmeticError):
    """Raised when expression evaluation hits an arithmetic domain error."""


class ConfigError(ImpulsekitError, ValueError):
    """Raised for invalid configuration values (dimensions, periods, grids)."""


class DisjointnessError(ImpulsekitError, ValueError):
    """Raised when two impulse sequences share a time on the horizon."""


class SimulationError(ImpulsekitError, RuntimeError):
    """Raised when a simulation cannot be set up or run."""


class CompositionError(ImpulsekitError, ValueError):
    """Raised when a small-gain composition is not admissible."""


class SamplingError(ImpulsekitError, RuntimeError):
    """Raised when rejection sampling exhausts its attempt budget."""
