"""Exception types raised across the package."""


class SeprangeError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(SeprangeError, ValueError):
    """Matrix is non-finite, non-square or not Hermitian within tolerance."""


class ShapeError(SeprangeError, ValueError):
    """Operand dimensions do not match the declared tensor structure."""


class UnsupportedDimension(SeprangeError, ValueError):
    """Requested dimension is outside what the geometry engine handles."""


class ConfigError(SeprangeError, ValueError):
    """Invalid numerical configuration (sample counts, grid sizes, ...)."""


class DegenerateBody(SeprangeError, ArithmeticError):
    """A convex body has zero full-dimensional volume where one is required."""


class GeometryError(SeprangeError):
    """Geometric precondition violated, e.g. origin outside a body."""


class DomainError(SeprangeError, ValueError):
    """Argument outside the domain of a special function or bound."""


class DataFormatError(SeprangeError, ValueError):
    """Input file is unreadable or does not follow the expected schema."""
