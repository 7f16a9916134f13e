"""Exception hierarchy shared by the spherule modules."""


class SpheruleError(Exception):
    """Base class for all library errors."""


class ZeroRadius(SpheruleError):
    """A sphere with r^2 = 0 was used where a Lorentz minor needs r^2 != 0."""


class SingularMinor(SpheruleError):
    """A Cayley-Menger minor required in a denominator vanishes."""


class ResonantDenominator(SpheruleError):
    """An exponent combination annihilates a denominator of an expansion."""


class DimensionMismatch(SpheruleError):
    """Basis enumeration disagrees with the cohomology dimension formula."""


class NegativeDiscriminant(SpheruleError):
    """Invariant tables admit no real normalized coordinates (crossing
    hypothesis fails numerically)."""


class DegenerateRoots(SpheruleError):
    """Two sphere roots coincide, so the chamber decomposition degenerates."""


class ConvergenceViolation(SpheruleError):
    """An integrand is non-integrable at a chamber endpoint (effective
    exponent <= -1)."""


class ToleranceNotMet(SpheruleError):
    """Quadrature did not reach the requested tolerance."""


class StepTooLarge(SpheruleError):
    """Richardson extrapolation residual exceeds the requested tolerance."""


class ParseError(SpheruleError):
    """Malformed arrangement file.  Carries the offending position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}" if line else message)
        self.line = line
        self.column = column


class InconsistentDimension(SpheruleError):
    """Arrangement file entries disagree with the declared n or m."""
