"""Exception types shared across the toolkit."""


class WebrankError(Exception):
    """Base class for all toolkit errors."""


class ExpressionError(WebrankError):
    """Malformed expression, unbound parameter, or invalid node use."""


class ParseError(ExpressionError):
    """Syntax error in expression text; carries position info."""

    def __init__(self, message, line=1, column=0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class PoleAtPoint(WebrankError):
    """A denominator vanished at the evaluation point; caller should resample."""


class DegenerateIntegral(WebrankError):
    """A first integral has identically-zero derivative in the last coordinate;
    a linear coordinate change is required before slopes can be normalized."""


class ResampleExhausted(WebrankError):
    """Too many sample points hit poles; the sampling budget is spent."""


class NotStrongGeneralPosition(WebrankError):
    """An operation requiring strong general position was given forms with a
    linearly dependent n-subset."""


class PointInS(WebrankError):
    """The requested computation is only defined off the singular locus."""


class SingularAtPoint(WebrankError):
    """A square moment system is singular at the working point."""


class NotSquareCase(WebrankError):
    """The adapted connection exists only when the foliation count equals the
    monomial count c(n, k0)."""


class InconsistentLowerJet(WebrankError):
    """A purported lower-order jet violates the constraints it must satisfy."""


class InconclusiveRank(WebrankError):
    """A numeric rank decision fell inside the borderline band around the
    tolerance cut; the verdict is refused rather than guessed."""


class InvalidParameters(WebrankError):
    """Example generator parameters violate their documented constraints."""


class DocumentError(WebrankError):
    """A web-description document is malformed."""
