"""Exception types shared across the package."""


class MarketError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(MarketError):
    """Array dimensions are inconsistent with each other."""


class NonPositiveValue(MarketError):
    """A valuation entry is zero or negative."""


class BudgetNotSimplex(MarketError):
    """Budget vector does not sum to one within tolerance."""


class ZeroPrice(MarketError):
    """A good received no bids, so its price is zero."""


class NonPositiveUtility(MarketError):
    """A buyer utility is zero or negative where positivity is required."""


class ShapeMismatch(MarketError):
    """Two arrays that must share a shape do not."""


class SupportViolation(MarketError):
    """Divergence is undefined: numerator positive where denominator is zero."""


class DomainError(MarketError):
    """A scalar argument lies outside its admissible range."""


class LengthMismatch(MarketError):
    """Two sequences that must share a length do not."""


class ZeroVector(MarketError):
    """An all-zero vector where a nonzero one is required."""


class NonPositiveEstimate(MarketError):
    """A price or utility estimate is zero or negative."""


class IndexOutOfRange(MarketError):
    """Buyer/good/iteration index outside the valid range."""


class EmptyTrace(MarketError):
    """An operation on a trace requires at least one record."""


class IoError(MarketError):
    """Reading or writing an artifact file failed."""
