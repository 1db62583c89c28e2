"""Exception hierarchy. Every error derives from :class:`WhsidError` (a ``ValueError``)."""


class WhsidError(ValueError):
    pass


class EmptyDenominator(WhsidError):
    pass


class UnstableFilter(WhsidError):
    pass


class StateSizeMismatch(WhsidError):
    pass


class NonFiniteInput(WhsidError):
    pass


class BadLength(WhsidError):
    pass


class EmptyGrid(WhsidError):
    pass


class GridOutOfRange(WhsidError):
    pass


class TooFewSegments(WhsidError):
    pass


class NonFiniteSample(WhsidError):
    """Raised when a simulated or ingested sample is NaN or infinite."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NonPolynomial(WhsidError):
    pass


class ZeroReferenceVariance(WhsidError):
    pass


class TooFewPeriods(WhsidError):
    pass


class BadBinCount(WhsidError):
    pass


class DimensionMismatch(WhsidError):
    pass


class ParseError(WhsidError):
    pass


class ValidationError(WhsidError):
    """Config validation failure; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
