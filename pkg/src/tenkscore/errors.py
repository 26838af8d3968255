"""Exception types shared across the pipeline."""


class TenkScoreError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TenkScoreError):
    """Bad user input (unknown ticker, malformed request, bad flag value)."""


# -- EDGAR client ----------------------------------------------------------


class EdgarError(TenkScoreError):
    pass


class UnknownTicker(EdgarError, ValidationError):
    pass


class UnknownCik(EdgarError, ValidationError):
    pass


class NetworkError(EdgarError):
    pass


class RateLimitExceeded(NetworkError):
    """Upstream 429/403 persisted through retries; caller must back off."""


class MalformedResponse(EdgarError):
    pass


class NotFound(EdgarError):
    pass


class CacheWriteError(EdgarError):
    pass


# -- Filing parser ---------------------------------------------------------


class ParseError(TenkScoreError):
    pass


class NotHtml(ParseError):
    pass


class EmptyDocument(ParseError):
    pass


class YearNotFound(ParseError):
    pass


class NoSectionsFound(ParseError):
    pass


# -- Grader / comparator ---------------------------------------------------


class GraderError(TenkScoreError):
    pass


class UnparseableScore(GraderError):
    pass


class AllChunksFailed(GraderError):
    pass


class NoNarrativeText(GraderError):
    pass


class ProviderFailure(TenkScoreError):
    pass


# -- Analytics / storage ---------------------------------------------------


class DimensionMismatch(TenkScoreError):
    pass


class StorageCorrupt(TenkScoreError):
    pass
