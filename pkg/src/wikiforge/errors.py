"""Exception types shared across the pipeline.

Every error raised on a documented contract boundary derives from
WikiforgeError so callers can catch the whole family at once.
"""


class WikiforgeError(Exception):
    """Base class for all package errors."""


class EmptyText(WikiforgeError):
    """A text argument was empty after whitespace normalization."""


class DimensionMismatch(WikiforgeError):
    """An embedding's dimension does not match the configured dimension."""


class UnknownUnit(WikiforgeError):
    """Referenced memory unit id does not exist in the store."""


class IoFailure(WikiforgeError):
    """A file could not be read or written."""


class CorruptRecord(WikiforgeError):
    """A persisted store record failed to parse.

    Carries the 1-based line number of the offending record.
    """

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class MissingVariable(WikiforgeError):
    """A chat request lacks a variable its template requires."""


class MockScriptMiss(WikiforgeError):
    """Strict mock backend had no scripted response for a request."""


class TransportFailure(WikiforgeError):
    """HTTP backend failed after exhausting its retries."""


class Timeout(WikiforgeError):
    """HTTP backend timed out after exhausting its retries."""


class EmptyInput(WikiforgeError):
    """An operation received an empty input collection."""


class SearchFailure(WikiforgeError):
    """The live search backend failed."""


class FetchFailure(WikiforgeError):
    """A webpage could not be fetched."""


class ParseFailure(WikiforgeError):
    """A model completion could not be parsed into the expected shape."""


class KTooLarge(WikiforgeError):
    """Requested cluster count exceeds the number of points."""


class InsufficientData(WikiforgeError):
    """Exploration finished without saving a single memory unit."""


class EmptyReference(WikiforgeError):
    """Reference text yields nothing to compute a recall against."""


class ConfigError(WikiforgeError):
    """Pipeline configuration is invalid; message carries the key path."""
