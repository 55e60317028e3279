"""Shared exception types."""


class ScamscoutError(Exception):
    """Base class for all package errors."""


class SnapshotParseError(ScamscoutError):
    """A snapshots.jsonl record could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SchemaError(ScamscoutError):
    """A record or vector does not conform to its schema."""


class UnreachableSnapshotError(ScamscoutError):
    """The snapshot never resolved; parked/live verdicts do not apply."""


class UrlError(ScamscoutError):
    """A URL could not be parsed."""


class TrainingError(ScamscoutError):
    """A model could not be trained from the given data."""


class FixtureMissError(ScamscoutError):
    """Replay mode was asked for a SERP that is not in the fixture store."""


class UnknownEngineError(ScamscoutError):
    """Search engine name is not one of the supported engines."""


class TransportError(ScamscoutError):
    """A live SERP request failed after exhausting its retries."""
