"""Exception types shared across the pipeline.

Input/validation problems derive from :class:`ValidationError`; transport
and model-backend problems derive from :class:`BackendFailure`.  The CLI
maps the former to exit code 1 and the latter to exit code 2.
"""

from __future__ import annotations


class AnticipateError(Exception):
    """Base class for all package errors."""


class ValidationError(AnticipateError):
    """Bad input data, config, or arguments."""


class MalformedFileError(ValidationError):
    pass


class DuplicateEntryError(ValidationError):
    pass


class IdOutOfRangeError(ValidationError):
    pass


class UnknownLabelError(ValidationError):
    pass


class NonMonotoneSegmentsError(ValidationError):
    pass


class EmptyVideoError(ValidationError):
    pass


class LengthMismatchError(ValidationError):
    pass


class InvalidDistributionError(ValidationError):
    pass


class EmptyPoolError(ValidationError):
    pass


class ZeroVectorError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class PoolTooSmallError(ValidationError):
    pass


class InsufficientExemplarsError(ValidationError):
    pass


class MissingFutureActionsError(ValidationError):
    pass


class EmptySequenceError(ValidationError):
    pass


class EmptyPastError(ValidationError):
    pass


class MissingPredictionError(ValidationError):
    pass


class EmptySplitError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class BackendFailure(AnticipateError):
    """Base class for wire-protocol and backend errors."""


class FrameTooLargeError(BackendFailure):
    pass


class MalformedMessageError(BackendFailure):
    pass


class UnknownKindError(BackendFailure):
    pass


class FixtureMissError(BackendFailure):
    pass


class TimeoutError(BackendFailure):
    pass


class TransportClosedError(BackendFailure):
    pass


class BackendError(BackendFailure):
    """Error payload propagated from a backend response."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
