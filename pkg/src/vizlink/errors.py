"""Engine error hierarchy.

Every error carries a stable machine code so the HTTP layer can map it
to a documented registry entry without string matching.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""

    code = "EngineError"
    http_status = 500

    def __init__(self, message: str, detail: str | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail


# dataset
class MalformedCsv(EngineError):
    code = "MalformedCsv"
    http_status = 422


class EmptyDataset(EngineError):
    code = "EmptyDataset"
    http_status = 422


class TransformError(EngineError):
    code = "TransformError"
    http_status = 422

    def __init__(self, message: str, row_index: int, detail: str | None = None):
        super().__init__(message, detail)
        self.row_index = row_index


# interaction
class NoElements(EngineError):
    code = "NoElements"
    http_status = 422


class NoActiveScales(EngineError):
    code = "NoActiveScales"
    http_status = 422


class AgentMalformedResponse(EngineError):
    code = "AgentMalformedResponse"
    http_status = 502


# agents
class AgentUnavailable(EngineError):
    code = "AgentUnavailable"
    http_status = 502


class AgentTimeout(EngineError):
    code = "Timeout"
    http_status = 504


class RateLimited(EngineError):
    code = "RateLimited"
    http_status = 429

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class UnknownModel(EngineError):
    code = "UnknownModel"
    http_status = 422


# postprocess
class MissingCodeTag(EngineError):
    code = "MissingCodeTag"
    http_status = 422


class CodeParseFailure(EngineError):
    code = "ParseFailure"
    http_status = 422


# session
class SchemaVersionMismatch(EngineError):
    code = "SchemaVersionMismatch"
    http_status = 422


class CorruptArchive(EngineError):
    code = "CorruptArchive"
    http_status = 422


class NotFound(EngineError):
    code = "NotFound"
    http_status = 404


class SchemaViolation(EngineError):
    """A request body failed wire-schema validation."""

    code = "SchemaViolation"
    http_status = 422


# Documented registry: every ApiError.code observed on the wire appears here.
ERROR_REGISTRY: dict[str, int] = {
    cls.code: cls.http_status
    for cls in [
        MalformedCsv,
        EmptyDataset,
        TransformError,
        NoElements,
        NoActiveScales,
        AgentMalformedResponse,
        AgentUnavailable,
        AgentTimeout,
        RateLimited,
        UnknownModel,
        MissingCodeTag,
        CodeParseFailure,
        SchemaVersionMismatch,
        CorruptArchive,
        NotFound,
        SchemaViolation,
    ]
}
