"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class RankFleetError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RankFleetError, ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(RankFleetError, ValueError):
    pass


class IndexFormatError(ValidationError):
    pass


class NotFoundError(RankFleetError, LookupError):
    pass


class RerankTimeoutError(RankFleetError, TimeoutError):
    pass


class ProtocolError(RankFleetError):
    """A remote peer answered, but not in the agreed wire format."""


class FleetExhaustedError(RankFleetError):
    def __init__(self, failures):
        self.failures = list(failures)
        detail = "; ".join(f"{sid}: {err}" for sid, err in self.failures)
        super().__init__(f"every reranker failed ({detail})")


class LlmTransportError(RankFleetError):
    pass


class LlmEndpointError(RankFleetError):
    def __init__(self, message: str, status: int | None = None):
        self.status = status
        super().__init__(message)


class PipelineError(RankFleetError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
