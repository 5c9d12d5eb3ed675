"""
Exception hierarchy for msgflow.

Fatal problems raise one of these; recoverable analysis problems are recorded as
``Diagnostic`` values instead (see ``msgflow.analysis.ir``).
"""

from typing import List, Optional


class MsgflowError(Exception):
    """Base class for every error raised by msgflow."""


# =============================================================================
# Trace ingestion
# =============================================================================

class TraceError(MsgflowError):
    """Problem with the trace input itself."""


class ParseError(TraceError):
    """A trace record could not be turned into a TraceEvent."""

    reason = "parse error"

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.detail = message
        self.path = path
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        where = ""
        if self.path is not None:
            where = f"{self.path}:{self.line}: " if self.line is not None else f"{self.path}: "
        return f"{where}{self.reason}: {self.detail}"

    def with_context(self, path: str, line: int) -> "ParseError":
        """Return a copy of this error carrying file/line context."""
        return type(self)(self.detail, path=path, line=line)


class MalformedRecord(ParseError):
    reason = "malformed record"


class UnknownKind(ParseError):
    reason = "unknown event kind"


class SchemaViolation(ParseError):
    reason = "schema violation"


class DuplicateHost(TraceError):
    """Two trace files declare the same host id."""

    def __init__(self, host: str, paths: List[str]):
        self.host = host
        self.paths = paths
        super().__init__(f"host {host!r} declared by more than one trace file: {', '.join(paths)}")


# =============================================================================
# Clock synchronization
# =============================================================================

class SyncError(MsgflowError):
    """Clock offsets could not be estimated."""


class Disconnected(SyncError):
    def __init__(self, reference: str, unreachable: List[str]):
        self.reference = reference
        self.unreachable = unreachable
        super().__init__(
            f"hosts not connected to reference {reference!r} by cross-host traffic: "
            f"{', '.join(unreachable)}"
        )


class InfeasibleOffsets(SyncError):
    def __init__(self, host_a: str, host_b: str, lower: int, upper: int):
        self.host_a = host_a
        self.host_b = host_b
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"no offset of {host_b!r} relative to {host_a!r} satisfies causality: "
            f"lower bound {lower} ns > upper bound {upper} ns"
        )


# =============================================================================
# Flow graphs and documents
# =============================================================================

class SeedNotFound(MsgflowError):
    def __init__(self, message: str, candidates: Optional[List[str]] = None):
        self.candidates = candidates or []
        super().__init__(message)


class FlowGraphError(MsgflowError):
    """A flow graph failed its integrity check."""


class InvalidConfig(MsgflowError):
    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class DocumentVersionError(MsgflowError):
    def __init__(self, kind: str, found, expected):
        self.kind = kind
        self.found = found
        self.expected = expected
        super().__init__(f"unsupported {kind} version {found!r} (expected {expected!r})")
