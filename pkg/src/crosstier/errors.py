"""Exception types raised across the crosstier pipeline."""

from __future__ import annotations


class CrosstierError(Exception):
    """Base class for all crosstier errors."""


class MalformedRecord(CrosstierError):
    """A traffic log line does not satisfy the wire format."""

    def __init__(self, line_no: int, cause: str):
        super().__init__(f"line {line_no}: {cause}")
        self.line_no = line_no
        self.cause = cause


class UnparsableRequest(CrosstierError):
    """An HTTP payload has no recognizable 'METHOD path' shape."""


class DuplicateSeq(CrosstierError):
    """Two events in one session share a sequence number."""

    def __init__(self, session_id: str, seq: int):
        super().__init__(f"session {session_id!r}: duplicate seq {seq}")
        self.session_id = session_id
        self.seq = seq


class DuplicateSessionId(CrosstierError):
    """Two session traces claim the same session ID."""

    def __init__(self, session_id: str):
        super().__init__(f"duplicate session id {session_id!r}")
        self.session_id = session_id


class UnsupportedVersion(CrosstierError):
    """A model document declares a format version this build cannot read."""

    def __init__(self, version: object):
        super().__init__(f"unsupported model format version: {version!r}")
        self.version = version


class CorruptModel(CrosstierError):
    """A model document violates the model invariants or schema."""

    def __init__(self, cause: str):
        super().__init__(cause)
        self.cause = cause


class ProfileError(CrosstierError):
    """An application profile document is structurally invalid."""


class EmptyCorpus(CrosstierError):
    """Attack injection was requested but no session can be corrupted."""
