"""Traffic data model: events, canonical keys, wire format, session grouping.

The traffic log wire format is one JSON object per line (UTF-8, LF):

    {"session_id": "s1", "seq": 0, "kind": "http", "payload": "GET /home"}

Fields ``session_id`` (str), ``seq`` (int >= 0), ``kind`` (``"http"`` or
``"sql"``) and ``payload`` (str) are required; ``label`` is optional and
only ever present on simulator output. Strict parsing rejects unknown
fields and unknown labels; lenient parsing skips bad lines and collects
the errors instead.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import IO, Iterable

from crosstier.errors import (
    DuplicateSeq,
    MalformedRecord,
    UnparsableRequest,
)
from crosstier.sqlnorm import skeleton

DEFAULT_STATIC_EXTENSIONS = frozenset(
    {".html", ".htm", ".css", ".js", ".png", ".jpg", ".gif", ".ico"}
)

BENIGN_LABEL = "benign"


class AttackKind(str, enum.Enum):
    """Ground-truth attack classes; values double as wire labels."""

    DIRECT_DB = "direct_db"
    SQL_INJECTION = "sql_injection"
    PRIVILEGE_ESCALATION = "privilege_escalation"
    HIJACK_SESSION = "hijack_session"


VALID_LABELS = frozenset({BENIGN_LABEL} | {k.value for k in AttackKind})


class EventKind(str, enum.Enum):
    HTTP = "http"
    SQL = "sql"


@dataclass(frozen=True)
class TrafficEvent:
    """One captured front-end request or back-end query."""

    session_id: str
    seq: int
    kind: EventKind
    payload: str
    label: str | None = None  # simulator-produced traffic only


@dataclass(frozen=True, order=True)
class HttpRequestKey:
    """Canonical identity of a front-end request.

    Two requests are the same page action when method, path and the set
    of query-parameter *names* agree; parameter values never enter the
    key because back-end queries vary with them.
    """

    method: str
    path: str
    param_names: tuple[str, ...] = ()

    def render(self) -> str:
        if self.param_names:
            return f"{self.method} {self.path}?{'&'.join(self.param_names)}"
        return f"{self.method} {self.path}"


@dataclass(frozen=True, order=True)
class SqlQueryKey:
    """Canonical identity of a back-end query: its literal-masked skeleton."""

    skeleton: str

    def render(self) -> str:
        return self.skeleton


@dataclass(frozen=True)
class HttpEntry:
    key: HttpRequestKey
    raw: str
    is_static: bool


@dataclass(frozen=True)
class SqlEntry:
    key: SqlQueryKey
    raw: str


@dataclass(frozen=True)
class SessionTrace:
    """One session's normalized HTTP and SQL events, in seq order."""

    session_id: str
    http: tuple[HttpEntry, ...] = ()
    sql: tuple[SqlEntry, ...] = ()

    def query_keys(self) -> set[SqlQueryKey]:
        return {entry.key for entry in self.sql}


def normalize_http(
    raw_request_line: str,
    static_extensions: Iterable[str] = DEFAULT_STATIC_EXTENSIONS,
) -> tuple[HttpRequestKey, bool]:
    """Normalize a ``"METHOD path[?query]"`` line into a key.

    The method is uppercased, query-parameter values are stripped and the
    remaining names sorted and deduplicated. Returns the key plus whether
    the path's final suffix marks it as a static file. Idempotent on a
    rendered key.
    """
    parts = raw_request_line.split()
    if len(parts) < 2:
        raise UnparsableRequest(
            f"no method/path separation in {raw_request_line!r}"
        )
    method = parts[0].upper()
    target = parts[1]
    path, _, query = target.partition("?")
    if not path:
        raise UnparsableRequest(f"empty path in {raw_request_line!r}")
    names: set[str] = set()
    if query:
        for chunk in query.split("&"):
            if not chunk:
                continue
            name = chunk.split("=", 1)[0]
            if name:
                names.add(name)
    key = HttpRequestKey(method, path, tuple(sorted(names)))

    last_segment = path.rsplit("/", 1)[-1]
    dot = last_segment.rfind(".")
    suffix = last_segment[dot:].lower() if dot >= 0 else ""
    is_static = bool(suffix) and suffix in static_extensions
    return key, is_static


def parse_request_key(rendered: str) -> HttpRequestKey:
    """Parse a rendered key back into :class:`HttpRequestKey`."""
    key, _ = normalize_http(rendered, frozenset())
    return key


def normalize_sql(raw_sql: str) -> SqlQueryKey:
    """Mask literals and collapse whitespace into a query skeleton."""
    return SqlQueryKey(skeleton(raw_sql))


# --- wire format -----------------------------------------------------------

_REQUIRED_FIELDS = ("session_id", "seq", "kind", "payload")
_KNOWN_FIELDS = frozenset(_REQUIRED_FIELDS) | {"label"}


def render_event(event: TrafficEvent) -> str:
    record: dict[str, object] = {
        "session_id": event.session_id,
        "seq": event.seq,
        "kind": event.kind.value,
        "payload": event.payload,
    }
    if event.label is not None:
        record["label"] = event.label
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False)


def write_traffic(events: Iterable[TrafficEvent], sink: IO[str]) -> None:
    for event in events:
        sink.write(render_event(event))
        sink.write("\n")


def _event_from_record(record: object) -> TrafficEvent:
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    unknown = set(record) - _KNOWN_FIELDS
    if unknown:
        raise ValueError(f"unknown fields: {sorted(unknown)}")
    for name in _REQUIRED_FIELDS:
        if name not in record:
            raise ValueError(f"missing field {name!r}")
    session_id = record["session_id"]
    seq = record["seq"]
    kind = record["kind"]
    payload = record["payload"]
    label = record.get("label")
    if not isinstance(session_id, str):
        raise ValueError("session_id must be a string")
    if isinstance(seq, bool) or not isinstance(seq, int) or seq < 0:
        raise ValueError("seq must be a non-negative integer")
    if kind not in ("http", "sql"):
        raise ValueError(f"kind must be 'http' or 'sql', got {kind!r}")
    if not isinstance(payload, str):
        raise ValueError("payload must be a string")
    if label is not None and label not in VALID_LABELS:
        raise ValueError(f"unknown label {label!r}")
    return TrafficEvent(session_id, seq, EventKind(kind), payload, label)


def parse_traffic_log(
    stream: Iterable[str], strict: bool = True
) -> tuple[list[TrafficEvent], list[MalformedRecord]]:
    """Parse a traffic log into events, in file order.

    In strict mode the first malformed line raises :class:`MalformedRecord`.
    In lenient mode malformed lines are skipped and returned as the second
    element (empty in strict mode, by construction).
    """
    events: list[TrafficEvent] = []
    problems: list[MalformedRecord] = []
    for line_no, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            record = json.loads(stripped)
            events.append(_event_from_record(record))
        except (ValueError, TypeError) as exc:
            error = MalformedRecord(line_no, str(exc))
            if strict:
                raise error from None
            problems.append(error)
    return events, problems


def group_by_session(
    events: Iterable[TrafficEvent],
    static_extensions: Iterable[str] = DEFAULT_STATIC_EXTENSIONS,
) -> list[SessionTrace]:
    """Split events into per-session traces, normalizing payloads.

    Traces come back in order of first appearance; events within a trace
    are ordered by seq. Duplicate (session_id, seq) pairs raise
    :class:`DuplicateSeq`.
    """
    buckets: dict[str, list[TrafficEvent]] = {}
    seen: dict[str, set[int]] = {}
    for event in events:
        bucket = buckets.setdefault(event.session_id, [])
        seqs = seen.setdefault(event.session_id, set())
        if event.seq in seqs:
            raise DuplicateSeq(event.session_id, event.seq)
        seqs.add(event.seq)
        bucket.append(event)

    extensions = frozenset(static_extensions)
    traces: list[SessionTrace] = []
    for session_id, bucket in buckets.items():
        bucket.sort(key=lambda ev: ev.seq)
        http: list[HttpEntry] = []
        sql: list[SqlEntry] = []
        for event in bucket:
            if event.kind is EventKind.HTTP:
                key, is_static = normalize_http(event.payload, extensions)
                http.append(HttpEntry(key, event.payload, is_static))
            else:
                sql.append(SqlEntry(normalize_sql(event.payload), event.payload))
        traces.append(SessionTrace(session_id, tuple(http), tuple(sql)))
    return traces


def session_labels(events: Iterable[TrafficEvent]) -> dict[str, str]:
    """Map each session to its ground-truth label.

    Raises ``ValueError`` when any event is unlabeled or a session carries
    conflicting labels (both impossible for simulator output).
    """
    labels: dict[str, str] = {}
    for event in events:
        if event.label is None:
            raise ValueError(
                f"session {event.session_id!r} has unlabeled events"
            )
        known = labels.get(event.session_id)
        if known is None:
            labels[event.session_id] = event.label
        elif known != event.label:
            raise ValueError(
                f"session {event.session_id!r} has conflicting labels"
            )
    return labels
