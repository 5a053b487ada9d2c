"""Training-time session index.

Scans session-separated traffic and records, for every distinct dynamic
request and every distinct query, the set of session IDs it occurred in.
Static-file requests are recorded separately and carry no session sets:
they are expected to cause no queries. The index is the input to mapping
construction and is insensitive to the order of sessions and of events
within a session.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from crosstier.errors import DuplicateSessionId
from crosstier.traffic import HttpRequestKey, SessionTrace, SqlQueryKey


@dataclass(frozen=True)
class SessionIndex:
    dynamic_requests: frozenset[HttpRequestKey]
    queries: frozenset[SqlQueryKey]
    static_requests: frozenset[HttpRequestKey]
    request_sessions: Mapping[HttpRequestKey, frozenset[str]]
    query_sessions: Mapping[SqlQueryKey, frozenset[str]]
    sessions: frozenset[str]


def build_index(traces: Iterable[SessionTrace]) -> SessionIndex:
    """Build the per-key session-set index from training traces.

    Duplicate occurrences of a key within one session contribute that
    session ID once. A request key must classify consistently as static
    or dynamic across the corpus.
    """
    request_sessions: dict[HttpRequestKey, set[str]] = {}
    query_sessions: dict[SqlQueryKey, set[str]] = {}
    static_requests: set[HttpRequestKey] = set()
    sessions: set[str] = set()

    for trace in traces:
        if trace.session_id in sessions:
            raise DuplicateSessionId(trace.session_id)
        sessions.add(trace.session_id)
        for entry in trace.http:
            if entry.is_static:
                static_requests.add(entry.key)
            else:
                request_sessions.setdefault(entry.key, set()).add(
                    trace.session_id
                )
        for entry in trace.sql:
            query_sessions.setdefault(entry.key, set()).add(trace.session_id)

    overlap = static_requests & request_sessions.keys()
    if overlap:
        raise ValueError(
            "request keys classified both static and dynamic: "
            f"{sorted(k.render() for k in overlap)}"
        )

    return SessionIndex(
        dynamic_requests=frozenset(request_sessions),
        queries=frozenset(query_sessions),
        static_requests=frozenset(static_requests),
        request_sessions={k: frozenset(v) for k, v in request_sessions.items()},
        query_sessions={k: frozenset(v) for k, v in query_sessions.items()},
        sessions=frozenset(sessions),
    )


def sessions_of(
    index: SessionIndex, key: HttpRequestKey | SqlQueryKey
) -> frozenset[str]:
    """Session IDs the key was seen in; empty for unknown or static keys."""
    if isinstance(key, HttpRequestKey):
        return index.request_sessions.get(key, frozenset())
    return index.query_sessions.get(key, frozenset())
