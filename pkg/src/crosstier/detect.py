"""Session classification against a trained mapping model.

Each session is judged by four rules, in order:

1. For every distinct request with a learned mapping Q: all of Q must
   appear in the session's query set. Present members are marked even
   when some are missing, so one dropped query is reported once (as a
   missing-mapped-query violation) instead of cascading.
2. Requests in the static/no-query set mark nothing and raise nothing.
3. Remaining unmarked queries that are in the model's unmatched set are
   marked as such.
4. Anything left is abnormal: a request the model has never seen, or a
   query no rule accounted for. Any violation makes the session
   suspicious.

The optional attack hint is heuristic metadata layered on top of the
violations; it never influences the verdict.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

from crosstier.mapping import MappingModel
from crosstier.traffic import (
    AttackKind,
    HttpRequestKey,
    SessionTrace,
    SqlQueryKey,
)


class ViolationKind(str, enum.Enum):
    MISSING_MAPPED_QUERY = "missing_mapped_query"
    UNKNOWN_REQUEST = "unknown_request"
    UNMARKED_QUERY = "unmarked_query"


class Status(str, enum.Enum):
    BENIGN = "benign"
    SUSPICIOUS = "suspicious"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subject: HttpRequestKey | SqlQueryKey
    # expected query set, only for MISSING_MAPPED_QUERY
    detail: frozenset[SqlQueryKey] | None = None


@dataclass(frozen=True)
class SessionVerdict:
    session_id: str
    status: Status
    violations: tuple[Violation, ...]
    attack_hint: AttackKind | None = None


@dataclass(frozen=True)
class DetectionReport:
    verdicts: tuple[SessionVerdict, ...]
    totals: Mapping[str, int]


def _ordered_unique(items: Iterable):
    seen = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def detect_session(model: MappingModel, trace: SessionTrace) -> SessionVerdict:
    """Apply the four rules to one session. Pure and deterministic."""
    session_queries = trace.query_keys()
    request_keys = _ordered_unique(entry.key for entry in trace.http)
    query_keys = _ordered_unique(entry.key for entry in trace.sql)

    marked: set[SqlQueryKey] = set()
    violations: list[Violation] = []
    unknown_requests: list[HttpRequestKey] = []

    for request in request_keys:
        expected = model.mappings.get(request)
        if expected:
            marked.update(expected & session_queries)
            if not expected <= session_queries:
                violations.append(
                    Violation(
                        ViolationKind.MISSING_MAPPED_QUERY,
                        request,
                        detail=expected,
                    )
                )
        elif request in model.static_requests:
            pass  # expected to cause no queries; nothing to mark
        else:
            unknown_requests.append(request)

    for query in query_keys:
        if query not in marked and query in model.unmatched_queries:
            marked.add(query)

    for request in unknown_requests:
        violations.append(Violation(ViolationKind.UNKNOWN_REQUEST, request))
    for query in query_keys:
        if query not in marked:
            violations.append(Violation(ViolationKind.UNMARKED_QUERY, query))

    if not violations:
        return SessionVerdict(trace.session_id, Status.BENIGN, ())
    hint = classify_hint(violations, trace, model)
    return SessionVerdict(
        trace.session_id, Status.SUSPICIOUS, tuple(violations), hint
    )


_HINT_PRECEDENCE = (
    AttackKind.DIRECT_DB,
    AttackKind.SQL_INJECTION,
    AttackKind.PRIVILEGE_ESCALATION,
    AttackKind.HIJACK_SESSION,
)


def classify_hint(
    violations: Iterable[Violation],
    trace: SessionTrace,
    model: MappingModel,
) -> AttackKind | None:
    """Heuristic attack labeling from the violation mix.

    Missing mapped queries look like a hijacked web tier (requests whose
    causal queries never ran). An unmarked query that the model has never
    seen suggests a direct DB connection when the session has no dynamic
    requests, otherwise an injection that warped a known query's skeleton.
    An unmarked query the model *does* know suggests a privileged query
    issued under the wrong request mix. Advisory only.
    """
    violations = list(violations)
    has_unknown_request = any(
        v.kind is ViolationKind.UNKNOWN_REQUEST for v in violations
    )
    has_dynamic_request = any(not entry.is_static for entry in trace.http)

    candidates: set[AttackKind] = set()
    for violation in violations:
        if violation.kind is ViolationKind.MISSING_MAPPED_QUERY:
            candidates.add(AttackKind.HIJACK_SESSION)
        elif violation.kind is ViolationKind.UNMARKED_QUERY:
            if violation.subject in model.queries:
                candidates.add(AttackKind.PRIVILEGE_ESCALATION)
            elif not has_unknown_request:
                candidates.add(
                    AttackKind.SQL_INJECTION
                    if has_dynamic_request
                    else AttackKind.DIRECT_DB
                )
    for hint in _HINT_PRECEDENCE:
        if hint in candidates:
            return hint
    return None


def compute_totals(verdicts: Iterable[SessionVerdict]) -> dict[str, int]:
    totals = {
        "sessions": 0,
        Status.BENIGN.value: 0,
        Status.SUSPICIOUS.value: 0,
        ViolationKind.MISSING_MAPPED_QUERY.value: 0,
        ViolationKind.UNKNOWN_REQUEST.value: 0,
        ViolationKind.UNMARKED_QUERY.value: 0,
    }
    for verdict in verdicts:
        totals["sessions"] += 1
        totals[verdict.status.value] += 1
        for violation in verdict.violations:
            totals[violation.kind.value] += 1
    return totals


def detect_all(
    model: MappingModel, traces: Iterable[SessionTrace]
) -> DetectionReport:
    """One verdict per trace, input order preserved."""
    verdicts = tuple(detect_session(model, trace) for trace in traces)
    return DetectionReport(verdicts, compute_totals(verdicts))


# --- attack log and report documents ---------------------------------------


def _violation_record(verdict: SessionVerdict, violation: Violation) -> dict:
    return {
        "session_id": verdict.session_id,
        "violation": violation.kind.value,
        "subject": violation.subject.render(),
        "hint": verdict.attack_hint.value if verdict.attack_hint else None,
        "detail": (
            sorted(q.skeleton for q in violation.detail)
            if violation.detail is not None
            else None
        ),
    }


def write_attack_log(report: DetectionReport, sink: IO[str]) -> None:
    """One line per violation of each suspicious session, stable order."""
    for verdict in report.verdicts:
        if verdict.status is not Status.SUSPICIOUS:
            continue
        for violation in verdict.violations:
            record = _violation_record(verdict, violation)
            sink.write(json.dumps(record, separators=(",", ":"), ensure_ascii=False))
            sink.write("\n")


def serialize_report(report: DetectionReport) -> str:
    document = {
        "version": 1,
        "totals": dict(report.totals),
        "verdicts": [
            {
                "session_id": v.session_id,
                "status": v.status.value,
                "hint": v.attack_hint.value if v.attack_hint else None,
                "violations": [
                    {
                        "violation": violation.kind.value,
                        "subject": violation.subject.render(),
                        "detail": (
                            sorted(q.skeleton for q in violation.detail)
                            if violation.detail is not None
                            else None
                        ),
                    }
                    for violation in v.violations
                ],
            }
            for v in report.verdicts
        ],
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def load_report_verdicts(document_text: str) -> list[dict]:
    """Return the verdict records of a serialized report document."""
    document = json.loads(document_text)
    if (
        not isinstance(document, dict)
        or document.get("version") != 1
        or not isinstance(document.get("verdicts"), list)
    ):
        raise ValueError("not a detection report document")
    return document["verdicts"]
