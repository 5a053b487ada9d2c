"""Request-to-query mapping model.

A request r maps deterministically to a query q when both were seen in
exactly the same set of training sessions and that set is larger than
the cardinality threshold t. Queries that never earn a mapping fall into
the unmatched set (``nmr`` in the model file); requests that never earn
one join the static/no-query request set. Pairs whose session sets match
but are too small are evidence of under-training: they are recorded and
the model is flagged incomplete, but building always runs to the end.

The model file is a single JSON document with every collection sorted,
so equal models serialize to identical bytes regardless of how the
corpus was ordered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from crosstier.errors import CorruptModel, UnsupportedVersion
from crosstier.index import SessionIndex
from crosstier.traffic import HttpRequestKey, SqlQueryKey, parse_request_key

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MappingModel:
    mappings: Mapping[HttpRequestKey, frozenset[SqlQueryKey]]
    static_requests: frozenset[HttpRequestKey]
    unmatched_queries: frozenset[SqlQueryKey]
    requests: frozenset[HttpRequestKey]
    queries: frozenset[SqlQueryKey]
    threshold: int
    complete: bool
    insufficient: tuple[tuple[HttpRequestKey, SqlQueryKey], ...]


@dataclass(frozen=True)
class ModelBuildReport:
    complete: bool
    insufficient_pairs: tuple[tuple[HttpRequestKey, SqlQueryKey], ...]
    counts: Mapping[str, int]


def build_mapping(
    index: SessionIndex, threshold: int = 1
) -> tuple[MappingModel, ModelBuildReport]:
    """Derive deterministic mappings from the session index.

    Compares every (request, query) session-set pair. Equal sets above the
    threshold create a mapping; equal sets at or below it are recorded as
    insufficient evidence and leave the model incomplete.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")

    mappings: dict[HttpRequestKey, set[SqlQueryKey]] = {}
    marked: set[SqlQueryKey] = set()
    insufficient: list[tuple[HttpRequestKey, SqlQueryKey]] = []

    for request, request_set in index.request_sessions.items():
        for query, query_set in index.query_sessions.items():
            if request_set != query_set:
                continue
            if len(request_set) > threshold:
                mappings.setdefault(request, set()).add(query)
                marked.add(query)
            else:
                insufficient.append((request, query))

    unmatched = index.queries - marked
    static_requests = set(index.static_requests)
    static_requests.update(index.dynamic_requests - mappings.keys())
    insufficient.sort(key=lambda pair: (pair[0].render(), pair[1].skeleton))

    model = MappingModel(
        mappings={r: frozenset(qs) for r, qs in mappings.items()},
        static_requests=frozenset(static_requests),
        unmatched_queries=frozenset(unmatched),
        requests=index.dynamic_requests,
        queries=index.queries,
        threshold=threshold,
        complete=not insufficient,
        insufficient=tuple(insufficient),
    )
    report = ModelBuildReport(
        complete=model.complete,
        insufficient_pairs=model.insufficient,
        counts={
            "sessions": len(index.sessions),
            "requests": len(model.requests),
            "static_requests": len(model.static_requests),
            "queries": len(model.queries),
            "mapped_requests": len(model.mappings),
            "mapped_queries": len(marked),
            "unmatched_queries": len(model.unmatched_queries),
            "insufficient_pairs": len(model.insufficient),
        },
    )
    return model, report


def serialize_model(model: MappingModel) -> str:
    """Render the model as a canonical JSON document (sorted collections)."""
    document = {
        "version": MODEL_FORMAT_VERSION,
        "threshold_t": model.threshold,
        "complete": model.complete,
        "requests": sorted(r.render() for r in model.requests),
        "static_requests": sorted(r.render() for r in model.static_requests),
        "queries": sorted(q.skeleton for q in model.queries),
        "mappings": [
            {
                "request": r.render(),
                "queries": sorted(q.skeleton for q in model.mappings[r]),
            }
            for r in sorted(model.mappings, key=lambda k: k.render())
        ],
        "nmr": sorted(q.skeleton for q in model.unmatched_queries),
        "insufficient": sorted(
            [r.render(), q.skeleton] for r, q in model.insufficient
        ),
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


_DOCUMENT_FIELDS = frozenset(
    {
        "version",
        "threshold_t",
        "complete",
        "requests",
        "static_requests",
        "queries",
        "mappings",
        "nmr",
        "insufficient",
    }
)


def _string_list(document: dict, name: str) -> list[str]:
    value = document.get(name)
    if not isinstance(value, list) or not all(
        isinstance(item, str) for item in value
    ):
        raise CorruptModel(f"field {name!r} must be a list of strings")
    return value


def deserialize_model(document_text: str) -> MappingModel:
    """Parse and validate a model document.

    Rejects unknown versions, schema violations, and any document whose
    collections break the model invariants (e.g. a query both mapped and
    unmatched).
    """
    try:
        document = json.loads(document_text)
    except ValueError as exc:
        raise CorruptModel(f"not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise CorruptModel("model document must be a JSON object")
    if document.get("version") != MODEL_FORMAT_VERSION:
        raise UnsupportedVersion(document.get("version"))
    unknown = set(document) - _DOCUMENT_FIELDS
    if unknown:
        raise CorruptModel(f"unknown fields: {sorted(unknown)}")
    missing = _DOCUMENT_FIELDS - set(document)
    if missing:
        raise CorruptModel(f"missing fields: {sorted(missing)}")

    threshold = document["threshold_t"]
    if isinstance(threshold, bool) or not isinstance(threshold, int) or threshold < 1:
        raise CorruptModel("threshold_t must be an integer >= 1")
    complete = document["complete"]
    if not isinstance(complete, bool):
        raise CorruptModel("complete must be a boolean")

    try:
        requests = frozenset(
            parse_request_key(r) for r in _string_list(document, "requests")
        )
        static_requests = frozenset(
            parse_request_key(r)
            for r in _string_list(document, "static_requests")
        )
    except Exception as exc:
        if isinstance(exc, CorruptModel):
            raise
        raise CorruptModel(f"bad request key: {exc}") from None
    queries = frozenset(SqlQueryKey(q) for q in _string_list(document, "queries"))
    unmatched = frozenset(SqlQueryKey(q) for q in _string_list(document, "nmr"))

    raw_mappings = document.get("mappings")
    if not isinstance(raw_mappings, list):
        raise CorruptModel("field 'mappings' must be a list")
    mappings: dict[HttpRequestKey, frozenset[SqlQueryKey]] = {}
    for item in raw_mappings:
        if (
            not isinstance(item, dict)
            or set(item) != {"request", "queries"}
            or not isinstance(item.get("request"), str)
            or not isinstance(item.get("queries"), list)
            or not all(isinstance(q, str) for q in item["queries"])
        ):
            raise CorruptModel("each mapping must be {request, queries}")
        try:
            request = parse_request_key(item["request"])
        except Exception as exc:
            raise CorruptModel(f"bad request key: {exc}") from None
        if request in mappings:
            raise CorruptModel(f"duplicate mapping for {item['request']!r}")
        if not item["queries"]:
            raise CorruptModel(f"empty mapping for {item['request']!r}")
        mappings[request] = frozenset(SqlQueryKey(q) for q in item["queries"])

    raw_insufficient = document.get("insufficient")
    if not isinstance(raw_insufficient, list):
        raise CorruptModel("field 'insufficient' must be a list")
    insufficient: list[tuple[HttpRequestKey, SqlQueryKey]] = []
    for item in raw_insufficient:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(isinstance(part, str) for part in item)
        ):
            raise CorruptModel("each insufficient entry must be a [r, q] pair")
        try:
            request = parse_request_key(item[0])
        except Exception as exc:
            raise CorruptModel(f"bad request key: {exc}") from None
        insufficient.append((request, SqlQueryKey(item[1])))

    model = MappingModel(
        mappings=mappings,
        static_requests=static_requests,
        unmatched_queries=unmatched,
        requests=requests,
        queries=queries,
        threshold=threshold,
        complete=complete,
        insufficient=tuple(insufficient),
    )
    _check_invariants(model)
    return model


def _check_invariants(model: MappingModel) -> None:
    mapped: set[SqlQueryKey] = set()
    for request, query_set in model.mappings.items():
        if request not in model.requests:
            raise CorruptModel(
                f"mapped request {request.render()!r} not in requests"
            )
        mapped.update(query_set)

    both = mapped & model.unmatched_queries
    if both:
        raise CorruptModel(
            "queries both mapped and unmatched: "
            f"{sorted(q.skeleton for q in both)}"
        )
    accounted = mapped | model.unmatched_queries
    if accounted != model.queries:
        raise CorruptModel(
            "mapped and unmatched queries do not partition the query set"
        )
    unmapped_requests = model.requests - model.mappings.keys()
    stray = unmapped_requests - model.static_requests
    if stray:
        raise CorruptModel(
            "requests with no mapping missing from static_requests: "
            f"{sorted(r.render() for r in stray)}"
        )
    for request, query in model.insufficient:
        if request not in model.requests:
            raise CorruptModel(
                f"insufficient request {request.render()!r} not in requests"
            )
        if query not in model.queries:
            raise CorruptModel(
                f"insufficient query {query.skeleton!r} not in queries"
            )
    if model.complete != (not model.insufficient):
        raise CorruptModel(
            "complete flag inconsistent with insufficient list"
        )
