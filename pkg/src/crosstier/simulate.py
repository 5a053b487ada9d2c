"""Deterministic multitier traffic simulator with labeled attack injection.

Application profiles declare pages (request template plus the SQL
skeletons each visit emits); sessions are generated from a seeded RNG so
identical (profile, n, seed) inputs give byte-identical traffic. Literal
values vary per visit while skeletons stay fixed, which is exactly the
behavior the normalizer is meant to absorb.

Sessions are laid out in twin patterns: session i follows page pattern
``i mod max(1, n // 2)``, so every pattern (and thus every visited page)
occurs in at least two sessions whenever n >= 2. That guarantees a
threshold-1 model trained on benign output is complete, while patterns
still vary enough for per-page mappings to stay distinct.

The four injectors each corrupt a session so that exactly one detector
rule class fires: an extra query with no causal request, a tautology
rewrite that warps a known skeleton, a reserved privileged query without
its privileged request, or dropping every query a request should have
caused.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from random import Random
from typing import Iterable

from crosstier.errors import EmptyCorpus, ProfileError
from crosstier.traffic import (
    AttackKind,
    BENIGN_LABEL,
    EventKind,
    TrafficEvent,
    normalize_http,
)


@dataclass(frozen=True)
class PageSpec:
    method: str
    path: str
    params: tuple[str, ...]
    static: bool
    query_templates: tuple[str, ...]


@dataclass(frozen=True)
class AppProfile:
    name: str
    pages: tuple[PageSpec, ...]
    session_shape: tuple[int, int]  # min/max page visits per session


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    rate: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"rate must be in [0, 1], got {self.rate}")


# Reserved admin page: never visited by generated sessions unless the
# profile explicitly includes it, so its query is out-of-model by default.
PRIVILEGED_PAGE = PageSpec(
    method="POST",
    path="/admin/role",
    params=("name", "role"),
    static=False,
    query_templates=("UPDATE users SET role = ? WHERE name = ?",),
)

# Query appended by the direct-DB injector; foreign to the built-in profile.
FOREIGN_QUERY_TEMPLATE = (
    "SELECT card_number, cvv FROM stored_cards WHERE cardholder = ?"
)

_WORDS = ("alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi")


def builtin_login_profile(include_privileged: bool = False) -> AppProfile:
    """The built-in register/login/act/logout application profile."""
    pages = [
        PageSpec("GET", "/register.html", (), True, ()),
        PageSpec(
            "POST",
            "/register",
            ("email", "name", "pw"),
            False,
            ("INSERT INTO users (name, email, password_hash) VALUES (?, ?, ?)",),
        ),
        PageSpec(
            "POST",
            "/login",
            ("name", "pw"),
            False,
            ("SELECT id, password_hash FROM users WHERE name = ?",),
        ),
        PageSpec(
            "GET",
            "/home",
            (),
            False,
            (
                "SELECT name, email, last_login FROM profiles WHERE user_id = ?",
                "SELECT item, ts FROM activity WHERE user_id = ? LIMIT ?",
            ),
        ),
        PageSpec(
            "GET",
            "/logout",
            (),
            False,
            ("UPDATE sessions SET ended_at = ? WHERE token = ?",),
        ),
    ]
    if include_privileged:
        pages.append(PRIVILEGED_PAGE)
    return AppProfile("builtin-login", tuple(pages), (3, 8))


def validate_profile(profile: AppProfile) -> None:
    if not profile.pages:
        raise ProfileError("profile must declare at least one page")
    low, high = profile.session_shape
    if not (isinstance(low, int) and isinstance(high, int) and 1 <= low <= high):
        raise ProfileError(
            f"session_shape must satisfy 1 <= min <= max, got {profile.session_shape}"
        )
    for page in profile.pages:
        if not page.method or not page.path:
            raise ProfileError("every page needs a method and a path")
        if page.static and page.query_templates:
            raise ProfileError(
                f"static page {page.path!r} must not declare query templates"
            )


# --- profile documents ------------------------------------------------------


def profile_to_json(profile: AppProfile) -> str:
    document = {
        "name": profile.name,
        "pages": [
            {
                "method": page.method,
                "path": page.path,
                "params": list(page.params),
                "static": page.static,
                "query_templates": list(page.query_templates),
            }
            for page in profile.pages
        ],
        "session_shape": {
            "min": profile.session_shape[0],
            "max": profile.session_shape[1],
        },
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def profile_from_json(text: str) -> AppProfile:
    try:
        document = json.loads(text)
    except ValueError as exc:
        raise ProfileError(f"profile is not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ProfileError("profile document must be a JSON object")
    name = document.get("name")
    raw_pages = document.get("pages")
    shape = document.get("session_shape")
    if not isinstance(name, str) or not name:
        raise ProfileError("profile 'name' must be a non-empty string")
    if not isinstance(raw_pages, list):
        raise ProfileError("profile 'pages' must be a list")
    if (
        not isinstance(shape, dict)
        or set(shape) != {"min", "max"}
        or not all(isinstance(shape[k], int) for k in ("min", "max"))
    ):
        raise ProfileError("profile 'session_shape' must be {min, max}")
    pages = []
    for raw in raw_pages:
        if not isinstance(raw, dict) or set(raw) != {
            "method",
            "path",
            "params",
            "static",
            "query_templates",
        }:
            raise ProfileError(
                "each page must have method, path, params, static, query_templates"
            )
        if (
            not isinstance(raw["method"], str)
            or not isinstance(raw["path"], str)
            or not isinstance(raw["static"], bool)
            or not isinstance(raw["params"], list)
            or not all(isinstance(p, str) for p in raw["params"])
            or not isinstance(raw["query_templates"], list)
            or not all(isinstance(q, str) for q in raw["query_templates"])
        ):
            raise ProfileError(f"bad page record: {raw!r}")
        pages.append(
            PageSpec(
                raw["method"],
                raw["path"],
                tuple(raw["params"]),
                raw["static"],
                tuple(raw["query_templates"]),
            )
        )
    profile = AppProfile(name, tuple(pages), (shape["min"], shape["max"]))
    validate_profile(profile)
    return profile


# --- benign generation ------------------------------------------------------


def _random_literal(rng: Random) -> str:
    if rng.random() < 0.5:
        return str(rng.randrange(1, 100000))
    return f"'{rng.choice(_WORDS)}{rng.randrange(1000)}'"


def _fill_template(template: str, rng: Random) -> str:
    """Substitute every ``?`` placeholder with a seeded literal."""
    parts = template.split("?")
    out = [parts[0]]
    for part in parts[1:]:
        out.append(_random_literal(rng))
        out.append(part)
    return "".join(out)


def _render_request(page: PageSpec, rng: Random) -> str:
    if not page.params:
        return f"{page.method} {page.path}"
    query = "&".join(f"{name}=v{rng.randrange(1000000)}" for name in page.params)
    return f"{page.method} {page.path}?{query}"


def _page_pattern(profile: AppProfile, seed: int, pattern_id: int) -> list[PageSpec]:
    rng = Random(f"{seed}:pattern:{pattern_id}")
    low, high = profile.session_shape
    return [rng.choice(profile.pages) for _ in range(rng.randint(low, high))]


def session_id_for(ordinal: int) -> str:
    return f"sim-{ordinal + 1:04d}"


def generate_sessions(
    profile: AppProfile, n: int, seed: int
) -> list[TrafficEvent]:
    """Generate n benign-labeled sessions, fully determined by the seed.

    Each session's RNG state derives from (seed, ordinal) alone, so the
    output is independent of generation order.
    """
    if n < 0:
        raise ValueError(f"session count must be >= 0, got {n}")
    validate_profile(profile)
    if n == 0:
        return []

    pattern_count = max(1, n // 2)
    patterns = [_page_pattern(profile, seed, j) for j in range(pattern_count)]

    events: list[TrafficEvent] = []
    for ordinal in range(n):
        session_id = session_id_for(ordinal)
        rng = Random(f"{seed}:session:{ordinal}")
        seq = 0
        for page in patterns[ordinal % pattern_count]:
            events.append(
                TrafficEvent(
                    session_id,
                    seq,
                    EventKind.HTTP,
                    _render_request(page, rng),
                    BENIGN_LABEL,
                )
            )
            seq += 1
            for template in page.query_templates:
                events.append(
                    TrafficEvent(
                        session_id,
                        seq,
                        EventKind.SQL,
                        _fill_template(template, rng),
                        BENIGN_LABEL,
                    )
                )
                seq += 1
    return events


# --- attack injection -------------------------------------------------------

_QUOTED_LITERAL = re.compile(r"'(?:[^'\\]|\\.)*'")


def _inject_tautology(payload: str) -> str:
    """Rewrite one query the way an attacker-controlled value would."""
    if _QUOTED_LITERAL.search(payload):
        return _QUOTED_LITERAL.sub("'' OR '1'='1' --", payload, count=1)
    return payload + " OR '1'='1'"


def _attributed_sql(
    session_events: list[TrafficEvent],
) -> list[tuple[TrafficEvent, TrafficEvent | None]]:
    """Pair each SQL event with the most recent preceding HTTP event."""
    pairs = []
    current: TrafficEvent | None = None
    for event in session_events:
        if event.kind is EventKind.HTTP:
            current = event
        else:
            pairs.append((event, current))
    return pairs


def _eligible(kind: AttackKind, session_events: list[TrafficEvent]) -> bool:
    if kind in (AttackKind.DIRECT_DB, AttackKind.PRIVILEGE_ESCALATION):
        return True
    if kind is AttackKind.SQL_INJECTION:
        return any(ev.kind is EventKind.SQL for ev in session_events)
    # hijack needs a request that actually caused queries
    return any(cause is not None for _, cause in _attributed_sql(session_events))


def _corrupt(
    kind: AttackKind, session_events: list[TrafficEvent], rng: Random
) -> list[TrafficEvent]:
    label = kind.value
    next_seq = max(ev.seq for ev in session_events) + 1
    session_id = session_events[0].session_id

    if kind is AttackKind.DIRECT_DB:
        extra = TrafficEvent(
            session_id,
            next_seq,
            EventKind.SQL,
            _fill_template(FOREIGN_QUERY_TEMPLATE, rng),
            label,
        )
        out = session_events + [extra]
    elif kind is AttackKind.PRIVILEGE_ESCALATION:
        extra = TrafficEvent(
            session_id,
            next_seq,
            EventKind.SQL,
            _fill_template(PRIVILEGED_PAGE.query_templates[0], rng),
            label,
        )
        out = session_events + [extra]
    elif kind is AttackKind.SQL_INJECTION:
        sql_events = [ev for ev in session_events if ev.kind is EventKind.SQL]
        target = rng.choice(sql_events)
        out = [
            replace(ev, payload=_inject_tautology(ev.payload))
            if ev is target
            else ev
            for ev in session_events
        ]
    else:  # hijack: keep one request, drop every query it caused
        pairs = _attributed_sql(session_events)
        candidate_keys = []
        for _, cause in pairs:
            if cause is None:
                continue
            key, _ = normalize_http(cause.payload)
            if key not in candidate_keys:
                candidate_keys.append(key)
        target_key = rng.choice(candidate_keys)
        doomed = {
            id(ev)
            for ev, cause in pairs
            if cause is not None and normalize_http(cause.payload)[0] == target_key
        }
        out = [ev for ev in session_events if id(ev) not in doomed]

    return [replace(ev, label=label) for ev in out]


def inject_attacks(
    events: Iterable[TrafficEvent], spec: AttackSpec, seed: int
) -> list[TrafficEvent]:
    """Corrupt a seeded ceil(rate * sessions) subset of sessions.

    Only sessions where the corruption is applicable are sampled (e.g. a
    hijack needs a query-bearing request); untouched sessions keep their
    benign labels. Raises :class:`EmptyCorpus` when rate > 0 and nothing
    can be corrupted.
    """
    buckets: dict[str, list[TrafficEvent]] = {}
    for event in events:
        buckets.setdefault(event.session_id, []).append(event)
    for bucket in buckets.values():
        bucket.sort(key=lambda ev: ev.seq)

    if spec.rate == 0:
        return [ev for bucket in buckets.values() for ev in bucket]
    if not buckets:
        raise EmptyCorpus("no sessions to corrupt")

    eligible = [
        sid for sid, bucket in buckets.items() if _eligible(spec.kind, bucket)
    ]
    if not eligible:
        raise EmptyCorpus(
            f"no session is eligible for {spec.kind.value} corruption"
        )
    wanted = math.ceil(spec.rate * len(buckets))
    rng = Random(f"{seed}:inject:{spec.kind.value}")
    chosen = set(rng.sample(eligible, min(wanted, len(eligible))))

    out: list[TrafficEvent] = []
    for sid, bucket in buckets.items():
        if sid in chosen:
            out.extend(_corrupt(spec.kind, bucket, Random(f"{seed}:corrupt:{sid}")))
        else:
            out.extend(bucket)
    return out
