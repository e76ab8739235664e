"""Prompt construction, backend invocation and response parsing for the
LLM-assisted analysis stage.

A prompt bundles four parts, in order: instructions, one condition per
attack pattern, the serialized events, and a reasoning directive asking for
per-event explanations before the overall judgment. The response is expected
to contain ``Summary``, ``Pattern Analysis`` and ``Further Recommendation``
sections.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import requests

from .detectors import AttackPatternKind
from .errors import (
    BackendError,
    ConfigurationError,
    EmptyResponseError,
    TransientBackendError,
    UnparseableReportError,
)
from .events import DecodedEvent, EventTrace, format_extra, format_sci

logger = logging.getLogger(__name__)

LLM_KEY_ENV = "ETRACE_LLM_KEY"

SYSTEM_INSTRUCTIONS = """\
You are a smart-contract security analyst. You are given the events decoded from the logs of a single
blockchain transaction. No source code is available for any contract involved: reason only from the
events (function name, addresses, value, gas). Do not ask for or assume contract code.
Answer in two stages. Stage 1: explain every event on its own line, starting with "Event <n>:".
Stage 2: give a comprehensive judgment with exactly three sections, in this order:
Summary, Pattern Analysis, Further Recommendation.
In Pattern Analysis name every attack pattern below that the events match (there may be several, or none)
and explain step by step how the attack unfolds in the events."""

REASONING_DIRECTIVE = """\
Think step by step. First write the Stage 1 explanation for each event, stating the reasoning that links
it to the events around it. Only after all events are explained, weigh the explanations together and
write the Summary, Pattern Analysis and Further Recommendation sections."""

ELISION_MARKER = "... [{n} events omitted] ..."


@dataclass(frozen=True)
class VulnerabilityCondition:
    kind: AttackPatternKind
    condition_text: str


DEFAULT_CONDITIONS = (
    VulnerabilityCondition(
        AttackPatternKind.REENTRANCY,
        "The same function is entered again and again within one execution because the contract makes "
        "an external call before it updates its own state, so funds move back and forth repeatedly or "
        "the contract state is corrupted. In events this shows as transfers alternating direction "
        "between the same two addresses.",
    ),
    VulnerabilityCondition(
        AttackPatternKind.INTEGER_OVERFLOW,
        "An arithmetic result wraps past the range of an unsigned 256-bit integer, letting an input "
        "produce a token amount far larger than any real balance. In events this shows as a transfer "
        "value of astronomically large magnitude (on the order of 2^255).",
    ),
    VulnerabilityCondition(
        AttackPatternKind.FLASH_LOAN_ATTACK,
        "Funds are borrowed without collateral and repaid within the same transaction, and the borrowed "
        "capital is used to push prices through swaps before the profit is withdrawn. In events this "
        "shows as a FlashLoan (or Borrow) event, then one or more Swap events, then a Withdrawal or "
        "repayment transfer.",
    ),
    VulnerabilityCondition(
        AttackPatternKind.DOS,
        "Cheap calls are repeated to grow contract state until a required operation needs more gas than "
        "a transaction may use, so that operation can never complete and funds stay locked. In events "
        "this shows as many small-value calls to the same function by one caller with rising gas, and "
        "gas use exceeding the block gas limit.",
    ),
)


def event_line(e: DecodedEvent) -> str:
    parts = [f"Event {e.index}: {e.name}", e.address_label, f"value={format_sci(e.value)}"]
    if e.gas_used is not None:
        parts.append(f"gas={e.gas_used}")
    extra = format_extra(e.extra)
    if extra:
        parts.append(extra)
    return " | ".join(parts)


@dataclass(frozen=True)
class PromptBundle:
    system_instructions: str
    conditions: tuple[VulnerabilityCondition, ...]
    event_lines: tuple[str, ...]
    reasoning_directive: str
    truncated: bool = False
    omitted: int = 0

    @property
    def serialized_events(self) -> str:
        return "\n".join(self.event_lines)

    @property
    def text(self) -> str:
        return _assemble(self.system_instructions, self.conditions, self.event_lines, self.reasoning_directive)

    @property
    def digest(self) -> str:
        return prompt_digest(self.text)


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _conditions_block(conditions):
    lines = ["Attack patterns to check:"]
    for c in conditions:
        lines.append(f"- {c.kind.label}: {c.condition_text}")
    return "\n".join(lines)


def _assemble(instructions, conditions, event_lines, directive):
    events = "\n".join(event_lines) if event_lines else "(no events)"
    return "\n\n".join(
        [instructions, _conditions_block(conditions), "Events:\n" + events, directive]
    ) + "\n"


def _check_conditions(conditions):
    kinds = [c.kind for c in conditions]
    if sorted(kinds, key=lambda k: k.order) != list(AttackPatternKind):
        raise ConfigurationError("exactly one vulnerability condition per attack pattern is required")
    return tuple(sorted(conditions, key=lambda c: c.kind.order))


def minimum_budget(trace: EventTrace, conditions=DEFAULT_CONDITIONS) -> int:
    """Smallest budget that still fits the fixed sections plus one event."""
    conditions = _check_conditions(conditions)
    if not trace.events:
        return len(_assemble(SYSTEM_INSTRUCTIONS, conditions, (), REASONING_DIRECTIVE))
    first = event_line(trace.events[0])
    if len(trace.events) == 1:
        return len(_assemble(SYSTEM_INSTRUCTIONS, conditions, (first,), REASONING_DIRECTIVE))
    marker = ELISION_MARKER.format(n=len(trace.events) - 1)
    return len(_assemble(SYSTEM_INSTRUCTIONS, conditions, (first, marker), REASONING_DIRECTIVE))


def build_prompt(trace: EventTrace, conditions=DEFAULT_CONDITIONS, budget: int = 24_000) -> PromptBundle:
    """Render ``trace`` into a prompt of at most ``budget`` characters.

    When every event line does not fit, the first ``ceil(k/2)`` and last
    ``floor(k/2)`` lines are kept for the largest ``k`` that fits, with one
    elision marker line in between.
    """
    conditions = _check_conditions(conditions)
    floor = minimum_budget(trace, conditions)
    if budget < floor:
        raise ConfigurationError(f"prompt budget {budget} is below the minimum {floor} for this trace")

    lines = [event_line(e) for e in trace.events]
    n = len(lines)

    def bundle(kept, truncated=False, omitted=0):
        return PromptBundle(SYSTEM_INSTRUCTIONS, conditions, tuple(kept), REASONING_DIRECTIVE, truncated, omitted)

    full = bundle(lines)
    if len(full.text) <= budget:
        return full
    for k in range(n - 1, 0, -1):
        head = math.ceil(k / 2)
        tail = k - head
        kept = lines[:head] + [ELISION_MARKER.format(n=n - k)] + (lines[n - tail :] if tail else [])
        candidate = bundle(kept, truncated=True, omitted=n - k)
        if len(candidate.text) <= budget:
            return candidate
    raise ConfigurationError(f"prompt budget {budget} cannot fit any event line")  # unreachable past the floor check


# -- backends ----------------------------------------------------------------------


class LlmBackend(Protocol):
    name: str

    def generate(self, prompt: str) -> str: ...


GENERIC_RESPONSE = """\
Summary:
The events show ordinary contract activity with no sign of an attack.

Pattern Analysis:
No known attack pattern is matched by these events.

Further Recommendation:
No action needed beyond routine monitoring.
"""


class MockBackend:
    """Replays canned responses stored as ``<sha256 of prompt>.txt``."""

    name = "mock"

    def __init__(self, fixture_dir):
        path = Path(fixture_dir)
        if not path.is_dir():
            raise ConfigurationError(f"mock fixture directory {fixture_dir} is not readable")
        try:
            self._responses = {p.stem: p.read_text(encoding="utf-8") for p in sorted(path.glob("*.txt"))}
        except OSError as exc:
            raise ConfigurationError(f"cannot read mock fixtures in {fixture_dir}: {exc}") from None
        self.fixture_dir = path

    def generate(self, prompt: str) -> str:
        return self._responses.get(prompt_digest(prompt), GENERIC_RESPONSE)


def mock_backend(fixture_dir) -> MockBackend:
    return MockBackend(fixture_dir)


class HttpBackend:
    """OpenAI-compatible chat-completions client.

    The API key is read from ``$ETRACE_LLM_KEY`` and never logged.
    """

    name = "http"

    def __init__(self, endpoint, model, temperature=0.0, timeout=120.0, session=None):
        if not endpoint or not model:
            raise ConfigurationError("http backend needs both an endpoint and a model")
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self._session = session or requests.Session()

    def generate(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(LLM_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = self._session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransientBackendError(f"{self.endpoint}: {type(exc).__name__}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientBackendError(f"{self.endpoint}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendError(f"{self.endpoint}: HTTP {resp.status_code}", attempts=1)
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"{self.endpoint}: unexpected response shape ({exc})", attempts=1) from None


def analyze(bundle: PromptBundle, backend: LlmBackend, *, retries: int = 3, backoff: float = 0.5, sleep=time.sleep) -> str:
    """Send the prompt, retrying transient failures up to ``retries`` times
    with exponential backoff. Returns the raw response text."""
    prompt = bundle.text if isinstance(bundle, PromptBundle) else str(bundle)
    attempts = 0
    while True:
        attempts += 1
        try:
            raw = backend.generate(prompt)
            break
        except TransientBackendError as exc:
            if attempts > retries:
                raise BackendError(f"backend {backend.name} failed: {exc}", attempts) from exc
            delay = backoff * 2 ** (attempts - 1)
            logger.warning("backend %s attempt %d failed (%s); retrying in %.2fs", backend.name, attempts, exc, delay)
            sleep(delay)
        except BackendError as exc:
            exc.attempts = attempts
            raise
    if not raw or not raw.strip():
        raise EmptyResponseError(f"backend {backend.name} returned an empty response")
    return raw


# -- response parsing ----------------------------------------------------------------

_HEADER_RE = re.compile(
    r"^[ \t>#*_\-]*(?:\(?\d+[.)]\s*|[ivx]+[.)]\s*)?[*_]*\s*"
    r"(?P<name>summary|pattern\s+analysis|further\s+recommendations?)\s*[*_]*\s*"
    r"(?::[ \t]*[*_]*[ \t]*(?P<rest>.*)|[*_]*[ \t]*)$",
    re.IGNORECASE | re.MULTILINE,
)

_KIND_PATTERNS = {
    AttackPatternKind.REENTRANCY: re.compile(r"re-?entran(?:cy|t)", re.IGNORECASE),
    AttackPatternKind.INTEGER_OVERFLOW: re.compile(r"\boverflow", re.IGNORECASE),
    AttackPatternKind.FLASH_LOAN_ATTACK: re.compile(r"flash[\s-]?loan", re.IGNORECASE),
    AttackPatternKind.DOS: re.compile(r"\bdos\b|denial[\s-]+of[\s-]+service", re.IGNORECASE),
}

_EVENT_RE = re.compile(r"^[ \t>*_\-]*(?:\*\*)?event\s*#?\s*(\d+)\s*(?:\*\*)?\s*[:.)\-]\s*(.*)$", re.IGNORECASE | re.MULTILINE)


@dataclass(frozen=True)
class AnalysisReport:
    per_event: tuple[tuple[int, str], ...] = ()
    summary: str = ""
    pattern_analysis: str = ""
    claimed_kinds: frozenset = field(default_factory=frozenset)
    further_recommendation: str = ""

    def __post_init__(self):
        object.__setattr__(self, "per_event", tuple(tuple(p) for p in self.per_event))
        object.__setattr__(self, "claimed_kinds", frozenset(AttackPatternKind(k) for k in self.claimed_kinds))


def _section_key(name):
    name = re.sub(r"\s+", " ", name.lower())
    if name.startswith("pattern"):
        return "pattern_analysis"
    if name.startswith("further"):
        return "further_recommendation"
    return "summary"


def claimed_kinds(text: str) -> frozenset:
    return frozenset(kind for kind, pattern in _KIND_PATTERNS.items() if pattern.search(text))


def parse_report(raw: str, trace: EventTrace | None = None) -> AnalysisReport:
    headers = []
    seen = set()
    for m in _HEADER_RE.finditer(raw):
        key = _section_key(m.group("name"))
        if key in seen:
            continue
        rest = (m.group("rest") or "").strip()
        seen.add(key)
        headers.append((m.start(), m.end(), key, rest))
    if not headers:
        raise UnparseableReportError(raw)

    bodies = {}
    for i, (start, end, key, rest) in enumerate(headers):
        stop = headers[i + 1][0] if i + 1 < len(headers) else len(raw)
        body = raw[end:stop].strip()
        bodies[key] = "\n".join(x for x in (rest, body) if x).strip()

    valid = None if trace is None else {e.index for e in trace.events}
    preamble = raw[: headers[0][0]]
    per_event = []
    seen_events = set()
    for m in _EVENT_RE.finditer(preamble):
        idx = int(m.group(1))
        if idx in seen_events or (valid is not None and idx not in valid):
            continue
        seen_events.add(idx)
        per_event.append((idx, m.group(2).strip()))

    analysis = bodies.get("pattern_analysis", "")
    return AnalysisReport(
        per_event=tuple(per_event),
        summary=bodies.get("summary", ""),
        pattern_analysis=analysis,
        claimed_kinds=claimed_kinds(analysis),
        further_recommendation=bodies.get("further_recommendation", ""),
    )
