"""Cross-validation of detector findings against the LLM judgment, and
rendering of the final verdict as text or JSON."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from . import __version__
from .detectors import AttackPatternKind, Finding
from .events import EventTrace, TraceDigest, format_sci, trace_digest
from .llm import AnalysisReport

SCHEMA_VERSION = "1.0"


class Status(str, enum.Enum):
    CONFIRMED = "confirmed"
    DETECTOR_ONLY = "detector-only"
    LLM_ONLY = "llm-only"
    ABSENT = "absent"


@dataclass(frozen=True)
class EvidenceRow:
    index: int
    name: str
    address: str
    value: int | None
    gas_used: int | None


@dataclass(frozen=True)
class Verdict:
    statuses: Mapping[AttackPatternKind, Status]
    findings: tuple[Finding, ...]
    report: AnalysisReport | None = None
    digest: TraceDigest | None = None
    tx_hash: str | None = None
    evidence_rows: tuple[EvidenceRow, ...] = ()
    llm_error: str | None = None

    @property
    def detected(self):
        """Kinds that count toward a non-zero exit status."""
        return [k for k in AttackPatternKind if self.statuses[k] in (Status.CONFIRMED, Status.DETECTOR_ONLY)]


def cross_validate(findings, report: AnalysisReport | None, trace: EventTrace | None = None) -> Verdict:
    found = {f.kind for f in findings}
    claimed = set(report.claimed_kinds) if report is not None else set()
    statuses = {}
    for kind in AttackPatternKind:
        if kind in found and kind in claimed:
            statuses[kind] = Status.CONFIRMED
        elif kind in found:
            statuses[kind] = Status.DETECTOR_ONLY
        elif kind in claimed:
            statuses[kind] = Status.LLM_ONLY
        else:
            statuses[kind] = Status.ABSENT

    rows = ()
    if trace is not None:
        cited = sorted({i for f in findings for i in f.evidence})
        rows = tuple(
            EvidenceRow(e.index, e.name, e.address_label, e.value, e.gas_used)
            for e in (trace.events[i] for i in cited)
        )
    return Verdict(
        statuses=statuses,
        findings=tuple(sorted(findings, key=Finding.sort_key)),
        report=report,
        digest=trace_digest(trace) if trace is not None else None,
        tx_hash=trace.tx_hash if trace is not None else None,
        evidence_rows=rows,
    )


# -- machine format -------------------------------------------------------------


def verdict_to_dict(v: Verdict) -> dict:
    report = None
    if v.report is not None:
        report = {
            "summary": v.report.summary,
            "pattern_analysis": v.report.pattern_analysis,
            "claimed_kinds": sorted(k.value for k in v.report.claimed_kinds),
            "further_recommendation": v.report.further_recommendation,
            "per_event": [{"index": i, "explanation": text} for i, text in v.report.per_event],
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "tx_hash": v.tx_hash,
        "verdicts": {k.value: v.statuses[k].value for k in AttackPatternKind},
        "findings": [
            {"kind": f.kind.value, "evidence": list(f.evidence), "score": f.score, "explanation": f.explanation}
            for f in v.findings
        ],
        "evidence_rows": [
            {
                "index": r.index,
                "name": r.name,
                "address": r.address,
                "value": None if r.value is None else str(r.value),
                "gas_used": r.gas_used,
            }
            for r in v.evidence_rows
        ],
        "report": report,
        "llm_error": v.llm_error,
        "trace_digest": v.digest.as_dict() if v.digest is not None else None,
    }


def verdict_from_dict(doc: dict) -> Verdict:
    report = None
    if doc.get("report") is not None:
        r = doc["report"]
        report = AnalysisReport(
            per_event=tuple((p["index"], p["explanation"]) for p in r["per_event"]),
            summary=r["summary"],
            pattern_analysis=r["pattern_analysis"],
            claimed_kinds=frozenset(AttackPatternKind(k) for k in r["claimed_kinds"]),
            further_recommendation=r["further_recommendation"],
        )
    digest = None
    if doc.get("trace_digest") is not None:
        d = doc["trace_digest"]
        digest = TraceDigest(
            event_counts=dict(d["event_counts"]),
            distinct_addresses=d["distinct_addresses"],
            max_value=None if d["max_value"] is None else int(d["max_value"]),
            max_gas_used=d["max_gas_used"],
            event_total=d["event_total"],
        )
    return Verdict(
        statuses={AttackPatternKind(k): Status(s) for k, s in doc["verdicts"].items()},
        findings=tuple(
            Finding(AttackPatternKind(f["kind"]), tuple(f["evidence"]), f["score"], f["explanation"])
            for f in doc["findings"]
        ),
        report=report,
        digest=digest,
        tx_hash=doc.get("tx_hash"),
        evidence_rows=tuple(
            EvidenceRow(r["index"], r["name"], r["address"], None if r["value"] is None else int(r["value"]), r["gas_used"])
            for r in doc["evidence_rows"]
        ),
        llm_error=doc.get("llm_error"),
    )


def load_report(blob: bytes | str) -> Verdict:
    return verdict_from_dict(json.loads(blob))


def report_schema() -> dict:
    text = resources.files("txlogscan").joinpath("data/report-schema.json").read_text(encoding="utf-8")
    return json.loads(text)


# -- text format --------------------------------------------------------------------

_RECOMMENDATIONS = {
    AttackPatternKind.REENTRANCY: "Apply checks-effects-interactions or a reentrancy guard to the functions "
    "involved in the transfer loop, and review balance bookkeeping around external calls.",
    AttackPatternKind.INTEGER_OVERFLOW: "Check arithmetic on the transferred amounts with overflow-safe "
    "operations and reconcile token supply against balances.",
    AttackPatternKind.FLASH_LOAN_ATTACK: "Review price sources used during the swaps; prefer time-weighted "
    "or external oracles over spot reserves that a single transaction can move.",
    AttackPatternKind.DOS: "Bound the state that a single call must iterate over, and replace unbounded "
    "deletions or payouts with pull-based, paginated processing.",
}


def _summary(v: Verdict):
    detected = v.detected
    if not detected and not any(s is Status.LLM_ONLY for s in v.statuses.values()):
        return "No patterns detected."
    parts = []
    if detected:
        parts.append("Detected: " + ", ".join(k.label for k in detected) + ".")
    llm_only = [k.label for k, s in v.statuses.items() if s is Status.LLM_ONLY]
    if llm_only:
        parts.append("Claimed by the LLM stage only: " + ", ".join(llm_only) + ".")
    return " ".join(parts)


def render_text(v: Verdict) -> str:
    out = []
    header = f"Transaction {v.tx_hash}" if v.tx_hash else "Transaction report"
    out.append(header)
    if v.digest is not None:
        counts = ", ".join(f"{k}={n}" for k, n in sorted(v.digest.event_counts.items())) or "none"
        out.append(
            f"events: {v.digest.event_total} ({counts}); distinct addresses: {v.digest.distinct_addresses}; "
            f"max value: {format_sci(v.digest.max_value)}; max gas: "
            f"{'-' if v.digest.max_gas_used is None else v.digest.max_gas_used}"
        )
    out.append("")

    out.append("Summary")
    out.append("-------")
    out.append(_summary(v))
    if v.report is not None and v.report.summary:
        out.append("LLM: " + v.report.summary)
    out.append("")

    out.append("Pattern Analysis")
    out.append("----------------")
    for kind in AttackPatternKind:
        out.append(f"{kind.label:<18} {v.statuses[kind].value}")
    for f in v.findings:
        out.append(f"* {f.kind.label} (score {f.score:.2f}, events {', '.join(map(str, f.evidence))}): {f.explanation}")
    if v.report is not None and v.report.pattern_analysis:
        out.append("LLM: " + v.report.pattern_analysis)
    if v.llm_error:
        out.append("LLM stage failed: " + v.llm_error)
    out.append("")

    out.append("Further Recommendation")
    out.append("----------------------")
    recs = [_RECOMMENDATIONS[k] for k in v.detected]
    out.extend(f"- {r}" for r in recs)
    if not recs:
        out.append("- None.")
    if v.report is not None and v.report.further_recommendation:
        out.append("LLM: " + v.report.further_recommendation)
    out.append("")

    out.append("Evidence")
    out.append("--------")
    if v.evidence_rows:
        out.append(f"{'idx':>4}  {'name':<18} {'from→to':<89} {'value':>11} {'gas':>9}")
        for r in v.evidence_rows:
            gas = "-" if r.gas_used is None else str(r.gas_used)
            out.append(f"{r.index:>4}  {r.name:<18} {r.address:<89} {format_sci(r.value):>11} {gas:>9}")
    else:
        out.append("(none)")
    return "\n".join(out) + "\n"


def render(v: Verdict, fmt: str = "text") -> bytes:
    if fmt == "text":
        return render_text(v).encode("utf-8")
    if fmt in ("machine", "json"):
        return (json.dumps(verdict_to_dict(v), indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")
