"""End-to-end analysis of one receipt: decode, detect, optionally ask the
LLM, then cross-validate."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .abi import AbiRegistry, builtin_registry
from .detectors import DetectorConfig, run_all_detectors
from .errors import UnparseableReportError
from .events import EventTrace, build_trace
from .ingestion import TransactionReceipt
from .llm import DEFAULT_CONDITIONS, LlmBackend, analyze, build_prompt, parse_report
from .report import Verdict, cross_validate

logger = logging.getLogger(__name__)


def default_mock_dir() -> Path:
    return Path(str(resources.files("txlogscan").joinpath("data/llm")))


def incident_fixture(name: str) -> Path:
    """Path of a bundled incident fixture, e.g. ``incident_fixture("xsurge")``."""
    return Path(str(resources.files("txlogscan").joinpath(f"data/incidents/{name}.json")))


@dataclass(frozen=True)
class LlmSettings:
    budget: int = 24_000
    retries: int = 3
    backoff: float = 0.5


@dataclass(frozen=True)
class Analysis:
    trace: EventTrace
    verdict: Verdict
    raw_response: str | None = None


def analyze_receipt(
    receipt: TransactionReceipt,
    registry: AbiRegistry | None = None,
    cfg: DetectorConfig = DetectorConfig(),
    backend: LlmBackend | None = None,
    settings: LlmSettings = LlmSettings(),
) -> Analysis:
    trace = build_trace(receipt, registry if registry is not None else builtin_registry())
    findings = run_all_detectors(trace, cfg)
    if backend is None:
        return Analysis(trace, cross_validate(findings, None, trace))

    bundle = build_prompt(trace, DEFAULT_CONDITIONS, settings.budget)
    if bundle.truncated:
        logger.info("prompt for %s truncated: %d events omitted", trace.tx_hash, bundle.omitted)
    raw = analyze(bundle, backend, retries=settings.retries, backoff=settings.backoff)
    try:
        report = parse_report(raw, trace)
    except UnparseableReportError as exc:
        verdict = cross_validate(findings, None, trace)
        return Analysis(trace, replace(verdict, llm_error=f"unparseable response; raw text follows\n{exc.raw}"), raw)
    return Analysis(trace, cross_validate(findings, report, trace), raw)
