"""Detect smart-contract attack patterns from transaction event logs."""

__version__ = "0.1.0"

from .abi import AbiRegistry, EventAbi, builtin_registry, decode_log, encode_log, signature_hash
from .detectors import AttackPatternKind, DetectorConfig, Finding, run_all_detectors
from .estimator import AttackPatternDetector, TraceBuilder
from .events import DecodedEvent, EventTrace, build_trace, trace_digest
from .ingestion import CallRecord, LogEntry, TransactionReceipt, fetch_receipt, load_fixture, receipt_to_fixture
from .llm import AnalysisReport, MockBackend, build_prompt, parse_report
from .report import Status, Verdict, cross_validate, render

__all__ = [
    "AbiRegistry",
    "AnalysisReport",
    "AttackPatternDetector",
    "AttackPatternKind",
    "CallRecord",
    "DecodedEvent",
    "DetectorConfig",
    "EventAbi",
    "EventTrace",
    "Finding",
    "LogEntry",
    "MockBackend",
    "Status",
    "TraceBuilder",
    "TransactionReceipt",
    "Verdict",
    "build_prompt",
    "build_trace",
    "builtin_registry",
    "cross_validate",
    "decode_log",
    "encode_log",
    "fetch_receipt",
    "load_fixture",
    "parse_report",
    "receipt_to_fixture",
    "render",
    "run_all_detectors",
    "signature_hash",
    "trace_digest",
]
