"""Command-line entry point.

Exit status: 0 when no pattern was found, 2 when at least one pattern is
confirmed or detector-only, 1 on any operational error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

from . import __version__
from .abi import builtin_registry, load_abi_file
from .detectors import DetectorConfig
from .errors import TxLogScanError
from .events import dump_trace
from .ingestion import RPC_URL_ENV, fetch_receipt, load_fixture
from .llm import HttpBackend, MockBackend
from .pipeline import LlmSettings, analyze_receipt, default_mock_dir
from .report import render

EXIT_CLEAN, EXIT_ERROR, EXIT_FOUND = 0, 1, 2

logger = logging.getLogger("txlogscan")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def parse_uint(text: str) -> int:
    """Accept ``123``, ``0x7b``, ``2^250``, ``2**250`` or ``1e21``."""
    text = text.strip().replace("_", "")
    m = re.fullmatch(r"(\d+)\s*(?:\^|\*\*)\s*(\d+)", text)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    m = re.fullmatch(r"(\d+)[eE](\d+)", text)
    if m:
        return int(m.group(1)) * 10 ** int(m.group(2))
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an unsigned integer: {text!r}") from None


_THRESHOLD_FLAGS = [f.name for f in fields(DetectorConfig)]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="txlogscan", description="Detect attack patterns in transaction event logs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    src = p.add_argument_group("input")
    src.add_argument("--fixture", type=Path, help="receipt fixture file")
    src.add_argument("--fixture-dir", type=Path, help="directory of *.json fixtures, analyzed independently")
    src.add_argument("--tx", help="transaction hash to fetch over JSON-RPC")
    src.add_argument("--rpc", default=None, help=f"JSON-RPC endpoint (default ${RPC_URL_ENV})")
    src.add_argument("--abi", type=Path, action="append", default=[], help="extra event ABI file (repeatable)")

    llm = p.add_argument_group("LLM stage")
    mode = llm.add_mutually_exclusive_group()
    mode.add_argument("--no-llm", action="store_true", help="skip the LLM stage (default)")
    mode.add_argument("--llm", choices=["mock", "http"], help="LLM backend")
    llm.add_argument("--mock-dir", type=Path, help="canned responses for --llm mock (default: bundled set)")
    llm.add_argument("--prompt-budget", type=int, help="maximum prompt length in characters")

    out = p.add_argument_group("output")
    out.add_argument("--format", choices=["text", "machine"], default="text")
    out.add_argument("--dump-trace", action="store_true", help="print the decoded trace to stderr")
    out.add_argument("--out-dir", type=Path, help="with --fixture-dir: write one report per fixture here")
    out.add_argument("--config", type=Path, help="JSON config with 'detector' and 'llm' sections")
    out.add_argument("-v", "--verbose", action="store_true")

    det = p.add_argument_group("detector thresholds")
    for name in _THRESHOLD_FLAGS:
        det.add_argument("--" + name.replace("_", "-"), dest=name, type=parse_uint, default=None)
    return p


def _load_config(path):
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise TxLogScanError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise TxLogScanError(f"config {path} must be a JSON object")
    return doc


def _detector_config(args, config):
    values = dict(config.get("detector", {}))
    for name in _THRESHOLD_FLAGS:
        if getattr(args, name) is not None:
            values[name] = getattr(args, name)
    return DetectorConfig.from_mapping(
        {k: parse_uint(v) if isinstance(v, str) else v for k, v in values.items()}
    )


def _backend(args, config):
    llm_cfg = config.get("llm", {})
    if args.no_llm or not args.llm:
        return None
    if args.llm == "mock":
        return MockBackend(args.mock_dir or llm_cfg.get("mock_dir") or default_mock_dir())
    return HttpBackend(
        endpoint=llm_cfg.get("endpoint"),
        model=llm_cfg.get("model"),
        temperature=llm_cfg.get("temperature", 0.0),
    )


def _analyze_one(receipt, registry, cfg, backend, settings, args):
    analysis = analyze_receipt(receipt, registry, cfg, backend, settings)
    if args.dump_trace:
        sys.stderr.write(dump_trace(analysis.trace))
    status = EXIT_FOUND if analysis.verdict.detected else EXIT_CLEAN
    return render(analysis.verdict, args.format), status


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    sources = [args.fixture is not None, args.fixture_dir is not None, args.tx is not None]
    if sum(sources) != 1:
        parser.error("give exactly one of --fixture, --fixture-dir or --tx")
    if args.tx and not (args.rpc or os.environ.get(RPC_URL_ENV)):
        parser.error(f"--tx needs --rpc or ${RPC_URL_ENV}")
    if args.mock_dir and args.llm != "mock":
        parser.error("--mock-dir only applies with --llm mock")

    try:
        config = _load_config(args.config)
        cfg = _detector_config(args, config)
        registry = builtin_registry()
        for path in args.abi:
            registry = load_abi_file(path, registry)
        backend = _backend(args, config)
        llm_cfg = config.get("llm", {})
        settings = LlmSettings(
            budget=args.prompt_budget or llm_cfg.get("budget", LlmSettings.budget),
            retries=llm_cfg.get("retries", LlmSettings.retries),
        )

        if args.fixture_dir is not None:
            return _run_dir(args, registry, cfg, backend, settings, llm_cfg.get("max_in_flight", 2))

        if args.fixture is not None:
            receipt = load_fixture(args.fixture)
        else:
            receipt = fetch_receipt(args.rpc, args.tx)
        blob, status = _analyze_one(receipt, registry, cfg, backend, settings, args)
        sys.stdout.buffer.write(blob)
        sys.stdout.flush()
        return status
    except (TxLogScanError, OSError) as exc:
        print(f"txlogscan: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _run_dir(args, registry, cfg, backend, settings, max_in_flight):
    paths = sorted(args.fixture_dir.glob("*.json"))
    if not paths:
        raise TxLogScanError(f"no *.json fixtures in {args.fixture_dir}")

    def work(path):
        try:
            return path, *_analyze_one(load_fixture(path), registry, cfg, backend, settings, args), None
        except (TxLogScanError, OSError) as exc:
            return path, None, EXIT_ERROR, exc

    with ThreadPoolExecutor(max_workers=max(1, int(max_in_flight))) as pool:
        results = list(pool.map(work, paths))

    suffix = ".json" if args.format == "machine" else ".txt"
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    worst = EXIT_CLEAN
    for path, blob, status, exc in results:
        if exc is not None:
            print(f"txlogscan: error: {path.name}: {exc}", file=sys.stderr)
            worst = EXIT_ERROR
            continue
        if worst != EXIT_ERROR:
            worst = max(worst, status)
        if args.out_dir:
            (args.out_dir / (path.stem + suffix)).write_bytes(blob)
        else:
            sys.stdout.buffer.write(blob)
    sys.stdout.flush()
    return worst


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
