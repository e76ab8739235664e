"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines are printed even without -s) or directly:

    python3 tests/test_acceptance.py
"""

import io
import json
import random
import sys
import time
from contextlib import redirect_stdout
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest  # noqa: E402

from txlogscan.abi import BUILTIN_EVENTS, builtin_registry, decode_log, encode_log  # noqa: E402
from txlogscan.cli import run  # noqa: E402
from txlogscan.detectors import (  # noqa: E402
    AttackPatternKind,
    DetectorConfig,
    detect_dos,
    detect_flash_loan,
    detect_integer_overflow,
    detect_reentrancy,
    run_all_detectors,
)
from txlogscan.events import build_trace  # noqa: E402
from txlogscan.ingestion import load_fixture  # noqa: E402
from txlogscan.llm import MockBackend, build_prompt, parse_report  # noqa: E402
from txlogscan.pipeline import default_mock_dir, incident_fixture  # noqa: E402

from oracles import as_set, dos_oracle, flash_oracle, overflow_oracle, random_trace, reentrancy_oracle  # noqa: E402

K = AttackPatternKind
EXPECTED = {
    "xsurge": K.REENTRANCY,
    "beautychain": K.INTEGER_OVERFLOW,
    "mevbot": K.FLASH_LOAN_ATTACK,
    "governmental": K.DOS,
}


def _cli(*argv):
    buf = io.TextIOWrapper(io.BytesIO(), encoding="utf-8")
    saved = sys.stdout
    sys.stdout = buf
    try:
        code = run(list(argv))
    finally:
        buf.flush()
        sys.stdout = saved
    return code, buf.buffer.getvalue()


def _trace(name):
    return build_trace(load_fixture(incident_fixture(name)), builtin_registry())


# -- criteria: each returns (ok, detail) -------------------------------------------


def criterion_1():
    start = time.perf_counter()
    problems = []
    for name, kind in EXPECTED.items():
        kinds = [f.kind for f in run_all_detectors(_trace(name), DetectorConfig())]
        if kinds != [kind]:
            problems.append(f"{name}: {[k.value for k in kinds]}")
        code, blob = _cli("--fixture", str(incident_fixture(name)), "--no-llm", "--format", "machine")
        flagged = {k for k, s in json.loads(blob)["verdicts"].items() if s != "absent"}
        if code != 2 or flagged != {kind.value}:
            problems.append(f"{name} via CLI: exit {code}, {sorted(flagged)}")
    elapsed = time.perf_counter() - start
    if elapsed >= 1.0:
        problems.append(f"took {elapsed:.2f}s")
    return not problems, "; ".join(problems) or f"4/4 fixtures exact in {elapsed:.3f}s"


def criterion_2():
    fixture = str(incident_fixture("xsurge"))
    default = [f for f in detect_integer_overflow(_trace("xsurge"), DetectorConfig())]
    _, blob = _cli("--fixture", fixture, "--format", "machine", "--overflow-threshold", "10^21")
    lowered = [f for f in json.loads(blob)["findings"] if f["kind"] == K.INTEGER_OVERFLOW.value]
    ok = not default and bool(lowered)
    return ok, f"default threshold: {len(default)} findings; 10^21: {len(lowered)} findings"


def criterion_3():
    registry = builtin_registry()
    rng = random.Random(3)
    address = "0x" + "11" * 20

    def value(sol_type):
        if sol_type == "address":
            return "0x" + rng.randbytes(20).hex()
        if sol_type == "bool":
            return rng.random() < 0.5
        if sol_type == "bytes32":
            return rng.randbytes(32)
        bits = int(sol_type[4:])
        return rng.choice([0, 2**bits - 1, rng.randrange(2**bits)])

    cases = [
        ("Transfer", (("from", address), ("to", address), ("value", 0))),
        ("Transfer", (("from", address), ("to", address), ("value", 2**256 - 1))),
    ]
    while len(cases) < 1000:
        event = rng.choice(BUILTIN_EVENTS)
        cases.append((event.name, tuple((p.name, value(p.type)) for p in event.params)))

    start = time.perf_counter()
    bad = 0
    for name, params in cases:
        decoded = decode_log(encode_log(name, params, registry, address=address), registry)
        bad += (decoded.name, decoded.params) != (name, params)
    elapsed = time.perf_counter() - start
    return bad == 0 and elapsed < 1.0, f"{len(cases) - bad}/{len(cases)} exact in {elapsed:.3f}s"


ORACLES = [
    (detect_reentrancy, reentrancy_oracle, [6, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]),
    (detect_integer_overflow, overflow_oracle, None),
    (detect_flash_loan, flash_oracle, [3, 1, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1]),
    (detect_dos, dos_oracle, [1, 1, 1, 1, 1, 1, 1, 1, 1, 6, 2, 1]),
]


def criterion_4():
    start = time.perf_counter()
    parts, ok = [], True
    for detector, oracle, weights in ORACLES:
        rng = random.Random(detector.__name__)
        agree = positives = 0
        for _ in range(500):
            cfg = DetectorConfig(
                reentry_min_transfers=rng.randint(2, 5),
                reentry_min_reversals=rng.randint(1, 3),
                dos_min_repeats=rng.randint(2, 4),
            )
            trace = random_trace(rng, max_events=50, n_addresses=rng.randint(2, 8), weights=weights)
            got = detector(trace, cfg)
            agree += as_set(got) == oracle(trace, cfg)
            positives += bool(got)
        ok &= agree == 500
        parts.append(f"{detector.__name__} {agree}/500 ({positives} positive)")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10.0
    return ok, ", ".join(parts) + f" in {elapsed:.2f}s"


def criterion_5():
    argv = ("--fixture", str(incident_fixture("xsurge")), "--llm", "mock", "--format", "machine")
    (c1, first), (c2, second) = _cli(*argv), _cli(*argv)
    verdict = json.loads(first)["verdicts"][K.REENTRANCY.value]
    backend = MockBackend(default_mock_dir())
    sections = 0
    for name in EXPECTED:
        trace = _trace(name)
        r = parse_report(backend.generate(build_prompt(trace).text), trace)
        sections += all((r.summary, r.pattern_analysis, r.further_recommendation))
    ok = first == second and c1 == c2 == 2 and verdict == "confirmed" and sections == 4
    return ok, f"byte-identical={first == second}, Reentrancy={verdict}, sections parsed {sections}/4"


def criterion_6():
    code, text = _cli("--fixture", str(incident_fixture("governmental")), "--no-llm")
    text = text.decode()
    (finding,) = [f for f in run_all_detectors(_trace("governmental"), DetectorConfig()) if f.kind is K.DOS]
    ok = code == 2 and "5057945" in text and "4712388" in text and DetectorConfig().dos_gas_limit == 4_712_388
    return ok, f"explanation: {finding.explanation}"


CRITERIA = [
    (1, "fixture matrix", criterion_1),
    (2, "overflow threshold limitation fix", criterion_2),
    (3, "decoder round trip", criterion_3),
    (4, "detector-oracle equivalence", criterion_4),
    (5, "mock LLM determinism", criterion_5),
    (6, "DoS gas constants", criterion_6),
]

SKIPPED = (7, "real-LLM parsing quality and live RPC fetch",
           "out of scope; covered by the mock-backend tests and a manual smoke test")


def _line(n, title, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {n} ({title}): {detail}"


@pytest.mark.parametrize("n, title, check", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(capsys, n, title, check):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(n, title, ok, detail))
    assert ok, detail


def test_criterion_7_out_of_scope(capsys):
    n, title, reason = SKIPPED
    with capsys.disabled():
        print(f"\nSKIP criterion {n} ({title}): {reason}")
    pytest.skip(reason)


def main():
    failed = 0
    for n, title, check in CRITERIA:
        with redirect_stdout(io.StringIO()):
            try:
                ok, detail = check()
            except Exception as exc:  # report and keep going
                ok, detail = False, f"{type(exc).__name__}: {exc}"
        print(_line(n, title, ok, detail))
        failed += not ok
    print(f"SKIP criterion {SKIPPED[0]} ({SKIPPED[1]}): {SKIPPED[2]}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
