import json

import jsonschema
import pytest

from txlogscan.detectors import AttackPatternKind, DetectorConfig, Finding, run_all_detectors
from txlogscan.llm import MockBackend, parse_report
from txlogscan.pipeline import analyze_receipt, default_mock_dir
from txlogscan.report import Status, cross_validate, load_report, render, report_schema, verdict_to_dict

from conftest import INCIDENTS

K = AttackPatternKind


def report_claiming(*phrases):
    return parse_report("Summary: s\nPattern Analysis: " + " ".join(phrases) + "\nFurther Recommendation: r\n")


def test_confirmed():
    v = cross_validate([Finding(K.REENTRANCY, (1,), 1.0, "x")], report_claiming("reentrancy"))
    assert v.statuses[K.REENTRANCY] is Status.CONFIRMED
    assert all(v.statuses[k] is Status.ABSENT for k in K if k is not K.REENTRANCY)


def test_detector_only_and_llm_only():
    v = cross_validate([Finding(K.REENTRANCY, (1,), 1.0, "x")], report_claiming("denial of service"))
    assert v.statuses[K.REENTRANCY] is Status.DETECTOR_ONLY
    assert v.statuses[K.DOS] is Status.LLM_ONLY
    assert v.detected == [K.REENTRANCY]


def test_llm_only_does_not_count_as_detected():
    v = cross_validate([], report_claiming("flash loan"))
    assert v.statuses[K.FLASH_LOAN_ATTACK] is Status.LLM_ONLY
    assert v.detected == []


def test_no_llm_every_finding_is_detector_only(traces):
    for name in INCIDENTS:
        findings = run_all_detectors(traces[name], DetectorConfig())
        v = cross_validate(findings, None, traces[name])
        assert {k for k, s in v.statuses.items() if s is Status.DETECTOR_ONLY} == {f.kind for f in findings}
        assert Status.CONFIRMED not in v.statuses.values()


def test_detector_findings_unaffected_by_llm(receipts):
    mock = MockBackend(default_mock_dir())
    for name in INCIDENTS:
        a = analyze_receipt(receipts[name])
        b = analyze_receipt(receipts[name], backend=mock)
        assert a.verdict.findings == b.verdict.findings


@pytest.mark.parametrize("name", [*INCIDENTS, "empty"])
@pytest.mark.parametrize("llm", [False, True])
def test_machine_output_validates_and_round_trips(receipts, name, llm):
    backend = MockBackend(default_mock_dir()) if llm else None
    v = analyze_receipt(receipts[name], backend=backend).verdict
    blob = render(v, "machine")
    doc = json.loads(blob)
    jsonschema.validate(doc, report_schema())
    back = load_report(blob)
    assert back == v
    assert render(back, "machine") == blob
    assert render(back, "text") == render(v, "text")


def test_big_values_are_strings(receipts):
    doc = json.loads(render(analyze_receipt(receipts["beautychain"]).verdict, "machine"))
    assert doc["evidence_rows"][0]["value"] == str(2**255)
    assert doc["trace_digest"]["max_value"] == str(2**255)


def test_schema_rejects_extra_keys(receipts):
    doc = verdict_to_dict(analyze_receipt(receipts["xsurge"]).verdict)
    doc["surprise"] = 1
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(doc, report_schema())


def test_mock_run_confirmed(receipts):
    v = analyze_receipt(receipts["xsurge"], backend=MockBackend(default_mock_dir())).verdict
    assert v.statuses[K.REENTRANCY] is Status.CONFIRMED


def test_render_deterministic(receipts):
    mock = MockBackend(default_mock_dir())
    for name in INCIDENTS:
        first = render(analyze_receipt(receipts[name], backend=mock).verdict)
        assert render(analyze_receipt(receipts[name], backend=mock).verdict) == first


def test_text_sections_and_governmental_gas(receipts):
    text = render(analyze_receipt(receipts["governmental"]).verdict).decode()
    headers = ["Summary", "Pattern Analysis", "Further Recommendation", "Evidence"]
    positions = [text.index(f"\n{h}\n" + "-" * len(h)) for h in headers]
    assert positions == sorted(positions)
    assert "5057945" in text and "4712388" in text
    assert "DoS" in text and "detector-only" in text


def test_empty_trace_report(receipts):
    v = analyze_receipt(receipts["empty"]).verdict
    assert all(s is Status.ABSENT for s in v.statuses.values())
    text = render(v).decode()
    assert "No patterns detected." in text
    assert "(none)" in text


def test_unknown_format(receipts):
    with pytest.raises(ValueError):
        render(analyze_receipt(receipts["empty"]).verdict, "yaml")


class Garbage:
    name = "garbage"

    def generate(self, prompt):
        return "I like turtles."


def test_unparseable_llm_keeps_detector_results(receipts):
    v = analyze_receipt(receipts["governmental"], backend=Garbage()).verdict
    assert v.statuses[K.DOS] is Status.DETECTOR_ONLY
    assert v.llm_error.endswith("I like turtles.")
    assert "I like turtles." in render(v).decode()
    jsonschema.validate(json.loads(render(v, "machine")), report_schema())
