import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from txlogscan.detectors import AttackPatternKind, DetectorConfig
from txlogscan.estimator import AttackPatternDetector, TraceBuilder

from conftest import INCIDENTS

K = AttackPatternKind


def test_params_match_config_defaults():
    params = AttackPatternDetector().get_params()
    assert DetectorConfig(**params) == DetectorConfig()


def test_set_params_and_clone():
    det = AttackPatternDetector().set_params(overflow_threshold=10**21)
    copy = clone(det)
    assert copy.get_params()["overflow_threshold"] == 10**21
    assert copy is not det


def test_from_config_round_trip():
    cfg = DetectorConfig(dos_gas_limit=750000)
    assert AttackPatternDetector.from_config(cfg).fit().config_ == cfg


def test_not_fitted(traces, receipts):
    with pytest.raises(NotFittedError):
        AttackPatternDetector().predict([traces["xsurge"]])
    with pytest.raises(NotFittedError):
        TraceBuilder().transform([receipts["xsurge"]])


def test_invalid_params_rejected_at_fit():
    with pytest.raises(ValueError):
        AttackPatternDetector(dos_gas_limit=0).fit()


def test_pipeline_matches_fixture_matrix(receipts):
    pipe = make_pipeline(TraceBuilder(), AttackPatternDetector())
    X = [receipts[n] for n in INCIDENTS]
    kinds = pipe.fit(X).predict(X)
    expected = [[K.REENTRANCY], [K.INTEGER_OVERFLOW], [K.FLASH_LOAN_ATTACK], [K.DOS]]
    assert [[f.kind for f in fs] for fs in kinds] == expected


def test_single_receipt_accepted(receipts):
    det = AttackPatternDetector().fit()
    traces = TraceBuilder().fit_transform(receipts["xsurge"])
    assert det.predict_kinds(traces) == [[K.REENTRANCY]]


def test_wrong_input_type():
    with pytest.raises(TypeError):
        TraceBuilder().fit().transform(["not a receipt"])
