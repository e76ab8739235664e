"""scikit-learn style wrappers so the decoding and detection stages compose
with ``Pipeline`` and parameter search utilities.

>>> from sklearn.pipeline import make_pipeline
>>> pipe = make_pipeline(TraceBuilder(), AttackPatternDetector(overflow_threshold=10**21))
>>> findings = pipe.fit(receipts).predict(receipts)   # doctest: +SKIP
"""

from __future__ import annotations

from dataclasses import fields

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .abi import AbiRegistry, builtin_registry, load_abi_file
from .detectors import DetectorConfig, run_all_detectors
from .events import EventTrace, build_trace
from .ingestion import TransactionReceipt


def check_receipts(X):
    """Accept a single receipt or an iterable of receipts; return a list."""
    if isinstance(X, TransactionReceipt):
        return [X]
    X = list(X)
    for i, r in enumerate(X):
        if not isinstance(r, TransactionReceipt):
            raise TypeError(f"element {i} is {type(r).__name__}, expected TransactionReceipt")
    return X


def check_traces(X):
    if isinstance(X, EventTrace):
        return [X]
    X = list(X)
    for i, t in enumerate(X):
        if not isinstance(t, EventTrace):
            raise TypeError(f"element {i} is {type(t).__name__}, expected EventTrace")
    return X


class TraceBuilder(TransformerMixin, BaseEstimator):
    """Decode receipts into event traces.

    Parameters
    ----------
    registry : AbiRegistry, optional
        Event ABIs to decode with. Defaults to the built-in set.
    abi_paths : tuple of str, optional
        Extra ABI files layered on top of ``registry`` at fit time.
    """

    def __init__(self, registry: AbiRegistry | None = None, abi_paths=()):
        self.registry = registry
        self.abi_paths = abi_paths

    def fit(self, X=None, y=None):
        registry = self.registry if self.registry is not None else builtin_registry()
        for path in self.abi_paths:
            registry = load_abi_file(path, registry)
        self.registry_ = registry
        return self

    def transform(self, X):
        if not hasattr(self, "registry_"):
            raise NotFittedError("TraceBuilder is not fitted yet; call fit() first")
        return [build_trace(r, self.registry_) for r in check_receipts(X)]


class AttackPatternDetector(BaseEstimator):
    """Rule-based detector for the four attack patterns.

    Nothing is learned: ``fit`` validates the thresholds and freezes them into
    ``config_``. ``predict`` returns one list of findings per trace.
    """

    def __init__(
        self,
        overflow_threshold=2**250,
        reentry_min_transfers=4,
        reentry_min_reversals=2,
        dos_gas_limit=4_712_388,
        dos_min_repeats=3,
        dos_small_value_max=10**16,
    ):
        self.overflow_threshold = overflow_threshold
        self.reentry_min_transfers = reentry_min_transfers
        self.reentry_min_reversals = reentry_min_reversals
        self.dos_gas_limit = dos_gas_limit
        self.dos_min_repeats = dos_min_repeats
        self.dos_small_value_max = dos_small_value_max

    @classmethod
    def from_config(cls, cfg: DetectorConfig):
        return cls(**{f.name: getattr(cfg, f.name) for f in fields(DetectorConfig)})

    def fit(self, X=None, y=None):
        self.config_ = DetectorConfig(**self.get_params())
        return self

    def predict(self, X):
        if not hasattr(self, "config_"):
            raise NotFittedError("AttackPatternDetector is not fitted yet; call fit() first")
        return [run_all_detectors(t, self.config_) for t in check_traces(X)]

    def predict_kinds(self, X):
        return [sorted({f.kind for f in findings}, key=lambda k: k.order) for findings in self.predict(X)]
