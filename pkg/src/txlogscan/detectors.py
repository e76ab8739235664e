"""Deterministic attack-pattern detectors over an :class:`EventTrace`.

Each detector is a pure function ``(trace, config) -> list[Finding]``.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, fields

from .errors import ConfigurationError
from .events import DecodedEvent, EventTrace, format_sci

OVERFLOW_CERTAIN = 2**255


class AttackPatternKind(str, enum.Enum):
    REENTRANCY = "Reentrancy"
    INTEGER_OVERFLOW = "IntegerOverflow"
    FLASH_LOAN_ATTACK = "FlashLoanAttack"
    DOS = "DoS"

    @property
    def order(self):
        return list(AttackPatternKind).index(self)

    @property
    def label(self):
        return _LABELS[self]


_LABELS = {
    AttackPatternKind.REENTRANCY: "Reentrancy",
    AttackPatternKind.INTEGER_OVERFLOW: "Integer Overflow",
    AttackPatternKind.FLASH_LOAN_ATTACK: "Flash Loan Attack",
    AttackPatternKind.DOS: "DoS",
}


@dataclass(frozen=True)
class DetectorConfig:
    overflow_threshold: int = 2**250
    reentry_min_transfers: int = 4
    reentry_min_reversals: int = 2
    dos_gas_limit: int = 4_712_388
    dos_min_repeats: int = 3
    dos_small_value_max: int = 10**16

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ConfigurationError(f"{f.name} must be a positive integer, got {value!r}")
        if self.reentry_min_transfers < 2:
            raise ConfigurationError("reentry_min_transfers must be >= 2")

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigurationError(f"unknown detector settings: {sorted(unknown)}")
        return cls(**{k: int(v) if isinstance(v, str) else v for k, v in mapping.items()})


@dataclass(frozen=True)
class Finding:
    kind: AttackPatternKind
    evidence: tuple[int, ...]
    score: float
    explanation: str

    def __post_init__(self):
        object.__setattr__(self, "evidence", tuple(self.evidence))
        if not self.evidence:
            raise ValueError("a finding needs at least one evidence index")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score}")

    def sort_key(self):
        return (self.evidence[0], self.kind.order)


def _short(address):
    return address[:6] if address else "None"


# -- reentrancy --------------------------------------------------------------------


def _is_transfer(e: DecodedEvent):
    return e.name == "Transfer" and e.from_address and e.to_address and e.from_address != e.to_address


def detect_reentrancy(trace: EventTrace, cfg: DetectorConfig = DetectorConfig()) -> list[Finding]:
    by_pair = defaultdict(list)
    for e in trace.events:
        if _is_transfer(e):
            by_pair[frozenset((e.from_address, e.to_address))].append(e)

    findings = []
    for pair_events in by_pair.values():
        if len(pair_events) < cfg.reentry_min_transfers:
            continue
        reversals = 0
        for prev, cur in zip(pair_events, pair_events[1:]):
            if cur.from_address != prev.from_address:
                reversals += 1
        if reversals < cfg.reentry_min_reversals:
            continue
        a, b = sorted({pair_events[0].from_address, pair_events[0].to_address})
        findings.append(
            Finding(
                AttackPatternKind.REENTRANCY,
                tuple(e.index for e in pair_events),
                min(1.0, reversals / 4),
                f"{len(pair_events)} Transfer events between {_short(a)} and {_short(b)} "
                f"reverse direction {reversals} times, a send/receive loop consistent with "
                f"re-entering the contract before its state is updated",
            )
        )
    return sorted(findings, key=Finding.sort_key)


# -- integer overflow -----------------------------------------------------------------


def detect_integer_overflow(trace: EventTrace, cfg: DetectorConfig = DetectorConfig()) -> list[Finding]:
    by_value = defaultdict(list)
    for e in trace.events:
        if e.name == "Transfer" and e.value is not None and e.value >= cfg.overflow_threshold:
            by_value[e.value].append(e.index)

    findings = []
    for value, indices in by_value.items():
        findings.append(
            Finding(
                AttackPatternKind.INTEGER_OVERFLOW,
                tuple(indices),
                1.0 if value >= OVERFLOW_CERTAIN else 0.8,
                f"{len(indices)} Transfer(s) carry value {format_sci(value)} "
                f"(~2^{value.bit_length() - 1}), at or above the overflow threshold "
                f"{format_sci(cfg.overflow_threshold)}",
            )
        )
    return sorted(findings, key=Finding.sort_key)


# -- flash loan ----------------------------------------------------------------------------

FLASH_NAMES = frozenset({"FlashLoan", "Borrow"})


def _is_repayment(e: DecodedEvent, loan: DecodedEvent):
    if e.name == "Withdrawal":
        return True
    return e.name == "Transfer" and loan.emitter is not None and e.to_address == loan.emitter


def detect_flash_loan(trace: EventTrace, cfg: DetectorConfig = DetectorConfig()) -> list[Finding]:
    """FlashLoan/Borrow, then one or more Swaps, then a Withdrawal (or a
    Transfer back to the lender). At most one finding per trace."""
    events = trace.events
    loans = [e for e in events if e.name in FLASH_NAMES]
    for loan in loans:
        later = [e for e in events if e.index > loan.index]
        swaps = [e for e in later if e.name == "Swap"]
        if not swaps:
            continue
        terminals = [e for e in later if e.index > swaps[0].index and _is_repayment(e, loan)]
        if terminals:
            end = terminals[-1]
            between = [s for s in swaps if s.index < end.index]
            evidence = (loan.index, *(s.index for s in between), end.index)
            return [
                Finding(
                    AttackPatternKind.FLASH_LOAN_ATTACK,
                    evidence,
                    1.0,
                    f"{loan.name} at event {loan.index} is followed by {len(between)} Swap(s) and "
                    f"{end.name} at event {end.index} moving {format_sci(end.value)}; borrowed funds "
                    f"were traded and withdrawn within one transaction (price impact not assessed)",
                )
            ]
    for loan in loans:
        swaps = [e for e in events if e.index > loan.index and e.name == "Swap"]
        if len(swaps) >= 2:
            return [
                Finding(
                    AttackPatternKind.FLASH_LOAN_ATTACK,
                    (loan.index, *(s.index for s in swaps)),
                    0.6,
                    f"{loan.name} at event {loan.index} is followed by {len(swaps)} Swaps "
                    f"but no withdrawal or repayment was observed",
                )
            ]
    return []


# -- denial of service -------------------------------------------------------------------


def _nondecreasing_runs(events, min_len):
    runs, run = [], []
    for e in events:
        if run and e.gas_used < run[-1].gas_used:
            if len(run) >= min_len:
                runs.append(run)
            run = []
        run.append(e)
    if len(run) >= min_len:
        runs.append(run)
    return runs


def repetition_matches(trace: EventTrace, cfg: DetectorConfig) -> list[list[DecodedEvent]]:
    """Runs of cheap repeated calls (same name, same caller) with
    non-decreasing gas, each at least ``dos_min_repeats`` long."""
    groups = defaultdict(list)
    for e in trace.events:
        if (
            e.is_call
            and e.gas_used is not None
            and e.value is not None
            and e.value <= cfg.dos_small_value_max
        ):
            groups[(e.name, e.from_address)].append(e)
    runs = []
    for key in sorted(groups, key=lambda k: groups[k][0].index):
        runs.extend(_nondecreasing_runs(groups[key], cfg.dos_min_repeats))
    return runs


def detect_dos(trace: EventTrace, cfg: DetectorConfig = DetectorConfig()) -> list[Finding]:
    runs = repetition_matches(trace, cfg)
    over = [e for e in trace.events if e.gas_used is not None and e.gas_used > cfg.dos_gas_limit]
    if not runs and not over:
        return []

    notes = []
    for run in runs:
        gas = [e.gas_used for e in run]
        notes.append(
            f"{len(run)} calls to {run[0].name} from {_short(run[0].from_address)} with value <= "
            f"{format_sci(cfg.dos_small_value_max)} wei and gas rising {gas[0]} -> {gas[-1]}"
        )
    if over:
        peak = max(e.gas_used for e in over)
        notes.append(
            f"{len(over)} event(s) used gas above the limit {cfg.dos_gas_limit} "
            f"(peak {peak}, {peak - cfg.dos_gas_limit} over)"
        )
    evidence = sorted({e.index for run in runs for e in run} | {e.index for e in over})
    return [
        Finding(
            AttackPatternKind.DOS,
            tuple(evidence),
            1.0 if runs and over else 0.7,
            "; ".join(notes),
        )
    ]


DETECTORS = (detect_reentrancy, detect_integer_overflow, detect_flash_loan, detect_dos)


def run_all_detectors(trace: EventTrace, cfg: DetectorConfig = DetectorConfig()) -> list[Finding]:
    findings = [f for detector in DETECTORS for f in detector(trace, cfg)]
    return sorted(findings, key=Finding.sort_key)


def kinds_of(findings) -> set[AttackPatternKind]:
    return {f.kind for f in findings}
