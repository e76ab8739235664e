"""Normalized event traces: every log (and call record) reduced to
name / address / value, plus gas where known."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from types import MappingProxyType
from typing import Any, Mapping

from .abi import AbiRegistry, UnknownEvent, builtin_registry, decode_log
from .errors import DecodeError
from .ingestion import TransactionReceipt

UNKNOWN_EVENT = "UnknownEvent"

# (from param, to param, value param) per built-in event name
_ROLE_MAP = {
    "Transfer": ("from", "to", "value"),
    "Approval": ("owner", "spender", "value"),
    "FlashLoan": ("recipient", "token", "amount"),
    "Withdrawal": ("src", None, "wad"),
    "Deposit": (None, "dst", "wad"),
    "Swap": ("sender", "to", None),
    "Sync": (None, None, None),
}


@dataclass(frozen=True)
class DecodedEvent:
    index: int
    name: str
    emitter: str | None
    from_address: str | None = None
    to_address: str | None = None
    value: int | None = None
    gas_used: int | None = None
    origin: str = "log"
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "extra", MappingProxyType(dict(self.extra)))

    @property
    def is_call(self):
        return self.origin == "call"

    @property
    def address_label(self) -> str:
        if self.from_address and self.to_address:
            return f"{self.from_address}→{self.to_address}"
        return self.from_address or self.to_address or self.emitter or "-"


@dataclass(frozen=True)
class EventTrace:
    tx_hash: str
    status: bool
    gas_used_total: int
    events: tuple[DecodedEvent, ...] = ()

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, i):
        return self.events[i]


def _normalize(index, decoded, emitter):
    if isinstance(decoded, UnknownEvent):
        entry = decoded.entry
        return DecodedEvent(
            index=index,
            name=UNKNOWN_EVENT,
            emitter=emitter,
            extra={"topics": ["0x" + t.hex() for t in entry.topics], "data": "0x" + entry.data.hex()},
        )
    params = decoded.as_dict()
    from_key, to_key, value_key = _ROLE_MAP.get(decoded.name, (None, None, None))
    if decoded.name not in _ROLE_MAP:
        # user-registered events: pick up conventional names when they exist
        from_key = "from" if "from" in params else None
        to_key = "to" if "to" in params else None
        value_key = "value" if "value" in params else None
    used = {from_key, to_key, value_key}
    return DecodedEvent(
        index=index,
        name=decoded.name,
        emitter=emitter,
        from_address=params.get(from_key) if from_key else None,
        to_address=params.get(to_key) if to_key else None,
        value=params.get(value_key) if value_key else None,
        extra={k: v for k, v in params.items() if k not in used},
    )


def build_trace(receipt: TransactionReceipt, registry: AbiRegistry | None = None) -> EventTrace:
    registry = registry if registry is not None else builtin_registry()
    events = []
    for log in receipt.logs:
        index = len(events)
        try:
            decoded = decode_log(log, registry)
        except DecodeError as exc:
            raise DecodeError(f"event {index} (logIndex {log.log_index}): {exc}") from None
        events.append(_normalize(index, decoded, log.address))
    for call in receipt.call_records or ():
        events.append(
            DecodedEvent(
                index=len(events),
                name=call.function_name,
                emitter=call.to_address,
                from_address=call.from_address,
                to_address=call.to_address,
                value=call.value,
                gas_used=call.gas_used,
                origin="call",
            )
        )
    return EventTrace(receipt.tx_hash, receipt.status, receipt.gas_used, tuple(events))


@dataclass(frozen=True)
class TraceDigest:
    event_counts: Mapping[str, int]
    distinct_addresses: int
    max_value: int | None
    max_gas_used: int | None
    event_total: int

    def as_dict(self):
        return {
            "event_counts": dict(sorted(self.event_counts.items())),
            "event_total": self.event_total,
            "distinct_addresses": self.distinct_addresses,
            "max_value": None if self.max_value is None else str(self.max_value),
            "max_gas_used": self.max_gas_used,
        }


def participants(event: DecodedEvent) -> set[str]:
    addresses = {a for a in (event.from_address, event.to_address) if a}
    if not addresses and event.emitter:
        addresses.add(event.emitter)
    return addresses


def trace_digest(trace: EventTrace) -> TraceDigest:
    counts = Counter(e.name for e in trace.events)
    addresses = set()
    for e in trace.events:
        addresses |= participants(e)
    values = [e.value for e in trace.events if e.value is not None]
    gas = [e.gas_used for e in trace.events if e.gas_used is not None]
    return TraceDigest(
        event_counts=dict(counts),
        distinct_addresses=len(addresses),
        max_value=max(values) if values else None,
        max_gas_used=max(gas) if gas else None,
        event_total=len(trace.events),
    )


def format_sci(value: int | None) -> str:
    """5 significant digits, e.g. ``1.0030e+22``."""
    if value is None:
        return "-"
    if value == 0:
        return "0.0000e+0"
    return format(Decimal(value), ".4e")


def format_extra(extra: Mapping[str, Any]) -> str:
    parts = []
    for key, val in extra.items():
        if isinstance(val, bool) or not isinstance(val, int):
            continue
        parts.append(f"{key}={format_sci(val)}")
    return " ".join(parts)


def dump_trace(trace: EventTrace) -> str:
    """One line per event: ``index name from→to value gas``."""
    lines = []
    for e in trace.events:
        gas = "-" if e.gas_used is None else str(e.gas_used)
        lines.append(f"{e.index} {e.name} {e.address_label} {format_sci(e.value)} {gas}")
    return "\n".join(lines) + ("\n" if lines else "")
