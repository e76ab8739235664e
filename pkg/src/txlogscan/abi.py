"""Event ABI registry and log topic/data decoding.

Only static types are supported: ``address``, ``bool``, ``bytes32`` and
``uintN`` (N a multiple of 8 up to 256). Each value occupies one 32-byte
word, indexed values live in ``topics[1:]`` and the rest in ``data``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

from Crypto.Hash import keccak

from .errors import AbiConflictError, ConfigurationError, DecodeError, EncodeError
from .ingestion import LogEntry, normalize_address

_UINT_RE = re.compile(r"^uint(\d+)$")


def signature_hash(canonical_signature: str) -> bytes:
    """keccak-256 of the ASCII signature, e.g. ``Transfer(address,address,uint256)``."""
    return keccak.new(digest_bits=256, data=canonical_signature.encode("ascii")).digest()


def _check_type(sol_type):
    if sol_type in ("address", "bool", "bytes32"):
        return
    m = _UINT_RE.match(sol_type)
    if m and 8 <= int(m.group(1)) <= 256 and int(m.group(1)) % 8 == 0:
        return
    raise ConfigurationError(f"unsupported ABI type {sol_type!r}")


def _uint_bits(sol_type):
    m = _UINT_RE.match(sol_type)
    return int(m.group(1)) if m else None


@dataclass(frozen=True)
class AbiParam:
    name: str
    type: str
    indexed: bool = False


@dataclass(frozen=True)
class EventAbi:
    name: str
    params: tuple[AbiParam, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        for p in self.params:
            _check_type(p.type)
        if sum(p.indexed for p in self.params) > 3:
            raise ConfigurationError(f"{self.name}: at most 3 indexed params")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"{self.name}: duplicate param names")

    @property
    def canonical_signature(self) -> str:
        return f"{self.name}({','.join(p.type for p in self.params)})"

    @property
    def signature_hash(self) -> bytes:
        return signature_hash(self.canonical_signature)

    @property
    def indexed(self):
        return [p for p in self.params if p.indexed]

    @property
    def non_indexed(self):
        return [p for p in self.params if not p.indexed]

    def layout(self) -> str:
        topics = ", ".join(f"{p.type} {p.name}" for p in self.indexed)
        data = ", ".join(f"{p.type} {p.name}" for p in self.non_indexed)
        return f"topics=[sig, {topics}] data=[{data}]" if topics else f"topics=[sig] data=[{data}]"

    @classmethod
    def parse(cls, name, params):
        """Build from ``[(name, type, indexed), ...]`` or ABI-JSON dicts."""
        out = []
        for p in params:
            if isinstance(p, Mapping):
                out.append(AbiParam(p["name"], p["type"], bool(p.get("indexed", False))))
            else:
                out.append(AbiParam(*p))
        return cls(name, tuple(out))


@dataclass(frozen=True)
class UnknownEvent:
    """Marker for logs whose topic 0 is missing or not in the registry."""

    entry: LogEntry
    name: str = "UnknownEvent"


@dataclass(frozen=True)
class DecodedLog:
    name: str
    params: tuple[tuple[str, Any], ...]
    abi: EventAbi

    def as_dict(self):
        return dict(self.params)


@dataclass(frozen=True)
class AbiRegistry:
    """Immutable mapping of signature hash to :class:`EventAbi`.

    ``scope`` optionally restricts which hashes apply to a given emitter
    address; addresses without a scope see every entry.
    """

    entries: Mapping[bytes, EventAbi] = field(default_factory=dict)
    scope: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))
        object.__setattr__(self, "scope", MappingProxyType(dict(self.scope)))

    def register(self, abi: EventAbi, address: str | None = None) -> "AbiRegistry":
        key = abi.signature_hash
        existing = self.entries.get(key)
        if existing is not None and existing != abi:
            raise AbiConflictError(
                f"{abi.canonical_signature} collides with registered {existing.canonical_signature}"
            )
        entries = dict(self.entries)
        entries[key] = abi
        scope = dict(self.scope)
        if address is not None:
            address = normalize_address(address)
            scope[address] = frozenset(scope.get(address, frozenset()) | {key})
        return AbiRegistry(entries, scope)

    def lookup(self, topic0: bytes, address: str | None = None) -> EventAbi | None:
        if address is not None and address in self.scope and topic0 not in self.scope[address]:
            return None
        return self.entries.get(topic0)

    def by_name(self, name: str) -> EventAbi:
        matches = sorted(
            (abi for abi in self.entries.values() if abi.name == name),
            key=lambda abi: abi.canonical_signature,
        )
        if not matches:
            raise EncodeError(f"no event named {name!r} in registry")
        return matches[0]

    def __len__(self):
        return len(self.entries)

    def __contains__(self, abi):
        return self.entries.get(abi.signature_hash) == abi


def register_event(registry: AbiRegistry, abi: EventAbi) -> AbiRegistry:
    return registry.register(abi)


BUILTIN_EVENTS = (
    EventAbi.parse("Transfer", [("from", "address", True), ("to", "address", True), ("value", "uint256", False)]),
    EventAbi.parse("Approval", [("owner", "address", True), ("spender", "address", True), ("value", "uint256", False)]),
    EventAbi.parse(
        "Swap",
        [
            ("sender", "address", True),
            ("amount0In", "uint256", False),
            ("amount1In", "uint256", False),
            ("amount0Out", "uint256", False),
            ("amount1Out", "uint256", False),
            ("to", "address", True),
        ],
    ),
    EventAbi.parse("Sync", [("reserve0", "uint112", False), ("reserve1", "uint112", False)]),
    EventAbi.parse(
        "FlashLoan",
        [
            ("recipient", "address", True),
            ("token", "address", True),
            ("amount", "uint256", False),
            ("feeAmount", "uint256", False),
        ],
    ),
    EventAbi.parse("Withdrawal", [("src", "address", True), ("wad", "uint256", False)]),
    EventAbi.parse("Deposit", [("dst", "address", True), ("wad", "uint256", False)]),
)


def builtin_registry() -> AbiRegistry:
    registry = AbiRegistry()
    for abi in BUILTIN_EVENTS:
        registry = registry.register(abi)
    return registry


def load_abi_file(path, registry: AbiRegistry | None = None) -> AbiRegistry:
    """Extend ``registry`` with entries from a JSON list of
    ``{"name", "params": [{"name", "type", "indexed"}], "address"?}``."""
    registry = registry if registry is not None else builtin_registry()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read ABI file {path}: {exc}") from None
    if not isinstance(doc, list):
        raise ConfigurationError(f"{path}: expected a list of event entries")
    for i, item in enumerate(doc):
        try:
            abi = EventAbi.parse(item["name"], item.get("params", []))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"{path}[{i}]: malformed entry ({exc})") from None
        registry = registry.register(abi, address=item.get("address"))
    return registry


# -- word codec ------------------------------------------------------------------


def _decode_word(word: bytes, sol_type: str):
    if sol_type == "address":
        return "0x" + word[12:].hex()
    if sol_type == "bool":
        return word != bytes(32)
    if sol_type == "bytes32":
        return bytes(word)
    value = int.from_bytes(word, "big")
    bits = _uint_bits(sol_type)
    if bits < 256 and value >> bits:
        raise DecodeError(f"value {value} does not fit {sol_type}")
    return value


def _encode_word(value, sol_type: str, name: str) -> bytes:
    if sol_type == "address":
        try:
            return bytes(12) + bytes.fromhex(normalize_address(value)[2:])
        except Exception as exc:
            raise EncodeError(f"{name}: {exc}") from None
    if sol_type == "bool":
        if not isinstance(value, bool):
            raise EncodeError(f"{name}: expected bool, got {value!r}")
        return (1 if value else 0).to_bytes(32, "big")
    if sol_type == "bytes32":
        if not isinstance(value, (bytes, bytearray)) or len(value) != 32:
            raise EncodeError(f"{name}: expected 32 bytes")
        return bytes(value)
    bits = _uint_bits(sol_type)
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**bits:
        raise EncodeError(f"{name}: {value!r} is not a valid {sol_type}")
    return value.to_bytes(32, "big")


def decode_log(entry: LogEntry, registry: AbiRegistry) -> DecodedLog | UnknownEvent:
    """Decode one log; unmatched logs come back as :class:`UnknownEvent`."""
    if not entry.topics:
        return UnknownEvent(entry)
    abi = registry.lookup(entry.topics[0], entry.address)
    if abi is None:
        return UnknownEvent(entry)

    indexed, plain = abi.indexed, abi.non_indexed
    if len(entry.topics) != 1 + len(indexed) or len(entry.data) < 32 * len(plain):
        raise DecodeError(
            f"{abi.name}: expected {1 + len(indexed)} topics and {32 * len(plain)} data bytes "
            f"({abi.layout()}), got {len(entry.topics)} topics and {len(entry.data)} data bytes"
        )

    values = {}
    for p, topic in zip(indexed, entry.topics[1:]):
        values[p.name] = _decode_word(topic, p.type)
    for i, p in enumerate(plain):
        values[p.name] = _decode_word(entry.data[32 * i : 32 * i + 32], p.type)
    return DecodedLog(abi.name, tuple((p.name, values[p.name]) for p in abi.params), abi)


def encode_log(name: str, params, registry: AbiRegistry, *, address: str, log_index: int = 0) -> LogEntry:
    """Inverse of :func:`decode_log`. ``params`` is a mapping or ordered pairs."""
    abi = registry.by_name(name)
    values = dict(params)
    expected = [p.name for p in abi.params]
    if sorted(values) != sorted(expected):
        raise EncodeError(f"{abi.canonical_signature}: expected params {expected}, got {list(values)}")
    topics = [abi.signature_hash]
    topics += [_encode_word(values[p.name], p.type, p.name) for p in abi.indexed]
    data = b"".join(_encode_word(values[p.name], p.type, p.name) for p in abi.non_indexed)
    return LogEntry(address=address, topics=tuple(topics), data=data, log_index=log_index)
