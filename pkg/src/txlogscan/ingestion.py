"""Loading transaction receipts from fixture files or a JSON-RPC node.

Fixture files mirror the receipt wire shape so a live receipt can be captured
verbatim::

    {
      "txHash": "0x...", "blockNumber": 5483643, "status": 1, "gasUsed": 52569,
      "logs": [{"address": "0x...", "topics": ["0x..."], "data": "0x...", "logIndex": 0}],
      "callRecords": [{"functionName": "lendGM", "from": "0x...", "to": "0x...",
                       "value": "1000000000000000", "gasUsed": 2532963}]
    }

Numeric fields accept either JSON integers or ``0x`` hex strings (what nodes
return). ``callRecords`` is optional; unknown keys are ignored.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import FixtureError, NotFoundError, RpcError, TransportError, ValidationError

RPC_URL_ENV = "ETRACE_RPC_URL"

_HEX_RE = re.compile(r"^0x[0-9a-fA-F]*$")
UINT256_MAX = 2**256 - 1


def normalize_tx_hash(value: str) -> str:
    """Return ``value`` as a 66-character lowercase ``0x`` hex string."""
    return _normalize_hex(value, 32, "transaction hash")


def normalize_address(value: str) -> str:
    return _normalize_hex(value, 20, "address")


def _normalize_hex(value, nbytes, what):
    if not isinstance(value, str) or not _HEX_RE.match(value):
        raise ValidationError(f"{what} must be a 0x-prefixed hex string, got {value!r}")
    if len(value) != 2 + 2 * nbytes:
        raise ValidationError(
            f"{what} must be {nbytes} bytes ({2 + 2 * nbytes} chars), got {len(value)} chars: {value!r}"
        )
    return value.lower()


def _hex_to_bytes(value, what):
    if not isinstance(value, str) or not _HEX_RE.match(value):
        raise ValidationError(f"{what} must be a 0x-prefixed hex string, got {value!r}")
    if len(value) % 2:
        raise ValidationError(f"{what} has an odd number of hex digits")
    return bytes.fromhex(value[2:])


@dataclass(frozen=True)
class LogEntry:
    address: str
    topics: tuple[bytes, ...]
    data: bytes
    log_index: int

    def __post_init__(self):
        object.__setattr__(self, "address", normalize_address(self.address))
        object.__setattr__(self, "topics", tuple(self.topics))
        if len(self.topics) > 4:
            raise ValidationError(f"log {self.log_index}: at most 4 topics allowed, got {len(self.topics)}")
        for topic in self.topics:
            if len(topic) != 32:
                raise ValidationError(f"log {self.log_index}: topic must be 32 bytes, got {len(topic)}")
        if len(self.data) % 32:
            raise ValidationError(
                f"log {self.log_index}: data length must be a multiple of 32, got {len(self.data)}"
            )
        if self.log_index < 0:
            raise ValidationError("log_index must be non-negative")


@dataclass(frozen=True)
class CallRecord:
    """A top-level call with its gas usage; receipts don't carry these."""

    function_name: str
    from_address: str
    to_address: str
    value: int
    gas_used: int

    def __post_init__(self):
        object.__setattr__(self, "from_address", normalize_address(self.from_address))
        object.__setattr__(self, "to_address", normalize_address(self.to_address))
        if not 0 <= self.value <= UINT256_MAX:
            raise ValidationError(f"call value out of uint256 range: {self.value}")
        if self.gas_used < 0:
            raise ValidationError("gas_used must be non-negative")


@dataclass(frozen=True)
class TransactionReceipt:
    tx_hash: str
    block_number: int
    status: bool
    gas_used: int
    logs: tuple[LogEntry, ...] = ()
    call_records: tuple[CallRecord, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", normalize_tx_hash(self.tx_hash))
        object.__setattr__(self, "logs", tuple(sorted(self.logs, key=lambda log: log.log_index)))
        if self.call_records is not None:
            object.__setattr__(self, "call_records", tuple(self.call_records))
        indices = [log.log_index for log in self.logs]
        if len(set(indices)) != len(indices):
            raise ValidationError("duplicate logIndex in receipt")
        if self.block_number < 0 or self.gas_used < 0:
            raise ValidationError("block_number and gas_used must be non-negative")


# -- fixture (de)serialization ------------------------------------------------


def _field(doc, key, path):
    if not isinstance(doc, dict):
        raise FixtureError(path or "<root>", "expected an object")
    if key not in doc:
        raise FixtureError(f"{path}.{key}" if path else key, "missing")
    return doc[key]


def _as_int(value, path):
    if isinstance(value, bool):
        raise FixtureError(path, f"expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 16) if value.startswith("0x") else int(value)
        except ValueError:
            pass
    raise FixtureError(path, f"expected an integer, got {value!r}")


def _as_status(value, path):
    if value in (True, 1, "0x1", "1", "success"):
        return True
    if value in (False, 0, "0x0", "0", "failure"):
        return False
    raise FixtureError(path, f"expected a status flag, got {value!r}")


def _parse_log(doc, path):
    topics = _field(doc, "topics", path)
    if not isinstance(topics, list):
        raise FixtureError(f"{path}.topics", "expected a list")
    data = _field(doc, "data", path)
    try:
        return LogEntry(
            address=_field(doc, "address", path),
            topics=tuple(_hex_to_bytes(t, f"{path}.topics[{i}]") for i, t in enumerate(topics)),
            data=_hex_to_bytes(data, f"{path}.data"),
            log_index=_as_int(_field(doc, "logIndex", path), f"{path}.logIndex"),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _parse_call(doc, path):
    try:
        return CallRecord(
            function_name=str(_field(doc, "functionName", path)),
            from_address=_field(doc, "from", path),
            to_address=_field(doc, "to", path),
            value=_as_int(_field(doc, "value", path), f"{path}.value"),
            gas_used=_as_int(_field(doc, "gasUsed", path), f"{path}.gasUsed"),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def receipt_from_dict(doc: dict) -> TransactionReceipt:
    """Build a receipt from a fixture-shaped (or wire-shaped) mapping."""
    logs = _field(doc, "logs", "")
    if logs is None:
        logs = []
    if not isinstance(logs, list):
        raise FixtureError("logs", "expected a list")
    calls = doc.get("callRecords")
    if calls is not None and not isinstance(calls, list):
        raise FixtureError("callRecords", "expected a list")
    return TransactionReceipt(
        tx_hash=_field(doc, "txHash", ""),
        block_number=_as_int(_field(doc, "blockNumber", ""), "blockNumber"),
        status=_as_status(_field(doc, "status", ""), "status"),
        gas_used=_as_int(_field(doc, "gasUsed", ""), "gasUsed"),
        logs=tuple(_parse_log(log, f"logs[{i}]") for i, log in enumerate(logs)),
        call_records=None
        if calls is None
        else tuple(_parse_call(c, f"callRecords[{i}]") for i, c in enumerate(calls)),
    )


def load_fixture(path) -> TransactionReceipt:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FixtureError("<root>", f"invalid JSON: {exc}") from None
    return receipt_from_dict(doc)


def receipt_to_dict(receipt: TransactionReceipt) -> dict:
    doc = {
        "txHash": receipt.tx_hash,
        "blockNumber": receipt.block_number,
        "status": 1 if receipt.status else 0,
        "gasUsed": receipt.gas_used,
        "logs": [
            {
                "address": log.address,
                "topics": ["0x" + t.hex() for t in log.topics],
                "data": "0x" + log.data.hex(),
                "logIndex": log.log_index,
            }
            for log in receipt.logs
        ],
    }
    if receipt.call_records is not None:
        doc["callRecords"] = [
            {
                "functionName": c.function_name,
                "from": c.from_address,
                "to": c.to_address,
                "value": str(c.value),
                "gasUsed": c.gas_used,
            }
            for c in receipt.call_records
        ]
    return doc


def receipt_to_fixture(receipt: TransactionReceipt) -> bytes:
    return (json.dumps(receipt_to_dict(receipt), indent=2) + "\n").encode("utf-8")


# -- JSON-RPC ------------------------------------------------------------------


def fetch_receipt(endpoint: str | None, tx_hash: str, *, timeout: float = 30.0, session=None) -> TransactionReceipt:
    """Fetch a receipt with ``eth_getTransactionReceipt``.

    ``endpoint`` falls back to ``$ETRACE_RPC_URL``. The hash is validated
    before any network traffic.
    """
    tx_hash = normalize_tx_hash(tx_hash)
    endpoint = endpoint or os.environ.get(RPC_URL_ENV)
    if not endpoint:
        raise TransportError("<unset>", f"no RPC endpoint given and ${RPC_URL_ENV} is empty")

    payload = {"jsonrpc": "2.0", "id": 1, "method": "eth_getTransactionReceipt", "params": [tx_hash]}
    http = session or requests
    try:
        response = http.post(endpoint, json=payload, timeout=timeout)
        response.raise_for_status()
        body = response.json()
    except requests.RequestException as exc:
        raise TransportError(endpoint, str(exc)) from exc
    except ValueError as exc:
        raise TransportError(endpoint, f"invalid JSON response: {exc}") from exc

    if body.get("error"):
        raise RpcError(f"{endpoint}: {body['error']}")
    result = body.get("result")
    if result is None:
        raise NotFoundError(f"transaction {tx_hash} not found at {endpoint}")

    doc = dict(result)
    doc["txHash"] = doc.get("transactionHash", tx_hash)
    if doc.get("logs") is None:
        doc["logs"] = []
    if doc.get("status") is None and "root" in doc:
        # pre-Byzantium receipts carry a state root instead of a status flag
        doc["status"] = 1
    return receipt_from_dict(doc)
