"""Canonical serialization and hashing.

Two encodings are used across the ledger:

- Canonical JSON for command/transaction/state bodies: UTF-8, keys sorted
  lexicographically, no insignificant whitespace, integers only. Floats are
  rejected outright so two independent encoders can never disagree on a
  single byte. Binary values (hashes, keys, signatures) travel as lowercase
  hex strings.

- A fixed-width binary layout for block headers: big-endian 8-byte integers
  and raw 32-byte hashes concatenated in field order, so header hashes can
  be recomputed from any language without a JSON parser.
"""

from __future__ import annotations

import hashlib
import json

ZERO_HASH = "00" * 32


def canonical_bytes(value) -> bytes:
    """Serialize a JSON-able value to its unique canonical byte form."""
    _reject_non_canonical(value)
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def _reject_non_canonical(value, path: str = "$"):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return
    if isinstance(value, float):
        raise ValueError(f"float not allowed in canonical form at {path}")
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _reject_non_canonical(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise ValueError(f"non-string key at {path}: {key!r}")
            _reject_non_canonical(item, f"{path}.{key}")
        return
    raise ValueError(f"unsupported type {type(value).__name__} at {path}")


def canonical_loads(data: bytes):
    """Parse canonical JSON, rejecting bytes that are not in canonical form."""
    try:
        value = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    if canonical_bytes(value) != data:
        raise ValueError("bytes are not in canonical form")
    return value


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def hash_canonical(value) -> str:
    """Hex SHA-256 over the canonical JSON encoding of `value`."""
    return sha256_hex(canonical_bytes(value))


def is_hash_hex(value) -> bool:
    if not isinstance(value, str) or len(value) != 64:
        return False
    try:
        bytes.fromhex(value)
    except ValueError:
        return False
    return value == value.lower()


def u64_be(value: int) -> bytes:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ValueError(f"u64 field must be a non-negative int, got {value!r}")
    return value.to_bytes(8, "big")


def hash32(value: str) -> bytes:
    if not is_hash_hex(value):
        raise ValueError(f"expected 64-char lowercase hex hash, got {value!r}")
    return bytes.fromhex(value)
