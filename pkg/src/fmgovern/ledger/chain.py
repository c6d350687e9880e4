"""Transactions, block headers, and block encoding.

A transaction's identity is the SHA-256 of the canonical JSON of its body
{command, nonce, sender}; the Ed25519 signature covers those same bytes.
Headers hash as a fixed-width binary layout (8-byte big-endian integers,
raw 32-byte digests) in declaration order, so the chain link is
reproducible without JSON. Blocks serialize as canonical JSON records;
block 0 carries the genesis config instead of transactions.
"""

from __future__ import annotations

from .. import errors
from ..canonical import (
    ZERO_HASH,
    canonical_bytes,
    canonical_loads,
    hash32,
    is_hash_hex,
    sha256_hex,
    u64_be,
)
from ..crypto import Keypair

HEADER_FIELDS = ("height", "prev_hash", "tx_merkle_root", "state_root",
                 "timestamp", "tx_count")


def tx_body(sender: str, nonce: int, command: dict) -> dict:
    return {"command": command, "nonce": nonce, "sender": sender}


def tx_signing_bytes(sender: str, nonce: int, command: dict) -> bytes:
    return canonical_bytes(tx_body(sender, nonce, command))


def tx_id_for(sender: str, nonce: int, command: dict) -> str:
    return sha256_hex(tx_signing_bytes(sender, nonce, command))


def make_tx(keypair: Keypair, nonce: int, command: dict) -> dict:
    payload = tx_signing_bytes(keypair.account_id, nonce, command)
    return {
        "tx_id": sha256_hex(payload),
        "sender": keypair.account_id,
        "nonce": nonce,
        "command": command,
        "signature": keypair.sign(payload),
    }


def header_bytes(header: dict) -> bytes:
    return b"".join((
        u64_be(header["height"]),
        hash32(header["prev_hash"]),
        hash32(header["tx_merkle_root"]),
        hash32(header["state_root"]),
        u64_be(header["timestamp"]),
        u64_be(header["tx_count"]),
    ))


def header_hash(header: dict) -> str:
    return sha256_hex(header_bytes(header))


def make_header(height: int, prev_hash: str, tx_merkle_root: str,
                state_root: str, timestamp: int, tx_count: int) -> dict:
    return {
        "height": height,
        "prev_hash": prev_hash,
        "tx_merkle_root": tx_merkle_root,
        "state_root": state_root,
        "timestamp": timestamp,
        "tx_count": tx_count,
    }


def genesis_header(state_root: str) -> dict:
    return make_header(0, ZERO_HASH, ZERO_HASH, state_root, 0, 0)


def encode_block(block: dict) -> bytes:
    return canonical_bytes(block)


def decode_block(data: bytes) -> dict:
    """Strict decode: canonical bytes, exact field sets, well-typed values."""
    try:
        block = canonical_loads(data)
    except ValueError as exc:
        raise errors.CorruptLog(f"undecodable block record: {exc}") from None
    _check_block_shape(block)
    return block


def _check_block_shape(block):
    if not isinstance(block, dict):
        raise errors.CorruptLog("block record is not an object")
    if set(block) == {"header", "genesis"}:
        body_ok = isinstance(block["genesis"], dict)
    elif set(block) == {"header", "txs"}:
        body_ok = isinstance(block["txs"], list) and all(
            _tx_entry_ok(entry) for entry in block["txs"]
        )
    else:
        raise errors.CorruptLog(f"block record has fields {sorted(block)}")
    if not body_ok:
        raise errors.CorruptLog("malformed block body")
    header = block["header"]
    if not isinstance(header, dict) or set(header) != set(HEADER_FIELDS):
        raise errors.CorruptLog("malformed block header")
    for field in ("height", "timestamp", "tx_count"):
        v = header[field]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise errors.CorruptLog(f"bad header field {field}")
    for field in ("prev_hash", "tx_merkle_root", "state_root"):
        if not is_hash_hex(header[field]):
            raise errors.CorruptLog(f"bad header field {field}")


def _tx_entry_ok(entry) -> bool:
    if not isinstance(entry, dict) or set(entry) != {"tx", "status"}:
        return False
    if not isinstance(entry["status"], str):
        return False
    tx = entry["tx"]
    if not isinstance(tx, dict) or set(tx) != {
        "tx_id", "sender", "nonce", "command", "signature"
    }:
        return False
    if not (is_hash_hex(tx["tx_id"]) and is_hash_hex(tx["sender"])):
        return False
    if not isinstance(tx["nonce"], int) or isinstance(tx["nonce"], bool) or tx["nonce"] < 0:
        return False
    sig = tx["signature"]
    if not isinstance(sig, str) or len(sig) != 128 or sig != sig.lower():
        return False
    try:
        bytes.fromhex(sig)
    except ValueError:
        return False
    return isinstance(tx["command"], dict)
