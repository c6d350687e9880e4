"""Full-chain verification against the persisted log.

Everything a block file stores is recomputed from first principles and
compared: transaction ids from bodies, signatures against registered keys,
per-tx statuses and state roots by replay, Merkle roots from recomputed tx
ids, header links from recomputed headers, and the tip anchor against the
last stored header. Expected headers chain over *recomputed* predecessor
headers, so tampering block k's payload surfaces both at k (MerkleRoot or
StateRoot mismatch) and at k+1 (PrevHash mismatch).

Unlike the serve path, this reader is tolerant: framing or decode failures
become CorruptRecord violations in the report instead of exceptions, so a
mangled log still produces a non-empty report rather than a crash.
"""

from __future__ import annotations

from pathlib import Path

from .. import errors, state as state_mod
from ..canonical import ZERO_HASH
from ..crypto import verify_signature
from ..merkle import merkle_root
from . import chain, storage


def _violation(height, code: str, detail: str) -> dict:
    return {"height": height, "code": code, "detail": detail}


def verify_log(data_dir: str | Path, from_height: int = 0,
               to_height: int | None = None) -> list[dict]:
    """Verify the persisted chain; returns violations (empty iff untampered)."""
    datadir = storage.DataDir(data_dir)
    if not datadir.log_path.exists():
        raise errors.BadConfig(f"{data_dir} is not initialized")
    records, framing_defect = datadir.read_blocks_tolerant()

    violations: list[dict] = []
    blocks: list[dict] = []
    for index, record in enumerate(records):
        try:
            blocks.append(chain.decode_block(record))
        except errors.CorruptLog as exc:
            violations.append(_violation(index, "CorruptRecord", str(exc)))
            break
    corrupted = len(violations) > 0
    if framing_defect is not None and not corrupted:
        violations.append(_violation(len(records), "CorruptRecord", framing_defect))
        corrupted = True

    disk_tip = len(blocks) - 1
    if from_height < 0 or (to_height is not None and from_height > to_height):
        raise errors.RangeOutOfBounds(f"bad range [{from_height}, {to_height}]")
    if to_height is None:
        to_height = disk_tip
    if to_height > disk_tip:
        if not corrupted:
            raise errors.RangeOutOfBounds(
                f"range end {to_height} beyond stored tip {disk_tip}"
            )
        to_height = disk_tip
    if disk_tip < 0:
        return violations

    in_range = lambda h: from_height <= h <= to_height

    # genesis
    genesis = blocks[0]
    if "genesis" not in genesis:
        violations.append(_violation(0, "CorruptRecord", "block 0 is not a genesis block"))
        return violations
    try:
        state = state_mod.genesis_state(genesis["genesis"])
    except (errors.DomainError, ValueError) as exc:
        violations.append(_violation(0, "CorruptRecord", f"bad genesis config: {exc}"))
        return violations

    expected = chain.make_header(
        height=0, prev_hash=ZERO_HASH, tx_merkle_root=ZERO_HASH,
        state_root=state_mod.state_root(state),
        timestamp=genesis["header"]["timestamp"], tx_count=0,
    )
    if in_range(0):
        violations.extend(_compare_headers(0, genesis["header"], expected))
    prev_expected_hash = chain.header_hash(expected)

    for height in range(1, to_height + 1):
        block = blocks[height]
        header = block["header"]
        if "txs" not in block:
            violations.append(_violation(height, "CorruptRecord",
                                         "unexpected extra genesis block"))
            return violations
        recomputed_ids = []
        for index, entry in enumerate(block["txs"]):
            tx = entry["tx"]
            computed_id = chain.tx_id_for(tx["sender"], tx["nonce"], tx["command"])
            recomputed_ids.append(computed_id)
            if tx["tx_id"] != computed_id and in_range(height):
                violations.append(_violation(
                    height, "TxIdMismatch",
                    f"tx {index}: stored id {tx['tx_id'][:16]} does not hash the body",
                ))
            sender = state["identity"]["accounts"].get(tx["sender"])
            if sender is not None:
                payload = chain.tx_signing_bytes(tx["sender"], tx["nonce"], tx["command"])
                if not verify_signature(sender["pubkey"], payload, tx["signature"]) \
                        and in_range(height):
                    violations.append(_violation(
                        height, "SignatureInvalid", f"tx {index}: signature invalid",
                    ))
            status, _ = state_mod.apply_transaction(state, tx, height)
            if status != entry["status"] and in_range(height):
                violations.append(_violation(
                    height, "StatusMismatch",
                    f"tx {index}: stored status {entry['status']!r}, replay says {status!r}",
                ))
        expected = chain.make_header(
            height=height,
            prev_hash=prev_expected_hash,
            tx_merkle_root=merkle_root(recomputed_ids),
            state_root=state_mod.state_root(state),
            timestamp=header["timestamp"],
            tx_count=len(block["txs"]),
        )
        if in_range(height):
            violations.extend(_compare_headers(height, header, expected))
        prev_expected_hash = chain.header_hash(expected)

    # tip anchor pins the final stored header (covers its timestamp too)
    if to_height == disk_tip and not corrupted:
        try:
            tip = datadir.read_tip()
        except errors.CorruptLog as exc:
            tip = None
            violations.append(_violation(disk_tip, "TipMismatch", str(exc)))
        if tip is not None:
            stored_hash = chain.header_hash(blocks[disk_tip]["header"])
            if tip.get("height") != disk_tip or tip.get("header_hash") != stored_hash:
                violations.append(_violation(
                    disk_tip, "TipMismatch",
                    f"anchor {tip} does not pin the stored tip header",
                ))
    return violations


_HEADER_CODES = {
    "height": "HeightMismatch",
    "prev_hash": "PrevHashMismatch",
    "tx_merkle_root": "MerkleRootMismatch",
    "state_root": "StateRootMismatch",
    "tx_count": "TxCountMismatch",
}


def _compare_headers(height: int, stored: dict, expected: dict) -> list[dict]:
    found = []
    for field, code in _HEADER_CODES.items():
        if stored[field] != expected[field]:
            found.append(_violation(
                height, code,
                f"stored {field} {stored[field]!r} != expected {expected[field]!r}",
            ))
    return found
