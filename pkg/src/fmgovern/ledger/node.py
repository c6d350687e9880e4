"""The single ordering node: pending pool, sealing, replay, event feed.

All mutation funnels through one writer lock (submit -> seal -> apply).
Readers never lock: sealing applies commands to a private copy of the
state and swaps the sealed-state reference only after the block is
durable, so any concurrent reader observes a complete sealed state.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from .. import errors, state as state_mod
from ..canonical import ZERO_HASH, canonical_bytes
from ..commands import validate_command
from ..crypto import verify_signature
from ..merkle import MerkleTree, merkle_root
from . import chain, storage


def copy_state(state: dict) -> dict:
    # JSON round-trip: faster than deepcopy for plain trees and guarantees
    # the copy stays canonical-serializable
    return json.loads(json.dumps(state))


class Node:
    """Embedded ledger node over one data directory."""

    def __init__(self, datadir: storage.DataDir, blocks: list[dict],
                 sealed_state: dict, events: list[dict], tx_index: dict,
                 clock=None):
        self.datadir = datadir
        self.blocks = blocks
        self.sealed_state = sealed_state
        self.events = events
        self.tx_index = tx_index
        self.clock = clock or (lambda: int(time.time()))
        self.pending: list[dict] = []
        self._writer = threading.RLock()
        self._event_signal = threading.Condition()

    # -- lifecycle -----------------------------------------------------------

    @classmethod
    def init(cls, data_dir: str | Path, genesis_config: dict, clock=None) -> "Node":
        state_mod.validate_genesis_config(genesis_config)
        datadir = storage.DataDir(data_dir)
        datadir.acquire_lock()
        try:
            if datadir.log_path.exists():
                raise errors.BadConfig(f"{data_dir} already holds a chain")
            genesis = state_mod.genesis_state(genesis_config)
            header = chain.genesis_header(state_mod.state_root(genesis))
            block = {"header": header, "genesis": genesis_config}
            datadir.append_block(chain.encode_block(block))
            datadir.write_tip(0, chain.header_hash(header))
            node = cls(
                datadir=datadir,
                blocks=[block],
                sealed_state=genesis,
                events=[_block_event(1, block)],
                tx_index={},
                clock=clock,
            )
            node._write_snapshot()
            return node
        except BaseException:
            datadir.release()
            raise

    @classmethod
    def open(cls, data_dir: str | Path, clock=None) -> "Node":
        """Load a chain, failing closed on any inconsistency."""
        datadir = storage.DataDir(data_dir)
        datadir.acquire_lock()
        try:
            if not datadir.log_path.exists():
                raise errors.BadConfig(f"{data_dir} is not initialized")
            records = datadir.read_blocks()
            blocks = [chain.decode_block(r) for r in records]
            if not blocks or "genesis" not in blocks[0]:
                raise errors.CorruptLog("log does not start with a genesis block")
            tip = datadir.read_tip()
            if tip is None:
                raise errors.CorruptLog("missing tip anchor")
            blocks = cls._reconcile_tip(datadir, blocks, tip)
            sealed, events, tx_index = _replay_blocks(blocks, strict=True)
            node = cls(
                datadir=datadir,
                blocks=blocks,
                sealed_state=sealed,
                events=events,
                tx_index=tx_index,
                clock=clock,
            )
            node._write_snapshot()
            return node
        except BaseException:
            datadir.release()
            raise

    @staticmethod
    def _reconcile_tip(datadir, blocks, tip):
        stored_tip = len(blocks) - 1
        if tip["height"] == stored_tip:
            if chain.header_hash(blocks[-1]["header"]) != tip["header_hash"]:
                raise errors.CorruptLog("tip anchor does not match the last block")
            return blocks
        if tip["height"] == stored_tip - 1:
            # crash window: block appended, anchor not yet updated
            if chain.header_hash(blocks[-2]["header"]) != tip["header_hash"]:
                raise errors.CorruptLog("tip anchor matches no recent block")
            last = blocks[-1]["header"]
            if (last["height"] == stored_tip
                    and last["prev_hash"] == tip["header_hash"]):
                datadir.write_tip(stored_tip, chain.header_hash(last))
                return blocks
            raise errors.CorruptLog("unanchored trailing block does not chain")
        raise errors.CorruptLog(
            f"tip anchor at {tip['height']} but log holds {stored_tip + 1} blocks"
        )

    def close(self):
        self.datadir.release()

    # -- properties -----------------------------------------------------------

    @property
    def tip_header(self) -> dict:
        return self.blocks[-1]["header"]

    @property
    def height(self) -> int:
        return self.tip_header["height"]

    @property
    def genesis_config(self) -> dict:
        return self.blocks[0]["genesis"]

    # -- transaction admission -------------------------------------------------

    def next_nonce(self, account_id: str) -> int:
        with self._writer:
            account = self.sealed_state["identity"]["accounts"].get(account_id)
            if account is None:
                raise errors.UnknownAccount(f"no account {account_id}")
            pending = sum(1 for tx in self.pending if tx["sender"] == account_id)
            return account["nonce"] + pending

    def submit(self, tx: dict) -> dict:
        with self._writer:
            if not isinstance(tx, dict) or set(tx) != {
                "tx_id", "sender", "nonce", "command", "signature"
            }:
                raise errors.MalformedCommand("transaction must have exactly "
                                              "tx_id/sender/nonce/command/signature")
            validate_command(tx["command"])
            if not isinstance(tx["nonce"], int) or isinstance(tx["nonce"], bool) \
                    or tx["nonce"] < 0:
                raise errors.MalformedCommand("nonce must be a non-negative int")
            expected_id = chain.tx_id_for(tx["sender"], tx["nonce"], tx["command"])
            if tx["tx_id"] != expected_id:
                raise errors.MalformedCommand("tx_id does not hash the body")
            account = self.sealed_state["identity"]["accounts"].get(tx["sender"])
            if account is None:
                raise errors.UnknownSender(f"no account {tx['sender']}")
            payload = chain.tx_signing_bytes(tx["sender"], tx["nonce"], tx["command"])
            if not verify_signature(account["pubkey"], payload, tx["signature"]):
                raise errors.BadSignature("signature does not verify")
            if tx["nonce"] != self.next_nonce(tx["sender"]):
                raise errors.BadNonce(
                    f"expected nonce {self.next_nonce(tx['sender'])}, got {tx['nonce']}"
                )
            self.pending.append(tx)
            return {"tx_id": tx["tx_id"], "status": "pending"}

    # -- sealing ---------------------------------------------------------------

    def seal_block(self, max_batch: int | None = None) -> dict:
        with self._writer:
            if not self.pending:
                raise errors.EmptyPool("no pending transactions")
            count = len(self.pending) if max_batch is None else max(1, max_batch)
            batch = self.pending[:count]
            height = self.height + 1
            work = copy_state(self.sealed_state)
            entries = []
            tx_events = []
            for tx in batch:
                status, events = state_mod.apply_transaction(work, tx, height)
                entries.append({"tx": tx, "status": status})
                tx_events.extend(events)
            header = chain.make_header(
                height=height,
                prev_hash=chain.header_hash(self.tip_header),
                tx_merkle_root=merkle_root([e["tx"]["tx_id"] for e in entries]),
                state_root=state_mod.state_root(work),
                timestamp=int(self.clock()),
                tx_count=len(entries),
            )
            block = {"header": header, "txs": entries}
            self.datadir.append_block(chain.encode_block(block))
            self.datadir.write_tip(height, chain.header_hash(header))
            self.blocks.append(block)
            self.sealed_state = work
            for index, entry in enumerate(entries):
                self.tx_index[entry["tx"]["tx_id"]] = (height, index)
            for kind, payload in tx_events:
                self._push_event(kind, payload)
            self._push_event(*_block_event_parts(block))
            self.pending = self.pending[count:]
            self._write_snapshot()
            with self._event_signal:
                self._event_signal.notify_all()
            return dict(header)

    def _push_event(self, kind: str, payload: dict):
        self.events.append({"cursor": len(self.events) + 1, "kind": kind,
                            "payload": payload})

    def _write_snapshot(self):
        snapshot = {
            "height": self.height,
            "state_root": self.tip_header["state_root"],
            "registries": self.sealed_state,
        }
        self.datadir.write_snapshot(canonical_bytes(snapshot))

    # -- queries ----------------------------------------------------------------

    def get_block(self, height: int) -> dict:
        if not 0 <= height <= self.height:
            raise errors.RangeOutOfBounds(f"height {height} beyond tip {self.height}")
        return self.blocks[height]

    def replay(self, height: int) -> dict:
        """Reconstruct the state snapshot at `height` purely from blocks."""
        if not 0 <= height <= self.height:
            raise errors.RangeOutOfBounds(f"height {height} beyond tip {self.height}")
        state = state_mod.genesis_state(self.genesis_config)
        for block in self.blocks[1:height + 1]:
            for entry in block["txs"]:
                state_mod.apply_transaction(state, entry["tx"], block["header"]["height"])
        return {
            "height": height,
            "state_root": state_mod.state_root(state),
            "registries": state,
        }

    def merkle_proof(self, tx_id: str) -> dict:
        located = self.tx_index.get(tx_id)
        if located is None:
            raise errors.UnknownTx(f"tx {tx_id} not in any sealed block")
        height, index = located
        block = self.blocks[height]
        tree = MerkleTree([e["tx"]["tx_id"] for e in block["txs"]])
        return {
            "tx_id": tx_id,
            "height": height,
            "index": index,
            "root": block["header"]["tx_merkle_root"],
            "proof": tree.proof(index).to_json(),
        }

    def tx_status(self, tx_id: str) -> dict:
        located = self.tx_index.get(tx_id)
        if located is not None:
            height, index = located
            return {
                "tx_id": tx_id,
                "status": self.blocks[height]["txs"][index]["status"],
                "height": height,
                "index": index,
            }
        if any(tx["tx_id"] == tx_id for tx in self.pending):
            return {"tx_id": tx_id, "status": "pending"}
        raise errors.UnknownTx(f"unknown tx {tx_id}")

    def events_after(self, cursor: int) -> list[dict]:
        if cursor > len(self.events):
            raise errors.CursorAhead(
                f"cursor {cursor} ahead of latest {len(self.events)}"
            )
        return [dict(e) for e in self.events[cursor:]]

    def wait_events(self, cursor: int, timeout: float) -> list[dict]:
        """Block until events past `cursor` exist or the timeout elapses."""
        deadline = time.monotonic() + timeout
        while True:
            events = self.events_after(cursor)
            if events:
                return events
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return []
            with self._event_signal:
                self._event_signal.wait(min(remaining, 0.25))

    def verify_chain(self, from_height: int = 0, to_height: int | None = None) -> list[dict]:
        from .verify import verify_log

        return verify_log(self.datadir.root, from_height, to_height)


def _block_event_parts(block: dict) -> tuple[str, dict]:
    header = block["header"]
    return "block_sealed", {
        "height": header["height"],
        "header_hash": chain.header_hash(header),
        "tx_count": header["tx_count"],
    }


def _block_event(cursor: int, block: dict) -> dict:
    kind, payload = _block_event_parts(block)
    return {"cursor": cursor, "kind": kind, "payload": payload}


def _replay_blocks(blocks: list[dict], strict: bool):
    """Re-derive state, events, and the tx index from decoded blocks.

    With strict=True any divergence between stored and recomputed data
    (header links, merkle roots, state roots, statuses) raises CorruptLog.
    """
    config = blocks[0]["genesis"]
    try:
        state = state_mod.genesis_state(config)
    except (errors.DomainError, ValueError) as exc:
        raise errors.CorruptLog(f"invalid genesis config: {exc}") from None
    events: list[dict] = []
    tx_index: dict[str, tuple[int, int]] = {}

    def check(ok: bool, height: int, what: str):
        if strict and not ok:
            raise errors.CorruptLog(f"block {height}: {what}")

    genesis_header = blocks[0]["header"]
    check(genesis_header["height"] == 0, 0, "genesis height not 0")
    check(genesis_header["prev_hash"] == ZERO_HASH, 0, "genesis prev_hash not zero")
    check(genesis_header["state_root"] == state_mod.state_root(state),
          0, "genesis state root mismatch")
    events.append(_block_event(1, blocks[0]))

    for height, block in enumerate(blocks[1:], start=1):
        header = block["header"]
        check("txs" in block, height, "non-genesis block missing txs")
        check(header["height"] == height, height, "height out of sequence")
        check(header["prev_hash"] == chain.header_hash(blocks[height - 1]["header"]),
              height, "prev_hash broken")
        check(header["tx_count"] == len(block["txs"]), height, "tx_count mismatch")
        check(header["tx_merkle_root"]
              == merkle_root([e["tx"]["tx_id"] for e in block["txs"]]),
              height, "tx merkle root mismatch")
        for index, entry in enumerate(block["txs"]):
            tx = entry["tx"]
            status, tx_events = state_mod.apply_transaction(state, tx, height)
            check(status == entry["status"], height,
                  f"tx {index} status {entry['status']!r} != replayed {status!r}")
            tx_index[tx["tx_id"]] = (height, index)
            for kind, payload in tx_events:
                events.append({"cursor": len(events) + 1, "kind": kind,
                               "payload": payload})
        check(header["state_root"] == state_mod.state_root(state),
              height, "state root mismatch")
        events.append(_block_event(len(events) + 1, block))
    return state, events, tx_index
