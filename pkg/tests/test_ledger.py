"""Ledger core: admission, sealing, chaining, proofs, replay, persistence."""

import hashlib
import json
import struct

import pytest

from fmgovern import errors
from fmgovern.canonical import ZERO_HASH, canonical_bytes
from fmgovern.crypto import Keypair
from fmgovern.ledger.chain import header_hash, make_tx, tx_id_for
from fmgovern.ledger.node import Node
from fmgovern.merkle import MerkleProof, verify_proof
from fmgovern.state import default_genesis_config

from .conftest import Net


def _mint_cmd(net, amount=1):
    return {"type": "mint", "to": net.provider_id, "amount": amount}


def test_genesis_shape(net):
    genesis = net.node.get_block(0)
    assert genesis["header"]["height"] == 0
    assert genesis["header"]["prev_hash"] == ZERO_HASH
    assert genesis["header"]["tx_count"] == 0
    assert net.provider_id in net.state["identity"]["accounts"]
    assert net.state["identity"]["accounts"][net.provider_id]["roles"] == [
        "SystemProvider",
    ]


def test_tx_id_matches_external_recomputation(net):
    command = _mint_cmd(net, 7)
    tx = net.submit(net.provider, command)
    # independent recomputation over the documented canonical encoding
    body = json.dumps(
        {"command": command, "nonce": 0, "sender": net.provider_id},
        sort_keys=True, separators=(",", ":"), ensure_ascii=False,
    ).encode("utf-8")
    assert tx["tx_id"] == hashlib.sha256(body).hexdigest()


def test_zeroed_signature_rejected(net):
    tx = make_tx(net.provider, 0, _mint_cmd(net))
    tx["signature"] = "00" * 64
    with pytest.raises(errors.BadSignature):
        net.node.submit(tx)


def test_replay_submission_rejected(net):
    tx = make_tx(net.provider, 0, _mint_cmd(net))
    net.node.submit(tx)
    with pytest.raises(errors.BadNonce):
        net.node.submit(dict(tx))


def test_nonce_gap_rejected(net):
    tx = make_tx(net.provider, 5, _mint_cmd(net))
    with pytest.raises(errors.BadNonce):
        net.node.submit(tx)


def test_unknown_sender_rejected(net):
    stranger = Keypair.generate()
    tx = make_tx(stranger, 0, {"type": "mint", "to": stranger.account_id, "amount": 1})
    with pytest.raises(errors.UnknownSender):
        net.node.submit(tx)


def test_malformed_command_rejected(net):
    for bad in (
        {"type": "no_such_op"},
        {"type": "mint", "to": net.provider_id},  # missing amount
        {"type": "mint", "to": net.provider_id, "amount": 1, "extra": True},
        {"type": "mint", "to": "zz", "amount": 1},
    ):
        tx = make_tx(net.provider, 0, bad)
        with pytest.raises(errors.MalformedCommand):
            net.node.submit(tx)


def test_tampered_tx_id_rejected(net):
    tx = make_tx(net.provider, 0, _mint_cmd(net))
    tx["tx_id"] = "11" * 32
    with pytest.raises(errors.MalformedCommand):
        net.node.submit(tx)


def test_seal_empty_pool(net):
    with pytest.raises(errors.EmptyPool):
        net.seal()


def test_first_seal_chains_to_genesis(net):
    net.submit(net.provider, _mint_cmd(net))
    header = net.seal()
    assert header["height"] == 1
    genesis_header = net.node.get_block(0)["header"]
    # prev_hash = SHA-256 over the documented fixed-width header layout
    packed = (
        struct.pack(">Q", genesis_header["height"])
        + bytes.fromhex(genesis_header["prev_hash"])
        + bytes.fromhex(genesis_header["tx_merkle_root"])
        + bytes.fromhex(genesis_header["state_root"])
        + struct.pack(">Q", genesis_header["timestamp"])
        + struct.pack(">Q", genesis_header["tx_count"])
    )
    assert header["prev_hash"] == hashlib.sha256(packed).hexdigest()


def test_three_tx_block_merkle_root_hand_computed(net):
    txs = [net.submit(net.provider, _mint_cmd(net, i + 1)) for i in range(3)]
    header = net.seal()
    a, b, c = (bytes.fromhex(t["tx_id"]) for t in txs)
    H = lambda x: hashlib.sha256(x).digest()
    assert header["tx_merkle_root"] == H(H(a + b) + H(c + c)).hex()


def test_failed_tx_included_with_failure_status(net):
    user = net.register()
    ok_tx = net.submit(net.provider, _mint_cmd(net, 5))
    bad_tx = net.submit(user, {"type": "mint", "to": user.account_id, "amount": 5})
    net.seal()
    assert net.node.tx_status(ok_tx["tx_id"])["status"] == "ok"
    status = net.node.tx_status(bad_tx["tx_id"])
    assert status["status"] == "NotAuthorized"
    height, index = status["height"], status["index"]
    assert net.node.get_block(height)["txs"][index]["tx"]["tx_id"] == bad_tx["tx_id"]


def test_max_batch_leaves_rest_pending(net):
    for i in range(5):
        net.submit(net.provider, _mint_cmd(net, i + 1))
    header = net.seal(max_batch=2)
    assert header["tx_count"] == 2
    header = net.seal()
    assert header["tx_count"] == 3


def test_nonce_linearity_across_blocks(net):
    for i in range(7):
        net.submit(net.provider, _mint_cmd(net, i + 1))
        if i % 2 == 0:
            net.seal()
    if net.node.pending:
        net.seal()
    nonces = [
        entry["tx"]["nonce"]
        for block in net.node.blocks[1:]
        for entry in block["txs"]
        if entry["tx"]["sender"] == net.provider_id
    ]
    assert nonces == list(range(7))


def test_single_tx_block_proof_is_empty(net):
    tx = net.submit(net.provider, _mint_cmd(net))
    header = net.seal()
    proof = net.node.merkle_proof(tx["tx_id"])
    assert proof["proof"]["path"] == []
    assert proof["root"] == tx["tx_id"] == header["tx_merkle_root"]
    assert verify_proof(tx["tx_id"], MerkleProof.from_json(proof["proof"]), proof["root"])


def test_three_tx_proof_path_hand_checked(net):
    txs = [net.submit(net.provider, _mint_cmd(net, i + 1)) for i in range(3)]
    net.seal()
    a, b, c = (bytes.fromhex(t["tx_id"]) for t in txs)
    H = lambda x: hashlib.sha256(x).digest()
    proof = net.node.merkle_proof(txs[0]["tx_id"])
    assert proof["proof"]["path"] == [
        {"sibling": b.hex(), "side": "right"},
        {"sibling": H(c + c).hex(), "side": "right"},
    ]
    for tx in txs:
        p = net.node.merkle_proof(tx["tx_id"])
        assert verify_proof(tx["tx_id"], MerkleProof.from_json(p["proof"]), p["root"])


def test_unknown_tx_proof(net):
    with pytest.raises(errors.UnknownTx):
        net.node.merkle_proof("ab" * 32)


def test_inclusion_monotonicity(net):
    tx = net.submit(net.provider, _mint_cmd(net))
    net.seal()
    first = net.node.tx_status(tx["tx_id"])
    for i in range(3):
        net.submit(net.provider, _mint_cmd(net, i + 2))
        net.seal()
    later = net.node.tx_status(tx["tx_id"])
    assert (first["height"], first["index"]) == (later["height"], later["index"])


def test_replay_zero_is_genesis_state(net):
    snapshot = net.node.replay(0)
    assert snapshot["height"] == 0
    assert snapshot["state_root"] == net.node.get_block(0)["header"]["state_root"]
    accounts = snapshot["registries"]["identity"]["accounts"]
    assert set(accounts) == {net.provider_id}


def test_replay_every_height_matches_headers(net):
    user = net.register()
    net.mint(net.provider_id, 100)
    net.run_ok(net.provider, {"type": "transfer", "to": user.account_id, "amount": 30})
    net.run_ok(net.provider, {"type": "lock", "account": user.account_id,
                              "amount": 10, "reason": "test"})
    for h in range(net.node.height + 1):
        snap = net.node.replay(h)
        assert snap["state_root"] == net.node.get_block(h)["header"]["state_root"]
    tip = net.node.replay(net.node.height)
    assert canonical_bytes(tip["registries"]) == canonical_bytes(net.state)


def test_replay_out_of_range(net):
    with pytest.raises(errors.RangeOutOfBounds):
        net.node.replay(1)


def test_two_independent_replays_byte_identical(net):
    net.register()
    net.mint(net.provider_id, 50)
    a = canonical_bytes(net.node.replay(net.node.height)["registries"])
    b = canonical_bytes(net.node.replay(net.node.height)["registries"])
    assert a == b


def test_determinism_across_process_restart(tmp_path):
    net = Net(tmp_path / "chain")
    try:
        net.register()
        net.mint(net.provider_id, 9)
        tip_root = net.node.tip_header["state_root"]
        height = net.node.height
    finally:
        net.close()
    reopened = Node.open(tmp_path / "chain")
    try:
        assert reopened.height == height
        assert reopened.tip_header["state_root"] == tip_root
        assert reopened.replay(height)["state_root"] == tip_root
    finally:
        reopened.close()


def test_open_uninitialized_dir(tmp_path):
    with pytest.raises(errors.BadConfig):
        Node.open(tmp_path / "nothing")


def test_double_init_refused(tmp_path):
    provider = Keypair.generate()
    node = Node.init(tmp_path / "c", default_genesis_config(provider.pubkey_hex))
    node.close()
    with pytest.raises(errors.BadConfig):
        Node.init(tmp_path / "c", default_genesis_config(provider.pubkey_hex))


def test_data_dir_locked(tmp_path):
    provider = Keypair.generate()
    node = Node.init(tmp_path / "c", default_genesis_config(provider.pubkey_hex))
    try:
        with pytest.raises(errors.DataDirLocked):
            Node.open(tmp_path / "c")
    finally:
        node.close()


def test_pending_pool_lost_on_restart_documented(tmp_path):
    net = Net(tmp_path / "chain")
    try:
        net.submit(net.provider, {"type": "mint", "to": net.provider_id, "amount": 1})
    finally:
        net.close()
    reopened = Node.open(tmp_path / "chain")
    try:
        assert reopened.height == 0
        assert reopened.pending == []
    finally:
        reopened.close()
