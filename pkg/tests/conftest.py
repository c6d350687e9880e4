"""Shared fixtures: an embedded network wrapper with signing helpers."""

from __future__ import annotations

import pytest

from fmgovern.canonical import sha256_hex
from fmgovern.crypto import Keypair
from fmgovern.ledger.chain import make_tx
from fmgovern.ledger.node import Node
from fmgovern.state import default_genesis_config


class Net:
    """An embedded node plus keyring, with submit/seal conveniences."""

    def __init__(self, data_dir, clock=None, genesis_overrides=None):
        self.provider = Keypair.generate()
        config = default_genesis_config(self.provider.pubkey_hex)
        if genesis_overrides:
            config.update(genesis_overrides)
        self.node = Node.init(data_dir, config, clock=clock)
        self.keys = {self.provider.account_id: self.provider}

    @property
    def provider_id(self) -> str:
        return self.provider.account_id

    @property
    def state(self) -> dict:
        return self.node.sealed_state

    def close(self):
        self.node.close()

    # -- tx plumbing --------------------------------------------------------

    def submit(self, keypair: Keypair, command: dict) -> dict:
        tx = make_tx(keypair, self.node.next_nonce(keypair.account_id), command)
        self.node.submit(tx)
        return tx

    def seal(self, max_batch=None) -> dict:
        return self.node.seal_block(max_batch)

    def run(self, keypair: Keypair, command: dict) -> str:
        """Submit one command, seal, and return its on-chain status."""
        tx = self.submit(keypair, command)
        self.seal()
        return self.node.tx_status(tx["tx_id"])["status"]

    def run_ok(self, keypair: Keypair, command: dict) -> str:
        status = self.run(keypair, command)
        assert status == "ok", f"{command['type']} failed: {status}"
        return status

    # -- governance conveniences ---------------------------------------------

    def register(self, kind="human", roles=(), owner=None, metadata="",
                 registrar=None, seal=True) -> Keypair:
        kp = Keypair.generate()
        command = {
            "type": "register_account",
            "pubkey": kp.pubkey_hex,
            "kind": kind,
            "metadata": metadata or f"test {kind}",
        }
        if owner is not None:
            command["owner"] = owner
        self.submit(registrar or self.provider, command)
        for role in roles:
            self.submit(self.provider, {
                "type": "set_role", "target": kp.account_id,
                "role": role, "op": "grant",
            })
        if seal:
            self.seal()
        self.keys[kp.account_id] = kp
        return kp

    def grant(self, target_id: str, role: str):
        self.run_ok(self.provider, {
            "type": "set_role", "target": target_id, "role": role, "op": "grant",
        })

    def mint(self, to_id: str, amount: int):
        self.run_ok(self.provider, {"type": "mint", "to": to_id, "amount": amount})

    def balance(self, account_id: str) -> dict:
        from fmgovern.registries.incentives import balance_of

        return balance_of(self.state, account_id)


@pytest.fixture
def net(tmp_path):
    network = Net(tmp_path / "chain")
    yield network
    network.close()


def terms_hash_for(text: str) -> str:
    return sha256_hex(text.encode("utf-8"))
