"""The aggregate registry state and the deterministic apply path.

State is a plain JSON tree (canonical-serializable by construction); the
state root is the SHA-256 of its canonical encoding. Genesis state is a
pure function of the genesis config, and every later state is a pure
function of the command sequence, which is what makes replay byte-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import commands, errors
from .canonical import hash_canonical
from .policy import build_reference_policy, validate_policy
from .registries import identity, incentives, marketplace, provenance, validation


@dataclass(frozen=True)
class ApplyContext:
    """What a command handler may know about its execution point."""

    height: int
    sender: str


def default_genesis_config(provider_pubkey: str) -> dict:
    return {
        "provider_pubkey": provider_pubkey,
        "policy": build_reference_policy(),
        "reward_policy": dict(incentives.DEFAULT_REWARD_POLICY),
        "epoch_length": incentives.DEFAULT_EPOCH_LENGTH,
    }


def validate_genesis_config(config: dict):
    required = {"provider_pubkey", "policy", "reward_policy", "epoch_length"}
    if not isinstance(config, dict) or set(config) != required:
        raise errors.BadConfig(f"genesis config must have fields {sorted(required)}")
    pubkey = config["provider_pubkey"]
    if not isinstance(pubkey, str) or len(pubkey) != 64:
        raise errors.BadConfig("provider_pubkey must be 32 bytes of hex")
    try:
        bytes.fromhex(pubkey)
    except ValueError:
        raise errors.BadConfig("provider_pubkey must be hex") from None
    try:
        validate_policy(config["policy"])
    except ValueError as exc:
        raise errors.BadConfig(f"bad policy: {exc}") from None
    if not isinstance(config["epoch_length"], int) or config["epoch_length"] < 1:
        raise errors.BadConfig("epoch_length must be a positive integer")
    rewards = config["reward_policy"]
    if not isinstance(rewards, dict):
        raise errors.BadConfig("reward_policy must be an object")
    for kind, amount in rewards.items():
        if kind not in incentives.CONTRIBUTION_KINDS:
            raise errors.BadConfig(f"unknown contribution kind {kind!r}")
        if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
            raise errors.BadConfig(f"bad reward amount for {kind}")


def genesis_state(config: dict) -> dict:
    validate_genesis_config(config)
    return {
        "identity": identity.genesis_state(config["provider_pubkey"], config["policy"]),
        "provenance": provenance.genesis_state(),
        "validation": validation.genesis_state(),
        "incentives": incentives.genesis_state(
            config["reward_policy"], config["epoch_length"]
        ),
        "market": marketplace.genesis_state(),
    }


def state_root(state: dict) -> str:
    return hash_canonical(state)


def apply_transaction(state: dict, tx: dict, height: int):
    """Execute one transaction in place.

    Returns (status, events): status is "ok" or a stable error code. The
    sender's nonce is consumed for every included transaction, success or
    not, so the on-chain nonce sequence stays gap-free. Handlers follow
    validate-then-mutate, so a failed command leaves no partial writes.
    """
    sender = state["identity"]["accounts"].get(tx["sender"])
    if sender is None:
        return "UnknownSender", []
    if tx["nonce"] != sender["nonce"]:
        return "BadNonce", []
    sender["nonce"] += 1
    command = tx["command"]
    ctx = ApplyContext(height=height, sender=tx["sender"])
    try:
        commands.validate_command(command)
        identity.require_access(state, tx["sender"], commands.action_for(command))
        events = commands.handler_for(command)(state, ctx, command)
    except errors.DomainError as exc:
        return exc.code, []
    return "ok", events
