"""Incentive registry: token balances, contribution accruals, compensation.

Single token type. Supply identity at every sealed height:

    sum over accounts (available + locked) == minted_total - destroyed_total

Penalties burn from locked funds first. Contribution accruals are written
by the other registries inside the same apply path (voting outcomes, data
anchors, tool invocations) and pay out when their epoch is settled.
"""

from __future__ import annotations

from .. import errors
from . import identity, validation

CONTRIBUTION_KINDS = ("VerifierMajorityVote", "DataAnchor", "ToolInvocation")

DEFAULT_REWARD_POLICY = {
    "VerifierMajorityVote": 5,
    "DataAnchor": 2,
    "ToolInvocation": 1,
}
DEFAULT_EPOCH_LENGTH = 100


def genesis_state(reward_policy: dict | None = None,
                  epoch_length: int = DEFAULT_EPOCH_LENGTH) -> dict:
    policy = dict(DEFAULT_REWARD_POLICY)
    if reward_policy:
        policy.update(reward_policy)
    for kind, amount in policy.items():
        if kind not in CONTRIBUTION_KINDS or not isinstance(amount, int) or amount < 0:
            raise ValueError(f"bad reward policy entry {kind}={amount!r}")
    if epoch_length < 1:
        raise ValueError("epoch_length must be >= 1")
    return {
        "balances": {},
        "minted_total": 0,
        "destroyed_total": 0,
        "reward_policy": policy,
        "epoch_length": epoch_length,
        "accruals": [],
        "settled_epochs": [],
        "claims": {},
        "next_claim_id": 1,
    }


def balance_of(state: dict, account_id: str) -> dict:
    entry = state["incentives"]["balances"].get(account_id)
    return dict(entry) if entry else {"available": 0, "locked": 0}


def _entry(state, account_id) -> dict:
    return state["incentives"]["balances"].setdefault(
        account_id, {"available": 0, "locked": 0}
    )


def epoch_of_height(height: int, epoch_length: int) -> int:
    if height < 1:
        raise ValueError("no epoch for genesis height")
    return (height - 1) // epoch_length


def check_conservation(state: dict) -> bool:
    inc = state["incentives"]
    circulating = sum(b["available"] + b["locked"] for b in inc["balances"].values())
    if circulating != inc["minted_total"] - inc["destroyed_total"]:
        return False
    return all(
        b["available"] >= 0 and b["locked"] >= 0 for b in inc["balances"].values()
    )


# --- command handlers -------------------------------------------------------

def _require_positive(amount):
    if not isinstance(amount, int) or amount <= 0:
        raise errors.ZeroAmount("amount must be positive")


def _require_account(state, account_id):
    if not identity.account_exists(state, account_id):
        raise errors.UnknownAccount(f"no account {account_id}")


def mint(state, ctx, p):
    _require_positive(p["amount"])
    _require_account(state, p["to"])
    _entry(state, p["to"])["available"] += p["amount"]
    state["incentives"]["minted_total"] += p["amount"]
    return []


def transfer(state, ctx, p):
    amount = p["amount"]
    _require_positive(amount)
    _require_account(state, p["to"])
    if balance_of(state, ctx.sender)["available"] < amount:
        raise errors.Insufficient(f"short of {amount} available")
    _entry(state, ctx.sender)["available"] -= amount
    _entry(state, p["to"])["available"] += amount
    return []


def lock(state, ctx, p):
    amount = p["amount"]
    _require_positive(amount)
    _require_account(state, p["account"])
    if balance_of(state, p["account"])["available"] < amount:
        raise errors.Insufficient(f"short of {amount} available")
    entry = _entry(state, p["account"])
    entry["available"] -= amount
    entry["locked"] += amount
    return []


def unlock(state, ctx, p):
    amount = p["amount"]
    _require_positive(amount)
    _require_account(state, p["account"])
    if balance_of(state, p["account"])["locked"] < amount:
        raise errors.Insufficient(f"short of {amount} locked")
    entry = _entry(state, p["account"])
    entry["locked"] -= amount
    entry["available"] += amount
    return []


def slash(state, ctx, p):
    amount = p["amount"]
    _require_positive(amount)
    _require_account(state, p["account"])
    held = balance_of(state, p["account"])
    if held["locked"] + held["available"] < amount:
        raise errors.Insufficient(f"short of {amount} held")
    entry = _entry(state, p["account"])
    from_locked = min(entry["locked"], amount)
    entry["locked"] -= from_locked
    entry["available"] -= amount - from_locked
    state["incentives"]["destroyed_total"] += amount
    return []


def accrue(state, ctx, kind: str, beneficiary: str, source: str):
    """Internal: record a pending contribution reward for the current epoch.

    Called by the source registries inside the same apply path, never via a
    transaction of its own.
    """
    if kind not in CONTRIBUTION_KINDS:
        raise ValueError(f"unknown contribution kind {kind!r}")
    if not identity.account_exists(state, beneficiary):
        raise errors.UnknownBeneficiary(f"no account {beneficiary}")
    inc = state["incentives"]
    inc["accruals"].append({
        "epoch": epoch_of_height(ctx.height, inc["epoch_length"]),
        "kind": kind,
        "beneficiary": beneficiary,
        "source": source,
        "settled": False,
    })


def settle_epoch(state, ctx, p):
    inc = state["incentives"]
    epoch = p["epoch"]
    if ctx.height <= (epoch + 1) * inc["epoch_length"]:
        raise errors.EpochOpen(f"epoch {epoch} not closed at height {ctx.height}")
    if epoch in inc["settled_epochs"]:
        raise errors.AlreadySettled(f"epoch {epoch} already settled")
    mints = []
    for entry in inc["accruals"]:
        if entry["epoch"] != epoch or entry["settled"]:
            continue
        amount = inc["reward_policy"][entry["kind"]]
        entry["settled"] = True
        if amount > 0:
            _entry(state, entry["beneficiary"])["available"] += amount
            inc["minted_total"] += amount
        mints.append({
            "beneficiary": entry["beneficiary"],
            "kind": entry["kind"],
            "amount": amount,
        })
    inc["settled_epochs"].append(epoch)
    inc["settled_epochs"].sort()
    return [("epoch_settled", {"epoch": epoch, "mints": mints})]


def register_claim(state, ctx, p):
    inc = state["incentives"]
    amount = p["amount"]
    _require_positive(amount)
    case = validation.get_case(state, p["case_id"])
    if case["status"] != "finalized" or case["outcome"]["verdict"] != "upheld":
        raise errors.CaseNotUpheld(f"case {p['case_id']} is not an upheld case")
    claim_id = inc["next_claim_id"]
    inc["next_claim_id"] = claim_id + 1
    inc["claims"][str(claim_id)] = {
        "claim_id": claim_id,
        "case_id": p["case_id"],
        "claimant": ctx.sender,
        "amount": amount,
        "status": "registered",
    }
    return [("claim_registered", {
        "claim_id": claim_id,
        "case_id": p["case_id"],
        "claimant": ctx.sender,
        "amount": amount,
    })]


def _get_claim(state, claim_id) -> dict:
    claim = state["incentives"]["claims"].get(str(claim_id))
    if claim is None:
        raise errors.UnknownClaim(f"no claim {claim_id}")
    return claim


def confirm_claim(state, ctx, p):
    claim = _get_claim(state, p["claim_id"])
    if claim["status"] != "registered":
        raise errors.BadStatus(f"claim is {claim['status']}, not registered")
    claim["status"] = "confirmed"
    return []


def pay_claim(state, ctx, p):
    claim = _get_claim(state, p["claim_id"])
    if claim["status"] != "confirmed":
        raise errors.BadStatus(f"claim is {claim['status']}, not confirmed")
    if balance_of(state, ctx.sender)["available"] < claim["amount"]:
        raise errors.Insufficient(f"payer short of {claim['amount']} available")
    _entry(state, ctx.sender)["available"] -= claim["amount"]
    _entry(state, claim["claimant"])["available"] += claim["amount"]
    claim["status"] = "paid"
    return []


# --- queries ----------------------------------------------------------------

def export_report(state: dict, height: int) -> dict:
    inc = state["incentives"]
    accounts = [
        {"id": aid, "available": b["available"], "locked": b["locked"]}
        for aid, b in sorted(inc["balances"].items())
    ]
    return {
        "height": height,
        "accounts": accounts,
        "minted_total": inc["minted_total"],
        "destroyed_total": inc["destroyed_total"],
    }
