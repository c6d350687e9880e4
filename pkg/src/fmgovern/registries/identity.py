"""Identity registry: accounts, roles, agreements, and consent records.

All mutating entry points run inside the ledger's single-writer apply path
and follow validate-then-mutate: any raise happens before the first write,
so a failed command never leaves partial state behind.
"""

from __future__ import annotations

from .. import errors
from ..crypto import account_id_for_pubkey, verify_signature
from .. import policy as policy_mod

ACCOUNT_KINDS = ("human", "organization", "agent")


def genesis_state(provider_pubkey: str, policy: dict) -> dict:
    policy_mod.validate_policy(policy)
    provider_id = account_id_for_pubkey(provider_pubkey)
    return {
        "accounts": {
            provider_id: {
                "pubkey": provider_pubkey,
                "kind": "organization",
                "roles": ["SystemProvider"],
                "attested": True,
                "owner": None,
                "metadata": "bootstrap system provider",
                "nonce": 0,
            }
        },
        "agreements": {},
        "consents": {},
        "next_agreement_id": 1,
        "next_consent_id": 1,
        "policy": policy,
        "policy_hash": policy_mod.policy_hash(policy),
    }


def get_account(state: dict, account_id: str) -> dict:
    account = state["identity"]["accounts"].get(account_id)
    if account is None:
        raise errors.UnknownAccount(f"no account {account_id}")
    return account


def account_exists(state: dict, account_id: str) -> bool:
    return account_id in state["identity"]["accounts"]


def check_access(state: dict, account_id: str, action: str) -> str:
    """Pure role-matrix lookup: "allow" or "deny" (default-deny)."""
    account = get_account(state, account_id)
    return policy_mod.evaluate(state["identity"]["policy"], account["roles"], action)


def require_access(state: dict, account_id: str, action: str):
    if check_access(state, account_id, action) != "allow":
        raise errors.NotAuthorized(f"{action} denied for {account_id}")


def has_role(state: dict, account_id: str, role: str) -> bool:
    return role in get_account(state, account_id)["roles"]


# --- command handlers -------------------------------------------------------

def register_account(state, ctx, p):
    ident = state["identity"]
    pubkey = p["pubkey"]
    kind = p["kind"]
    owner = p.get("owner")
    attested = p.get("attested", False)
    new_id = account_id_for_pubkey(pubkey)
    if any(a["pubkey"] == pubkey for a in ident["accounts"].values()):
        raise errors.DuplicateKey(f"pubkey already registered")
    if new_id in ident["accounts"]:
        raise errors.DuplicateKey(f"account {new_id} already exists")
    if kind == "agent":
        if owner is None:
            raise errors.MissingOwner("agent accounts need an owner")
        if owner not in ident["accounts"]:
            raise errors.UnknownOwner(f"owner {owner} not registered")
        if ident["accounts"][owner]["kind"] == "agent":
            raise errors.UnknownOwner("agent owner must be a non-agent account")
    elif owner is not None:
        raise errors.MalformedCommand("owner only allowed for agent accounts")
    if attested and not has_role(state, ctx.sender, "SystemProvider"):
        raise errors.NotAuthorized("only a SystemProvider can attest identities")
    roles = ["Agent"] if kind == "agent" else ["User"]
    ident["accounts"][new_id] = {
        "pubkey": pubkey,
        "kind": kind,
        "roles": roles,
        "attested": bool(attested),
        "owner": owner,
        "metadata": p.get("metadata", ""),
        "nonce": 0,
    }
    return []


def set_role(state, ctx, p):
    ident = state["identity"]
    target = p["target"]
    role = p["role"]
    if role == "Agent":
        raise errors.StructuralRole("Agent role is structural, not grantable")
    if target not in ident["accounts"]:
        raise errors.UnknownAccount(f"no account {target}")
    account = ident["accounts"][target]
    roles = set(account["roles"])
    if p["op"] == "grant":
        roles.add(role)
    else:
        roles.discard(role)
    account["roles"] = sorted(roles)
    return []


def deploy_agreement(state, ctx, p):
    ident = state["identity"]
    required = p["required_roles"]
    if not required:
        raise errors.EmptyRoles("agreement needs at least one required role")
    agreement_id = ident["next_agreement_id"]
    ident["next_agreement_id"] = agreement_id + 1
    ident["agreements"][str(agreement_id)] = {
        "id": agreement_id,
        "terms_hash": p["terms_hash"],
        "required_roles": sorted(set(required)),
        "signatures": {},
        "status": "draft",
    }
    return []


def sign_agreement(state, ctx, p):
    ident = state["identity"]
    agreement = ident["agreements"].get(str(p["agreement_id"]))
    if agreement is None:
        raise errors.UnknownAgreement(f"no agreement {p['agreement_id']}")
    signer = get_account(state, ctx.sender)
    signer_roles = set(signer["roles"])
    if not signer_roles & set(agreement["required_roles"]):
        raise errors.RoleNotRequired(
            f"{ctx.sender} holds none of the required roles"
        )
    terms = bytes.fromhex(agreement["terms_hash"])
    if not verify_signature(signer["pubkey"], terms, p["signature"]):
        raise errors.BadSignature("signature does not cover the terms hash")
    agreement["signatures"][ctx.sender] = p["signature"]
    _refresh_agreement_status(state, agreement)
    return []


def _refresh_agreement_status(state, agreement):
    # active iff every required role has a valid signature from a holder
    if agreement["status"] == "active":
        return  # activation is monotonic
    accounts = state["identity"]["accounts"]
    for role in agreement["required_roles"]:
        if not any(
            role in accounts[signer]["roles"]
            for signer in agreement["signatures"]
            if signer in accounts
        ):
            return
    agreement["status"] = "active"


def agreement_active(state: dict, agreement_id: int) -> bool:
    agreement = state["identity"]["agreements"].get(str(agreement_id))
    return agreement is not None and agreement["status"] == "active"


def record_consent(state, ctx, p):
    ident = state["identity"]
    consent_id = ident["next_consent_id"]
    ident["next_consent_id"] = consent_id + 1
    ident["consents"][str(consent_id)] = {
        "id": consent_id,
        "user": ctx.sender,
        "scope": p["scope"],
        "granted_at": p["granted_at"],
        "revoked_at": None,
    }
    return []


def revoke_consent(state, ctx, p):
    ident = state["identity"]
    consent = ident["consents"].get(str(p["consent_id"]))
    if consent is None:
        raise errors.UnknownConsent(f"no consent {p['consent_id']}")
    if consent["user"] != ctx.sender:
        raise errors.NotOwner("only the granting user can revoke")
    revoked_at = p["revoked_at"]
    if revoked_at < consent["granted_at"]:
        raise errors.MalformedCommand("revoked_at precedes granted_at")
    if consent["revoked_at"] is None:
        consent["revoked_at"] = revoked_at
    return []


def consent_active_at(state: dict, consent_id, t: int) -> bool:
    if consent_id is None:
        return False
    consent = state["identity"]["consents"].get(str(consent_id))
    if consent is None:
        return False
    if t < consent["granted_at"]:
        return False
    return consent["revoked_at"] is None or t < consent["revoked_at"]
