"""Roles, action kinds, and the role-based access policy matrix.

The matrix is default-deny: an account may perform an action iff at least
one of its roles has an explicit allow entry. Explicit deny entries are
legal in the file (they document intent) but carry no extra force; absence
already denies. The matrix ships as a canonical JSON artifact versioned by
its hash and is embedded into genesis, so access decisions replay exactly.
"""

from __future__ import annotations

from .canonical import canonical_bytes, hash_canonical

ROLES = (
    "SystemProvider",
    "Verifier",
    "Auditor",
    "ToolProvider",
    "DataContributor",
    "User",
    "Agent",
)

# Mutating actions, one per registry command, plus the harness gate RunTask
# and the read actions the service enforces.
ACTIONS = (
    "RegisterAccount",
    "SetRole",
    "DeployAgreement",
    "SignAgreement",
    "RecordConsent",
    "RevokeConsent",
    "AnchorSnapshot",
    "RecordStep",
    "FlagResponse",
    "OpenBallot",
    "CastVote",
    "FinalizeCase",
    "Adjudicate",
    "Mint",
    "Transfer",
    "Lock",
    "Unlock",
    "Slash",
    "SettleEpoch",
    "RegisterClaim",
    "ConfirmClaim",
    "PayClaim",
    "ListOffering",
    "UpdateMetrics",
    "DeactivateOffering",
    "RunTask",
    "ReadFlaggedCase",
    "ReadTrainingAnchor",
    "ReadTrace",
    "ReadAudit",
)

_ALLOW = {
    "SystemProvider": [
        "RegisterAccount", "SetRole", "DeployAgreement", "SignAgreement",
        "AnchorSnapshot", "RecordStep", "FlagResponse", "OpenBallot",
        "CastVote", "FinalizeCase", "Adjudicate",
        "Mint", "Transfer", "Lock", "Unlock", "Slash", "SettleEpoch",
        "ConfirmClaim", "PayClaim",
        "ListOffering", "UpdateMetrics", "DeactivateOffering",
        "RunTask",
        "ReadFlaggedCase", "ReadTrainingAnchor", "ReadTrace", "ReadAudit",
    ],
    "Verifier": [
        "CastVote", "Transfer", "SignAgreement",
        "ReadFlaggedCase", "ReadTrace",
    ],
    "Auditor": [
        "ConfirmClaim", "Transfer", "SignAgreement", "RegisterClaim",
        "ReadFlaggedCase", "ReadTrainingAnchor", "ReadTrace", "ReadAudit",
    ],
    "ToolProvider": [
        "RegisterAccount", "Transfer", "SignAgreement", "RegisterClaim",
        "PayClaim", "ListOffering", "UpdateMetrics", "DeactivateOffering",
    ],
    "DataContributor": [
        "AnchorSnapshot", "Transfer", "SignAgreement", "RegisterClaim",
    ],
    "User": [
        "RecordConsent", "RevokeConsent", "SignAgreement", "Transfer",
        "RunTask", "RegisterClaim",
    ],
    "Agent": [
        "RecordStep", "FlagResponse", "Transfer",
    ],
}

# Documented explicit denials (already implied by default-deny).
_EXPLICIT_DENY = [
    ("User", "ReadTrainingAnchor"),
    ("User", "ReadFlaggedCase"),
]


def build_reference_policy() -> dict:
    rules = []
    for role in ROLES:
        for action in _ALLOW.get(role, []):
            rules.append({"role": role, "action": action, "effect": "allow"})
    for role, action in _EXPLICIT_DENY:
        rules.append({"role": role, "action": action, "effect": "deny"})
    rules.sort(key=lambda r: (r["role"], r["action"]))
    return {"version": 1, "default": "deny", "rules": rules}


def validate_policy(policy: dict):
    if policy.get("default") != "deny":
        raise ValueError("policy default must be 'deny'")
    if not isinstance(policy.get("version"), int):
        raise ValueError("policy version must be an int")
    seen = set()
    for rule in policy.get("rules", []):
        if set(rule) != {"role", "action", "effect"}:
            raise ValueError(f"malformed rule: {rule!r}")
        if rule["role"] not in ROLES:
            raise ValueError(f"unknown role {rule['role']!r}")
        if rule["action"] not in ACTIONS:
            raise ValueError(f"unknown action {rule['action']!r}")
        if rule["effect"] not in ("allow", "deny"):
            raise ValueError(f"unknown effect {rule['effect']!r}")
        key = (rule["role"], rule["action"])
        if key in seen:
            raise ValueError(f"duplicate rule for {key}")
        seen.add(key)


def policy_hash(policy: dict) -> str:
    return hash_canonical(policy)


def policy_bytes(policy: dict) -> bytes:
    return canonical_bytes(policy)


def allowed_actions(policy: dict, role: str) -> set[str]:
    return {
        r["action"]
        for r in policy["rules"]
        if r["role"] == role and r["effect"] == "allow"
    }


def evaluate(policy: dict, roles, action: str) -> str:
    """Resolve (roles, action) to "allow" or "deny" under default-deny."""
    held = set(roles)
    for rule in policy["rules"]:
        if rule["effect"] == "allow" and rule["action"] == action and rule["role"] in held:
            return "allow"
    return "deny"
