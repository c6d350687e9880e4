"""Registry command set: the tagged union every transaction carries.

A command is a JSON object {"type": <tag>, ...fields}. Shapes are checked
strictly at submission (unknown tag, missing/extra/ill-typed fields all
raise MalformedCommand) so that nothing structurally unsound ever reaches
a block; domain rules are enforced later in the apply path.
"""

from __future__ import annotations

from . import errors
from .canonical import is_hash_hex
from .policy import ROLES
from .registries import identity as _identity
from .registries import incentives as _incentives
from .registries import marketplace as _marketplace
from .registries import provenance as _provenance
from .registries import validation as _validation

MAX_TEXT = 512


# --- field validators ---------------------------------------------------------

def _uint(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _pos_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def _text(v):
    return isinstance(v, str) and len(v) <= MAX_TEXT


def _nonempty_text(v):
    return isinstance(v, str) and 0 < len(v) <= MAX_TEXT


def _hash(v):
    return is_hash_hex(v)


def _pubkey(v):
    return isinstance(v, str) and len(v) == 64 and is_hash_hex(v)


def _signature(v):
    if not isinstance(v, str) or len(v) != 128:
        return False
    try:
        bytes.fromhex(v)
    except ValueError:
        return False
    return v == v.lower()


def _bool(v):
    return isinstance(v, bool)


def _enum(*values):
    def check(v):
        return v in values
    return check


def _list_of(item_check):
    def check(v):
        return isinstance(v, list) and all(item_check(x) for x in v)
    return check


def _optional(check):
    def wrapped(v):
        return v is None or check(v)
    wrapped.optional = True
    return wrapped


_STEP_COMMON = {"actor": _hash, "timestamp": _uint}

_STEP_SCHEMAS = {
    "prompt_received": {"prompt_hash": _hash, "consent_id": _optional(_pos_int)},
    "guardrail_check": {
        "stage": _enum("input", "output"),
        "rule_ids": _list_of(_nonempty_text),
        "passed": _bool,
    },
    "fm_call": {
        "connector_role": _enum(*_provenance.CONNECTOR_ROLES),
        "input_hash": _hash,
        "output_hash": _hash,
    },
    "tool_invocation": {"tool_account": _hash, "args_hash": _hash, "result_hash": _hash},
    "retrieval": {
        "source_id": _nonempty_text,
        "anchor_id": _pos_int,
        "item_hashes": _list_of(_hash),
        "proofs_ok": _bool,
    },
    "response_emitted": {"response_hash": _hash},
}


def _step(v):
    if not isinstance(v, dict) or v.get("kind") not in _STEP_SCHEMAS:
        return False
    schema = dict(_STEP_SCHEMAS[v["kind"]], **_STEP_COMMON)
    fields = {k: val for k, val in v.items() if k != "kind"}
    if set(fields) - set(schema):
        return False
    for name, check in schema.items():
        if name not in fields:
            if getattr(check, "optional", False):
                continue
            return False
        if not check(fields[name]):
            return False
    return True


def _metrics(v):
    return (
        isinstance(v, dict)
        and set(v) == set(_marketplace.METRIC_FIELDS)
        and all(_pos_int(v[f]) for f in _marketplace.METRIC_FIELDS)
    )


# --- the command table ---------------------------------------------------------
# tag -> (ActionKind for the policy gate, field schema, handler)

COMMANDS = {
    "register_account": (
        "RegisterAccount",
        {
            "pubkey": _pubkey,
            "kind": _enum(*_identity.ACCOUNT_KINDS),
            "metadata": _text,
            "owner": _optional(_hash),
            "attested": _optional(_bool),
        },
        _identity.register_account,
    ),
    "set_role": (
        "SetRole",
        {"target": _hash, "role": _enum(*ROLES), "op": _enum("grant", "revoke")},
        _identity.set_role,
    ),
    "deploy_agreement": (
        "DeployAgreement",
        {"terms_hash": _hash, "required_roles": _list_of(_enum(*ROLES))},
        _identity.deploy_agreement,
    ),
    "sign_agreement": (
        "SignAgreement",
        {"agreement_id": _pos_int, "signature": _signature},
        _identity.sign_agreement,
    ),
    "record_consent": (
        "RecordConsent",
        {"scope": _nonempty_text, "granted_at": _uint},
        _identity.record_consent,
    ),
    "revoke_consent": (
        "RevokeConsent",
        {"consent_id": _pos_int, "revoked_at": _uint},
        _identity.revoke_consent,
    ),
    "anchor_snapshot": (
        "AnchorSnapshot",
        {"source_id": _nonempty_text, "merkle_root": _hash, "item_count": _uint},
        _provenance.anchor_snapshot,
    ),
    "record_step": (
        "RecordStep",
        {"task_id": _nonempty_text, "step": _step},
        _provenance.record_step,
    ),
    "flag_response": (
        "FlagResponse",
        {"task_id": _nonempty_text, "rule_id": _nonempty_text,
         "response_hash": _hash, "opened_at": _uint},
        _validation.flag_response,
    ),
    "open_ballot": (
        "OpenBallot",
        {"case_id": _pos_int, "scheme": _enum(*_validation.SCHEMES),
         "quorum": _uint, "window": _uint,
         "provider_weight": _optional(_uint), "early_finalize": _optional(_bool),
         "opened_at": _uint},
        _validation.open_ballot,
    ),
    "cast_vote": (
        "CastVote",
        {"case_id": _pos_int, "verdict": _enum("uphold", "overturn"), "cast_at": _uint},
        _validation.cast_vote,
    ),
    "finalize_case": (
        "FinalizeCase",
        {"case_id": _pos_int, "now": _uint},
        _validation.finalize_case,
    ),
    "adjudicate": (
        "Adjudicate",
        {"case_id": _pos_int, "verdict": _enum("upheld", "overturned")},
        _validation.adjudicate,
    ),
    "mint": (
        "Mint",
        {"to": _hash, "amount": _uint},
        _incentives.mint,
    ),
    "transfer": (
        "Transfer",
        {"to": _hash, "amount": _uint},
        _incentives.transfer,
    ),
    "lock": (
        "Lock",
        {"account": _hash, "amount": _uint, "reason": _text},
        _incentives.lock,
    ),
    "unlock": (
        "Unlock",
        {"account": _hash, "amount": _uint},
        _incentives.unlock,
    ),
    "slash": (
        "Slash",
        {"account": _hash, "amount": _uint, "reason": _text},
        _incentives.slash,
    ),
    "settle_epoch": (
        "SettleEpoch",
        {"epoch": _uint},
        _incentives.settle_epoch,
    ),
    "register_claim": (
        "RegisterClaim",
        {"case_id": _pos_int, "amount": _uint},
        _incentives.register_claim,
    ),
    "confirm_claim": (
        "ConfirmClaim",
        {"claim_id": _pos_int},
        _incentives.confirm_claim,
    ),
    "pay_claim": (
        "PayClaim",
        {"claim_id": _pos_int},
        _incentives.pay_claim,
    ),
    "list_offering": (
        "ListOffering",
        {"subject": _hash, "kind": _enum(*_marketplace.OFFERING_KINDS), "metrics": _metrics},
        _marketplace.list_offering,
    ),
    "update_metrics": (
        "UpdateMetrics",
        {"offering_id": _pos_int, "metrics": _metrics},
        _marketplace.update_metrics,
    ),
    "deactivate_offering": (
        "DeactivateOffering",
        {"offering_id": _pos_int},
        _marketplace.deactivate_offering,
    ),
}


def validate_command(command) -> dict:
    """Strict shape check; returns the command when sound."""
    if not isinstance(command, dict):
        raise errors.MalformedCommand("command must be an object")
    tag = command.get("type")
    if tag not in COMMANDS:
        raise errors.MalformedCommand(f"unknown command type {tag!r}")
    schema = COMMANDS[tag][1]
    fields = {k: v for k, v in command.items() if k != "type"}
    extra = set(fields) - set(schema)
    if extra:
        raise errors.MalformedCommand(f"{tag}: unexpected fields {sorted(extra)}")
    for name, check in schema.items():
        if name not in fields:
            if getattr(check, "optional", False):
                continue
            raise errors.MalformedCommand(f"{tag}: missing field {name}")
        if not check(fields[name]):
            raise errors.MalformedCommand(f"{tag}: bad value for {name}")
    return command


def action_for(command: dict) -> str:
    return COMMANDS[command["type"]][0]


def handler_for(command: dict):
    return COMMANDS[command["type"]][2]
