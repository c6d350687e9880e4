"""Provenance: data-store anchors, runtime operation traces, audit checks.

Anchors commit Merkle roots of off-chain stores (epoch-numbered per source);
traces are the black-box record of a task's pipeline steps; audit_task
re-derives whether a finished trace is complete and internally consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import errors
from ..canonical import ZERO_HASH
from ..merkle import MerkleProof, verify_proof
from . import identity

STEP_KINDS = (
    "prompt_received",
    "guardrail_check",
    "fm_call",
    "tool_invocation",
    "retrieval",
    "response_emitted",
)

CONNECTOR_ROLES = ("communication", "coordination", "conversion", "facilitation")


def genesis_state() -> dict:
    return {
        "anchors": {},
        "sources": {},
        "next_anchor_id": 1,
        "traces": {},
    }


# --- command handlers -------------------------------------------------------

def anchor_snapshot(state, ctx, p):
    prov = state["provenance"]
    if p["merkle_root"] == ZERO_HASH:
        raise errors.ZeroRoot("anchor root must be non-zero")
    if not (
        identity.has_role(state, ctx.sender, "DataContributor")
        or identity.has_role(state, ctx.sender, "SystemProvider")
    ):
        raise errors.NotAuthorized("anchoring needs DataContributor or SystemProvider")
    source_id = p["source_id"]
    epochs = prov["sources"].setdefault(source_id, [])
    anchor_id = prov["next_anchor_id"]
    prov["next_anchor_id"] = anchor_id + 1
    prov["anchors"][str(anchor_id)] = {
        "anchor_id": anchor_id,
        "source_id": source_id,
        "merkle_root": p["merkle_root"],
        "item_count": p["item_count"],
        "epoch": len(epochs),
        "submitted_by": ctx.sender,
    }
    epochs.append(anchor_id)
    from . import incentives  # cycle: incentives consumes anchor events

    incentives.accrue(state, ctx, kind="DataAnchor", beneficiary=ctx.sender,
                      source=f"anchor:{anchor_id}")
    return []


def record_step(state, ctx, p):
    prov = state["provenance"]
    task_id = p["task_id"]
    step = p["step"]
    if not identity.account_exists(state, step["actor"]):
        raise errors.UnknownActor(f"step actor {step['actor']} not registered")
    trace = prov["traces"].get(task_id)
    if step["kind"] == "prompt_received":
        if trace is not None:
            raise errors.DuplicateTask(f"task {task_id} already opened")
        trace = []
        prov["traces"][task_id] = trace
    elif trace is None:
        raise errors.UnknownTask(f"task {task_id} has no trace yet")
    stored = dict(step)
    stored["seq_no"] = len(trace)
    trace.append(stored)
    if step["kind"] == "tool_invocation":
        _accrue_tool_reward(state, ctx, step)
    return []


def _accrue_tool_reward(state, ctx, step):
    from . import incentives

    accounts = state["identity"]["accounts"]
    tool = accounts.get(step["tool_account"])
    if tool is None:
        return  # unregistered tool: recorded for audit, nothing to reward
    beneficiary = tool["owner"] if tool["owner"] else step["tool_account"]
    if beneficiary in accounts:
        incentives.accrue(state, ctx, kind="ToolInvocation", beneficiary=beneficiary,
                          source=f"tool:{step['tool_account']}")


# --- queries ----------------------------------------------------------------

def get_anchor(state: dict, source_id: str, epoch: int) -> dict:
    epochs = state["provenance"]["sources"].get(source_id, [])
    if not 0 <= epoch < len(epochs):
        raise errors.UnknownAnchor(f"no anchor for {source_id!r} epoch {epoch}")
    return state["provenance"]["anchors"][str(epochs[epoch])]


def latest_anchor(state: dict, source_id: str) -> dict | None:
    epochs = state["provenance"]["sources"].get(source_id, [])
    if not epochs:
        return None
    return state["provenance"]["anchors"][str(epochs[-1])]


def verify_retrieved_item(state: dict, source_id: str, epoch: int,
                          item_hash: str, proof: MerkleProof) -> bool:
    anchor = get_anchor(state, source_id, epoch)
    return verify_proof(item_hash, proof, anchor["merkle_root"])


def get_trace(state: dict, task_id: str, caller: str) -> list[dict]:
    trace = state["provenance"]["traces"].get(task_id)
    if trace is None:
        raise errors.UnknownTask(f"no task {task_id}")
    if identity.check_access(state, caller, "ReadTrace") != "allow":
        # a task's own user may always read their trace
        if not trace or trace[0].get("actor") != caller:
            raise errors.NotAuthorized(f"ReadTrace denied for {caller}")
    return [dict(s) for s in trace]


@dataclass
class AuditReport:
    task_id: str
    complete: bool
    findings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "complete": self.complete,
            "findings": [
                {"code": c, "seq_no": s, "detail": d} for c, s, d in self.findings
            ],
        }


def audit_task(state: dict, task_id: str, caller: str) -> AuditReport:
    if identity.check_access(state, caller, "ReadAudit") != "allow":
        raise errors.NotAuthorized(f"ReadAudit denied for {caller}")
    trace = state["provenance"]["traces"].get(task_id)
    if trace is None:
        raise errors.UnknownTask(f"no task {task_id}")
    findings = audit_trace(
        trace,
        consent_active_at=lambda cid, t: identity.consent_active_at(state, cid, t),
        anchor_lookup=lambda source, aid: _anchor_matches(state, source, aid),
        account_known=lambda aid: identity.account_exists(state, aid),
    )
    return AuditReport(task_id=task_id, complete=not findings, findings=findings)


def _anchor_matches(state, source_id, anchor_id) -> bool:
    anchor = state["provenance"]["anchors"].get(str(anchor_id))
    return anchor is not None and anchor["source_id"] == source_id


def audit_trace(trace, consent_active_at, anchor_lookup, account_known) -> list:
    """Pure audit core over a step list; returns (code, seq_no, detail) tuples.

    Checks: consented prompt first, verified retrievals, registered actors,
    a response present, dense sequence numbers.
    """
    findings = []
    for i, step in enumerate(trace):
        if step.get("seq_no") != i:
            findings.append(("OutOfOrder", i, f"seq_no {step.get('seq_no')} at position {i}"))
    if not trace or trace[0]["kind"] != "prompt_received":
        findings.append(("MissingConsent", 0, "trace does not start with a consented prompt"))
    else:
        first = trace[0]
        if not consent_active_at(first.get("consent_id"), first["timestamp"]):
            findings.append(("MissingConsent", 0,
                             f"consent {first.get('consent_id')} not active at prompt time"))
    for step in trace:
        seq = step["seq_no"]
        actors = [step["actor"]]
        if step["kind"] == "tool_invocation":
            actors.append(step["tool_account"])
        for actor in actors:
            if not account_known(actor):
                findings.append(("UnregisteredActor", seq, f"{actor} not registered"))
        if step["kind"] == "retrieval":
            if not anchor_lookup(step["source_id"], step["anchor_id"]):
                findings.append(("UnverifiedRetrieval", seq,
                                 f"anchor {step['anchor_id']} unknown for {step['source_id']!r}"))
            elif not step["proofs_ok"]:
                findings.append(("UnverifiedRetrieval", seq,
                                 "retrieval proofs did not verify against the anchor"))
    if not any(s["kind"] == "response_emitted" for s in trace):
        findings.append(("NoResponse", None, "no response was emitted"))
    findings.sort(key=lambda f: (f[1] if f[1] is not None else len(trace), f[0]))
    return findings


def response_hash_for_task(state: dict, task_id: str) -> str | None:
    trace = state["provenance"]["traces"].get(task_id)
    if trace is None:
        return None
    for step in reversed(trace):
        if step["kind"] == "response_emitted":
            return step["response_hash"]
    return None
