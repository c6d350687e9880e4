"""Response registry: flagged cases, verifier ballots, outcomes.

Case lifecycle: flagged -> voting -> finalized, with two shortcuts: a
provider may adjudicate a flagged case directly, and a ballot whose quorum
was not met by window close escalates to adjudication_required instead of
producing a verdict. Ties always uphold the guardrail flag.

Vote weights are resolved at finalization, not at cast time: under
token-weighted voting the weight is the voter's available balance in the
state the finalize command executes against.
"""

from __future__ import annotations

from .. import errors
from . import identity, provenance

SCHEMES = ("one-verifier-one-vote", "token-weighted", "provider-weighted")

CASE_STATUSES = ("flagged", "voting", "finalized", "adjudication_required")


def genesis_state() -> dict:
    return {"cases": {}, "next_case_id": 1}


def get_case(state: dict, case_id) -> dict:
    case = state["validation"]["cases"].get(str(case_id))
    if case is None:
        raise errors.UnknownCase(f"no case {case_id}")
    return case


# --- command handlers -------------------------------------------------------

def flag_response(state, ctx, p):
    val = state["validation"]
    task_id = p["task_id"]
    if task_id not in state["provenance"]["traces"]:
        raise errors.UnknownTask(f"no task {task_id}")
    emitted = provenance.response_hash_for_task(state, task_id)
    if emitted is None or emitted != p["response_hash"]:
        raise errors.HashMismatch("response_hash does not match the task trace")
    case_id = val["next_case_id"]
    val["next_case_id"] = case_id + 1
    case = {
        "case_id": case_id,
        "task_id": task_id,
        "rule_id": p["rule_id"],
        "response_hash": p["response_hash"],
        "status": "flagged",
        "opened_at": p["opened_at"],
        "ballot": None,
        "votes": [],
        "outcome": None,
    }
    val["cases"][str(case_id)] = case
    return [("case_flagged", {
        "case_id": case_id,
        "task_id": task_id,
        "rule_id": p["rule_id"],
        "response_hash": p["response_hash"],
        "opened_at": p["opened_at"],
    })]


def open_ballot(state, ctx, p):
    case = get_case(state, p["case_id"])
    if case["status"] != "flagged":
        raise errors.BadStatus(f"case is {case['status']}, not flagged")
    if p["scheme"] not in SCHEMES:
        raise errors.BadConfig(f"unknown voting scheme {p['scheme']!r}")
    if p["quorum"] < 1:
        raise errors.BadConfig("quorum must be at least 1")
    if p["window"] <= 0:
        raise errors.BadConfig("window must be positive")
    case["ballot"] = {
        "scheme": p["scheme"],
        "quorum": p["quorum"],
        "window": p["window"],
        "provider_weight": p.get("provider_weight", 1),
        "early_finalize": p.get("early_finalize", False),
        "opened_at": p["opened_at"],
    }
    case["status"] = "voting"
    return [("ballot_opened", {
        "case_id": case["case_id"],
        "scheme": p["scheme"],
        "quorum": p["quorum"],
        "window": p["window"],
        "opened_at": p["opened_at"],
    })]


def cast_vote(state, ctx, p):
    case = get_case(state, p["case_id"])
    if case["status"] != "voting":
        raise errors.BadStatus(f"case is {case['status']}, not voting")
    ballot = case["ballot"]
    cast_at = p["cast_at"]
    if not ballot["opened_at"] <= cast_at < ballot["opened_at"] + ballot["window"]:
        raise errors.WindowClosed("vote is outside the ballot window")
    if not _eligible(state, ctx.sender, ballot["scheme"]):
        raise errors.NotEligible(f"{ctx.sender} cannot vote under {ballot['scheme']}")
    if any(v["voter"] == ctx.sender for v in case["votes"]):
        raise errors.DuplicateVote("one vote per voter per case")
    case["votes"].append({
        "voter": ctx.sender,
        "verdict": p["verdict"],
        "cast_at": cast_at,
    })
    return [("vote_cast", {
        "case_id": case["case_id"],
        "voter": ctx.sender,
        "verdict": p["verdict"],
        "cast_at": cast_at,
    })]


def _eligible(state, voter, scheme) -> bool:
    if identity.has_role(state, voter, "Verifier"):
        return True
    return scheme == "provider-weighted" and identity.has_role(
        state, voter, "SystemProvider"
    )


def finalize_case(state, ctx, p):
    case = get_case(state, p["case_id"])
    if case["status"] != "voting":
        raise errors.BadStatus(f"case is {case['status']}, not voting")
    ballot = case["ballot"]
    now = p["now"]
    window_closed = now >= ballot["opened_at"] + ballot["window"]
    if not window_closed:
        if not ballot["early_finalize"]:
            raise errors.BadStatus("ballot window still open")
        if len(case["votes"]) < ballot["quorum"]:
            raise errors.QuorumUnmet(
                f"{len(case['votes'])} of {ballot['quorum']} voters"
            )
    if window_closed and len(case["votes"]) < ballot["quorum"]:
        case["status"] = "adjudication_required"
        return []
    weights = resolve_weights(state, case)
    tally_uphold = sum(weights[v["voter"]] for v in case["votes"] if v["verdict"] == "uphold")
    tally_overturn = sum(weights[v["voter"]] for v in case["votes"] if v["verdict"] == "overturn")
    verdict = "upheld" if tally_uphold >= tally_overturn else "overturned"
    case["outcome"] = {
        "verdict": verdict,
        "tally_uphold": tally_uphold,
        "tally_overturn": tally_overturn,
        "method": "ballot",
        "weights": weights,
    }
    case["status"] = "finalized"
    _reward_winning_verifiers(state, ctx, case, verdict)
    return [("case_finalized", {
        "case_id": case["case_id"],
        "verdict": verdict,
        "tally_uphold": tally_uphold,
        "tally_overturn": tally_overturn,
        "method": "ballot",
    })]


def resolve_weights(state: dict, case: dict) -> dict:
    """Map voter -> integer weight under the case's scheme."""
    ballot = case["ballot"]
    scheme = ballot["scheme"]
    weights = {}
    for vote in case["votes"]:
        voter = vote["voter"]
        if scheme == "one-verifier-one-vote":
            weights[voter] = 1
        elif scheme == "token-weighted":
            balance = state["incentives"]["balances"].get(voter)
            weights[voter] = balance["available"] if balance else 0
        else:  # provider-weighted
            if identity.has_role(state, voter, "SystemProvider"):
                weights[voter] = ballot["provider_weight"]
            else:
                weights[voter] = 1
    return weights


def _reward_winning_verifiers(state, ctx, case, verdict):
    from . import incentives

    winning = "uphold" if verdict == "upheld" else "overturn"
    for vote in case["votes"]:
        if vote["verdict"] != winning:
            continue
        if not identity.has_role(state, vote["voter"], "Verifier"):
            continue
        incentives.accrue(state, ctx, kind="VerifierMajorityVote",
                          beneficiary=vote["voter"],
                          source=f"case:{case['case_id']}")


def adjudicate(state, ctx, p):
    case = get_case(state, p["case_id"])
    if case["status"] not in ("flagged", "adjudication_required"):
        raise errors.BadStatus(f"case is {case['status']}")
    verdict = p["verdict"]
    case["outcome"] = {
        "verdict": verdict,
        "tally_uphold": 0,
        "tally_overturn": 0,
        "method": "adjudication",
        "weights": {},
    }
    case["status"] = "finalized"
    return [("case_finalized", {
        "case_id": case["case_id"],
        "verdict": verdict,
        "tally_uphold": 0,
        "tally_overturn": 0,
        "method": "adjudication",
    })]


# --- queries ----------------------------------------------------------------

def list_cases(state: dict, status: str | None = None) -> list[dict]:
    cases = [dict(c) for c in state["validation"]["cases"].values()]
    if status is not None:
        cases = [c for c in cases if c["status"] == status]
    cases.sort(key=lambda c: c["case_id"])
    return cases
