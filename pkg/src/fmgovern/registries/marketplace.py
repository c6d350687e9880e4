"""Marketplace: offerings of systems/models/tools and deterministic selection.

Selection scores survivors of the hard constraints with a weighted sum of
normalized metrics: lower-is-better metrics (price, processing_time) score
min-over-survivors / value, higher-is-better (context_window) scores
value / max-over-survivors, so every component lies in (0, 1] and the
ranking is invariant under rescaling any one metric across the board.
Scoring runs in exact rational arithmetic; float rounding near ties would
otherwise break that invariance.
"""

from __future__ import annotations

from fractions import Fraction

from .. import errors
from . import identity

OFFERING_KINDS = ("system", "model", "tool")

METRIC_FIELDS = ("price", "processing_time", "context_window")


def genesis_state() -> dict:
    return {"offerings": {}, "next_offering_id": 1}


def _check_metrics(metrics: dict):
    for field in METRIC_FIELDS:
        value = metrics.get(field)
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            raise errors.BadMetrics(f"{field} must be a positive integer")


# --- command handlers -------------------------------------------------------

def list_offering(state, ctx, p):
    market = state["market"]
    subject = identity.get_account(state, p["subject"])
    if subject["owner"] != ctx.sender:
        raise errors.NotOwner(f"{ctx.sender} does not own {p['subject']}")
    _check_metrics(p["metrics"])
    for offering in market["offerings"].values():
        if offering["subject"] == p["subject"] and offering["active"]:
            raise errors.Duplicate(f"active offering exists for {p['subject']}")
    offering_id = market["next_offering_id"]
    market["next_offering_id"] = offering_id + 1
    market["offerings"][str(offering_id)] = {
        "offering_id": offering_id,
        "provider": ctx.sender,
        "subject": p["subject"],
        "kind": p["kind"],
        "metrics": {f: p["metrics"][f] for f in METRIC_FIELDS},
        "active": True,
    }
    return []


def _owned_offering(state, ctx, offering_id) -> dict:
    offering = state["market"]["offerings"].get(str(offering_id))
    if offering is None:
        raise errors.UnknownOffering(f"no offering {offering_id}")
    if offering["provider"] != ctx.sender:
        raise errors.NotOwner(f"{ctx.sender} is not the listing provider")
    return offering


def update_metrics(state, ctx, p):
    offering = _owned_offering(state, ctx, p["offering_id"])
    _check_metrics(p["metrics"])
    offering["metrics"] = {f: p["metrics"][f] for f in METRIC_FIELDS}
    return []


def deactivate_offering(state, ctx, p):
    offering = _owned_offering(state, ctx, p["offering_id"])
    offering["active"] = False
    return []


# --- queries ----------------------------------------------------------------

def query_offerings(state: dict, kind: str | None = None,
                    active_only: bool = True) -> list[dict]:
    results = []
    for offering in state["market"]["offerings"].values():
        if kind is not None and offering["kind"] != kind:
            continue
        if active_only and not offering["active"]:
            continue
        results.append(dict(offering))
    results.sort(key=lambda o: o["offering_id"])
    return results


def select(state: dict, requirement: dict) -> list[tuple[int, float]]:
    """Rank active offerings against a requirement.

    requirement: optional hard constraints max_price / max_processing_time /
    min_context_window plus weights {price, processing_time, context_window}
    (non-negative, not all zero; normalized here). Returns (offering_id,
    score) descending, ties broken by lower offering_id.
    """
    weights = requirement.get("weights") or {}
    w = {f: Fraction(str(weights.get(f, 0))) for f in METRIC_FIELDS}
    if any(value < 0 for value in w.values()):
        raise errors.BadRequirement("weights must be non-negative")
    total = sum(w.values())
    if total == 0:
        raise errors.BadRequirement("at least one weight must be positive")
    w = {f: value / total for f, value in w.items()}

    survivors = []
    for offering in query_offerings(state, active_only=True):
        m = offering["metrics"]
        if requirement.get("max_price") is not None and m["price"] > requirement["max_price"]:
            continue
        if (requirement.get("max_processing_time") is not None
                and m["processing_time"] > requirement["max_processing_time"]):
            continue
        if (requirement.get("min_context_window") is not None
                and m["context_window"] < requirement["min_context_window"]):
            continue
        survivors.append(offering)
    if not survivors:
        raise errors.NoEligibleOffering("no offering satisfies the constraints")

    min_price = min(o["metrics"]["price"] for o in survivors)
    min_time = min(o["metrics"]["processing_time"] for o in survivors)
    max_ctx = max(o["metrics"]["context_window"] for o in survivors)
    scored = []
    for offering in survivors:
        m = offering["metrics"]
        score = (
            w["price"] * Fraction(min_price, m["price"])
            + w["processing_time"] * Fraction(min_time, m["processing_time"])
            + w["context_window"] * Fraction(m["context_window"], max_ctx)
        )
        scored.append((offering["offering_id"], score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [(offering_id, float(score)) for offering_id, score in scored]
