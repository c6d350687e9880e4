"""Guardrail rulesets: literal/regex pattern rules over prompts and responses.

guardrail_check is a pure function: same text, same ruleset, same stage,
same matches, no side effects. Literal patterns match case-folded; regex
patterns compile with IGNORECASE.
"""

from __future__ import annotations

import re

from .. import errors

RULE_FIELDS = {"rule_id", "stage", "pattern", "match_kind", "action"}

DEFAULT_RULES = [
    {
        "rule_id": "inject.v1/ignore-instructions",
        "stage": "input",
        "pattern": "ignore previous instructions",
        "match_kind": "literal",
        "action": "block",
    },
    {
        "rule_id": "inject.v1/system-prompt-probe",
        "stage": "input",
        "pattern": r"reveal (your|the) system prompt",
        "match_kind": "regex",
        "action": "flag",
    },
    {
        "rule_id": "denylist.v1/violence",
        "stage": "output",
        "pattern": "violence",
        "match_kind": "literal",
        "action": "flag",
    },
    {
        "rule_id": "denylist.v1/malware",
        "stage": "output",
        "pattern": r"build (a )?(bomb|botnet)",
        "match_kind": "regex",
        "action": "block",
    },
]


def load_ruleset(entries: list[dict]) -> list[dict]:
    """Validate rule entries; returns them in original (priority) order."""
    seen = set()
    rules = []
    for entry in entries:
        if not isinstance(entry, dict) or set(entry) != RULE_FIELDS:
            raise ValueError(f"rule entry needs exactly {sorted(RULE_FIELDS)}: {entry!r}")
        if entry["stage"] not in ("input", "output"):
            raise ValueError(f"bad stage {entry['stage']!r}")
        if entry["action"] not in ("block", "flag"):
            raise ValueError(f"bad action {entry['action']!r}")
        if entry["match_kind"] not in ("literal", "regex"):
            raise ValueError(f"bad match_kind {entry['match_kind']!r}")
        if entry["rule_id"] in seen:
            raise ValueError(f"duplicate rule_id {entry['rule_id']!r}")
        seen.add(entry["rule_id"])
        if entry["match_kind"] == "regex":
            try:
                re.compile(entry["pattern"])
            except re.error as exc:
                raise ValueError(f"rule {entry['rule_id']}: bad regex: {exc}") from None
        rules.append(dict(entry))
    return rules


def guardrail_check(text: str, rules: list[dict], stage: str) -> list[tuple[str, str]]:
    """All matching (rule_id, action) for the stage, in rule order."""
    matches = []
    folded = text.casefold()
    for rule in rules:
        if rule["stage"] != stage:
            continue
        if rule["match_kind"] == "literal":
            hit = rule["pattern"].casefold() in folded
        else:
            hit = re.search(rule["pattern"], text, re.IGNORECASE) is not None
        if hit:
            matches.append((rule["rule_id"], rule["action"]))
    return matches
