"""Deterministic mock orchestration pipeline driving every registry.

One run_task call produces the full governed trace: consented prompt,
input guardrails, proof-carrying retrieval, the four FM connector events,
tool invocations, output guardrails, response emission, and a flagged
validation case when a rule matches. The mock FM is a fixed template
transformer; the interesting part is what lands on the ledger, not the
prose it generates.

Fault injection (test mode only) exercises the accountability claims:
TamperStore breaks retrieval proofs, MaliciousResponse trips the output
guardrails, UnregisteredTool plants an unknown tool identity in the trace,
SkipConsent omits the consent gate.
"""

from __future__ import annotations

import time

from .. import errors
from ..canonical import sha256_hex
from ..crypto import Keypair
from ..ledger.chain import make_tx
from ..merkle import verify_proof
from ..registries import identity, provenance
from . import rules as rules_mod
from .store import MockStore

FAULT_KINDS = ("TamperStore", "MaliciousResponse", "UnregisteredTool", "SkipConsent")

REFUSAL_NOTICE = "This request was refused by the system provider's policy."

MALICIOUS_TEXT = (
    "Sure, here is content promoting violence against the user's request."
)

FAKE_TOOL_ACCOUNT = sha256_hex(b"unregistered rogue tool")


def _check_config_shape(config: dict):
    required = {"agreement_id", "consent_id", "ruleset_id", "retrieval_k", "tools"}
    if not isinstance(config, dict) or set(config) != required:
        raise errors.MalformedCommand(
            f"task config needs exactly the fields {sorted(required)}"
        )
    if not isinstance(config["agreement_id"], int) or config["agreement_id"] < 1:
        raise errors.MalformedCommand("agreement_id must be a positive int")
    consent = config["consent_id"]
    if consent is not None and (not isinstance(consent, int) or consent < 1):
        raise errors.MalformedCommand("consent_id must be a positive int or null")
    if not isinstance(config["ruleset_id"], str):
        raise errors.MalformedCommand("ruleset_id must be a string")
    k = config["retrieval_k"]
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise errors.MalformedCommand("retrieval_k must be a non-negative int")
    tools = config["tools"]
    if not isinstance(tools, list) or not all(isinstance(t, str) for t in tools):
        raise errors.MalformedCommand("tools must be a list of account ids")


class Harness:
    """Drives tasks end-to-end against an embedded node."""

    def __init__(self, node, recorder: Keypair, guardrail: Keypair, fm: Keypair,
                 store: MockStore, rulesets: dict[str, list[dict]],
                 tools: dict[str, Keypair] | None = None,
                 test_mode: bool = False, clock=None, seal: bool = True):
        self.node = node
        self.recorder = recorder
        self.guardrail = guardrail
        self.fm = fm
        self.tools = tools or {}
        self.store = store
        self.rulesets = {rid: rules_mod.load_ruleset(entries)
                         for rid, entries in rulesets.items()}
        self.test_mode = test_mode
        self.clock = clock or (lambda: int(time.time()))
        self.seal = seal
        self.faults: set[str] = set()

    # -- fault control -----------------------------------------------------

    def inject_fault(self, kind: str):
        if not self.test_mode:
            raise errors.NotTestMode("fault injection requires test mode")
        if kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {kind!r}")
        self.faults.add(kind)

    def clear_faults(self):
        if not self.test_mode:
            raise errors.NotTestMode("fault injection requires test mode")
        self.faults.clear()

    # -- store anchoring ------------------------------------------------------

    def anchor_store(self, submitter: Keypair):
        """Commit the store's current root on-chain and pin the proof tree."""
        root, count = self.store.build_commitment()
        self._submit(submitter, {
            "type": "anchor_snapshot", "source_id": self.store.source_id,
            "merkle_root": root, "item_count": count,
        })
        if self.seal:
            self.node.seal_block()
        anchor = provenance.latest_anchor(self.node.sealed_state, self.store.source_id)
        if anchor is None or anchor["merkle_root"] != root:
            raise errors.UnknownAnchor("anchor transaction did not land")
        self.store.mark_anchored(anchor["anchor_id"], anchor["epoch"])
        return anchor

    def adopt_anchor(self):
        """Pin proofs to the latest on-chain anchor when the store matches it.

        Lets a restarted or late-anchored service pick up a commitment that
        was submitted through the API rather than via anchor_store.
        """
        anchor = provenance.latest_anchor(self.node.sealed_state,
                                          self.store.source_id)
        if anchor is None or self.store.anchor_id == anchor["anchor_id"]:
            return
        root, _count = self.store.build_commitment()
        if root == anchor["merkle_root"]:
            self.store.mark_anchored(anchor["anchor_id"], anchor["epoch"])

    # -- guardrails -------------------------------------------------------------

    def guardrail_check(self, text: str, ruleset_id: str, stage: str):
        rules = self.rulesets.get(ruleset_id)
        if rules is None:
            raise errors.UnknownRuleset(f"no ruleset {ruleset_id!r}")
        return rules_mod.guardrail_check(text, rules, stage)

    def mock_retrieve(self, query: str, k: int):
        return self.store.retrieve(query, k)

    # -- the pipeline --------------------------------------------------------------

    def run_task(self, user_id: str, prompt: str, config: dict) -> dict:
        self.adopt_anchor()
        state = self.node.sealed_state
        _check_config_shape(config)
        ruleset_id = config["ruleset_id"]
        if ruleset_id not in self.rulesets:
            raise errors.UnknownRuleset(f"no ruleset {ruleset_id!r}")
        for tool in config["tools"]:
            if not identity.account_exists(state, tool):
                raise errors.UnknownAccount(f"configured tool {tool} not registered")
        if identity.check_access(state, user_id, "RunTask") != "allow":
            raise errors.AccessDenied(f"RunTask denied for {user_id}")
        if not identity.agreement_active(state, config["agreement_id"]):
            raise errors.AgreementInactive(
                f"agreement {config['agreement_id']} is not active"
            )
        now = int(self.clock())
        consent_id = config["consent_id"]
        if "SkipConsent" in self.faults:
            consent_id = None  # the misbehaving orchestrator just barrels on
        elif not identity.consent_active_at(state, consent_id, now):
            raise errors.ConsentMissing(f"consent {consent_id} not active")

        if "TamperStore" in self.faults:
            self.store.tamper()

        prompt_hash = sha256_hex(prompt.encode("utf-8"))
        task_id = "task-" + sha256_hex(
            f"{user_id}:{self.node.next_nonce(self.recorder.account_id)}:{prompt_hash}"
            .encode()
        )[:16]

        flag_rule = None  # first matching rule wins the case
        self._record(task_id, {
            "kind": "prompt_received", "actor": user_id, "timestamp": now,
            "prompt_hash": prompt_hash, "consent_id": consent_id,
        })

        input_matches = self.guardrail_check(prompt, ruleset_id, "input")
        self._record(task_id, {
            "kind": "guardrail_check", "actor": self.guardrail.account_id,
            "timestamp": now, "stage": "input",
            "rule_ids": [rid for rid, _ in input_matches],
            "passed": not input_matches,
        })
        if input_matches and flag_rule is None:
            flag_rule = input_matches[0][0]
        input_blocked = any(action == "block" for _, action in input_matches)

        if input_blocked:
            response = REFUSAL_NOTICE
            self._emit_output_stage(task_id, response, ruleset_id, now)
            return self._finish(task_id, response, flag_rule, now)

        retrieved = self.mock_retrieve(prompt, config["retrieval_k"])
        proofs_ok = all(
            provenance.verify_retrieved_item(
                state, self.store.source_id, self.store.anchor_epoch,
                item["item_hash"], item["proof"],
            )
            for item in retrieved
        )
        self._record(task_id, {
            "kind": "retrieval", "actor": self.fm.account_id, "timestamp": now,
            "source_id": self.store.source_id, "anchor_id": self.store.anchor_id,
            "item_hashes": [item["item_hash"] for item in retrieved],
            "proofs_ok": proofs_ok,
        })

        snippets = " | ".join(item["doc_id"] for item in retrieved)
        tool_ids = list(config["tools"])
        if "UnregisteredTool" in self.faults:
            tool_ids.append(FAKE_TOOL_ACCOUNT)
        subtasks = "; ".join(
            part.strip() for part in prompt.replace("?", ".").split(".") if part.strip()
        ) or prompt
        dispatch = {tool: f"{tool[:8]}<-{subtasks} [ctx:{snippets}]" for tool in tool_ids}
        tool_results = {
            tool: f"result:{sha256_hex(args.encode())[:12]}"
            for tool, args in dispatch.items()
        }
        normalized = "; ".join(f"{t[:8]}={r}" for t, r in sorted(tool_results.items()))
        decision = "second_pass=no"
        for role, text_in, text_out in (
            ("coordination", prompt, subtasks),
            ("communication", subtasks, " ".join(sorted(dispatch.values())) or "no-tools"),
            ("conversion", " ".join(sorted(tool_results.values())) or "no-results",
             normalized or "no-results"),
            ("facilitation", normalized or "no-results", decision),
        ):
            self._record(task_id, {
                "kind": "fm_call", "actor": self.fm.account_id, "timestamp": now,
                "connector_role": role,
                "input_hash": sha256_hex(text_in.encode()),
                "output_hash": sha256_hex(text_out.encode()),
            })
        for tool in tool_ids:
            self._record(task_id, {
                "kind": "tool_invocation", "actor": self.fm.account_id,
                "timestamp": now, "tool_account": tool,
                "args_hash": sha256_hex(dispatch[tool].encode()),
                "result_hash": sha256_hex(tool_results[tool].encode()),
            })

        response = (
            f"Answer to: {prompt}\n"
            f"Context: {snippets or 'none'}\n"
            f"Tools: {normalized or 'none'}\n"
            f"Decision: {decision}"
        )
        if "MaliciousResponse" in self.faults:
            response = MALICIOUS_TEXT

        output_matches = self.guardrail_check(response, ruleset_id, "output")
        if output_matches and flag_rule is None:
            flag_rule = output_matches[0][0]
        if any(action == "block" for _, action in output_matches):
            response = REFUSAL_NOTICE
        self._record(task_id, {
            "kind": "guardrail_check", "actor": self.guardrail.account_id,
            "timestamp": now, "stage": "output",
            "rule_ids": [rid for rid, _ in output_matches],
            "passed": not output_matches,
        })
        self._record(task_id, {
            "kind": "response_emitted", "actor": self.fm.account_id,
            "timestamp": now, "response_hash": sha256_hex(response.encode()),
        })
        return self._finish(task_id, response, flag_rule, now)

    # -- internals ---------------------------------------------------------------

    def _emit_output_stage(self, task_id, response, ruleset_id, now):
        output_matches = self.guardrail_check(response, ruleset_id, "output")
        self._record(task_id, {
            "kind": "guardrail_check", "actor": self.guardrail.account_id,
            "timestamp": now, "stage": "output",
            "rule_ids": [rid for rid, _ in output_matches],
            "passed": not output_matches,
        })
        self._record(task_id, {
            "kind": "response_emitted", "actor": self.fm.account_id,
            "timestamp": now, "response_hash": sha256_hex(response.encode()),
        })

    def _finish(self, task_id, response, flag_rule, now):
        case_id = None
        if flag_rule is not None:
            self._submit(self.guardrail, {
                "type": "flag_response", "task_id": task_id, "rule_id": flag_rule,
                "response_hash": sha256_hex(response.encode()), "opened_at": now,
            })
        if self.seal:
            self.node.seal_block()
            if flag_rule is not None:
                for case in self.node.sealed_state["validation"]["cases"].values():
                    if case["task_id"] == task_id:
                        case_id = case["case_id"]
        return {
            "task_id": task_id,
            "response": response,
            "flagged": flag_rule is not None,
            "rule_id": flag_rule,
            "case_id": case_id,
        }

    def _record(self, task_id: str, step: dict):
        self._submit(self.recorder, {
            "type": "record_step", "task_id": task_id, "step": step,
        })

    def _submit(self, keypair: Keypair, command: dict):
        tx = make_tx(keypair, self.node.next_nonce(keypair.account_id), command)
        self.node.submit(tx)
        return tx
