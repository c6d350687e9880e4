"""HTTP/JSON service over one ledger node plus its pipeline harness.

Every mutating endpoint assembles a registry command from the request,
rebuilds the canonical transaction body, and funnels it through the
node's admission path: the service never signs on behalf of callers and
never mutates state outside the ledger. Query endpoints read sealed state
only. Read access control is asserted via the X-Account header (reads
carry no signatures; the enforced contract is the role matrix).
"""

from __future__ import annotations

import contextlib
import threading

from fastapi import FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse

from .. import errors
from ..canonical import canonical_bytes, sha256_hex
from ..crypto import verify_signature
from ..harness.pipeline import FAULT_KINDS, Harness
from ..ledger.chain import header_hash, tx_id_for
from ..ledger.node import Node
from ..registries import identity, incentives, marketplace, provenance, validation

_STATUS_FOR = {
    "UnknownAccount": 404, "UnknownTx": 404, "UnknownTask": 404,
    "UnknownCase": 404, "UnknownClaim": 404, "UnknownAgreement": 404,
    "UnknownConsent": 404, "UnknownAnchor": 404, "UnknownOffering": 404,
    "RangeOutOfBounds": 404, "UnknownRuleset": 404,
    "NotAuthorized": 403, "AccessDenied": 403, "NotOwner": 403,
    "NotEligible": 403, "RoleNotRequired": 403, "NotTestMode": 403,
    "BadStatus": 409, "DuplicateVote": 409, "Duplicate": 409,
    "DuplicateKey": 409, "DuplicateTask": 409, "AlreadySettled": 409,
    "EpochOpen": 409, "WindowClosed": 409, "QuorumUnmet": 409,
    "CaseNotUpheld": 409, "DataDirLocked": 409, "CursorAhead": 409,
    "EmptyPool": 409, "AgreementInactive": 409, "ConsentMissing": 409,
}


def _http_status(exc: errors.DomainError) -> int:
    return _STATUS_FOR.get(exc.code, 400)


def create_app(node: Node, harness: Harness | None = None,
               seal_interval: float = 1.0, poll_cap: float = 30.0) -> FastAPI:
    sealer_stop = threading.Event()

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        thread = None
        if seal_interval > 0:
            def loop():
                while not sealer_stop.wait(seal_interval):
                    try:
                        node.seal_block()
                    except errors.EmptyPool:
                        pass

            thread = threading.Thread(target=loop, name="sealer", daemon=True)
            thread.start()
        try:
            yield
        finally:
            sealer_stop.set()
            if thread is not None:
                thread.join(timeout=2.0)

    app = FastAPI(title="fm-govern", docs_url=None, redoc_url=None,
                  lifespan=lifespan)
    app.state.node = node
    app.state.harness = harness

    @app.exception_handler(errors.DomainError)
    async def _domain_error(request: Request, exc: errors.DomainError):
        return JSONResponse(status_code=_http_status(exc),
                            content={"error": exc.code, "detail": exc.message})

    # -- helpers --------------------------------------------------------------

    def submit_command(body: dict, command: dict) -> dict:
        for field in ("sender", "nonce", "signature"):
            if field not in body:
                raise errors.MalformedCommand(f"request needs field {field}")
        if not isinstance(body["nonce"], int) or isinstance(body["nonce"], bool):
            raise errors.MalformedCommand("nonce must be an int")
        tx = {
            "tx_id": tx_id_for(body["sender"], body["nonce"], command),
            "sender": body["sender"],
            "nonce": body["nonce"],
            "command": command,
            "signature": body["signature"],
        }
        return node.submit(tx)

    def wrapped_fields(body: dict, allowed: set[str]) -> dict:
        extra = set(body) - allowed - {"sender", "nonce", "signature"}
        if extra:
            raise errors.MalformedCommand(f"unexpected fields {sorted(extra)}")
        return {k: body[k] for k in allowed if k in body}

    def require_read(account: str | None, action: str):
        if not account:
            raise errors.NotAuthorized(f"{action} requires the X-Account header")
        identity.require_access(node.sealed_state, account, action)

    # -- ledger ------------------------------------------------------------------

    @app.get("/")
    def root():
        return {"service": "fm-govern", "height": node.height}

    @app.post("/tx")
    async def post_tx(request: Request):
        return node.submit(await request.json())

    @app.get("/tx/{tx_id}")
    def get_tx(tx_id: str):
        return node.tx_status(tx_id)

    @app.get("/blocks/{height}")
    def get_block(height: int):
        block = node.get_block(height)
        return {"block": block, "header_hash": header_hash(block["header"])}

    @app.get("/chain/tip")
    def chain_tip():
        header = node.tip_header
        return {"height": header["height"], "header": header,
                "header_hash": header_hash(header)}

    @app.get("/chain/verify")
    def chain_verify(from_height: int = Query(0, alias="from"),
                     to_height: int | None = Query(None, alias="to")):
        violations = node.verify_chain(from_height, to_height)
        return {"violations": violations, "clean": not violations}

    @app.get("/chain/proof/{tx_id}")
    def chain_proof(tx_id: str):
        return node.merkle_proof(tx_id)

    # -- identity -------------------------------------------------------------------

    @app.get("/accounts/{account_id}")
    def get_account(account_id: str):
        account = identity.get_account(node.sealed_state, account_id)
        return {
            "id": account_id,
            "pubkey": account["pubkey"],
            "kind": account["kind"],
            "roles": account["roles"],
            "attested": account["attested"],
            "owner": account["owner"],
            "metadata": account["metadata"],
            "next_nonce": node.next_nonce(account_id),
        }

    @app.get("/accounts/{account_id}/balance")
    def get_balance(account_id: str):
        identity.get_account(node.sealed_state, account_id)
        balance = incentives.balance_of(node.sealed_state, account_id)
        return {"id": account_id, "height": node.height, **balance}

    @app.post("/agreements")
    async def post_agreement(request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"terms_hash", "required_roles"})
        return submit_command(body, {"type": "deploy_agreement", **fields})

    @app.get("/agreements/{agreement_id}")
    def get_agreement(agreement_id: int):
        agreement = node.sealed_state["identity"]["agreements"].get(str(agreement_id))
        if agreement is None:
            raise errors.UnknownAgreement(f"no agreement {agreement_id}")
        return agreement

    @app.post("/agreements/{agreement_id}/signatures")
    async def post_agreement_signature(agreement_id: int, request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"signature_over_terms"})
        command = {"type": "sign_agreement", "agreement_id": agreement_id,
                   "signature": fields["signature_over_terms"]}
        return submit_command(body, command)

    @app.post("/consents")
    async def post_consent(request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"scope", "granted_at"})
        return submit_command(body, {"type": "record_consent", **fields})

    # -- provenance ---------------------------------------------------------------------

    @app.post("/anchors")
    async def post_anchor(request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"source_id", "merkle_root", "item_count"})
        return submit_command(body, {"type": "anchor_snapshot", **fields})

    @app.get("/anchors")
    def get_anchors(source_id: str | None = None,
                    x_account: str | None = Header(None)):
        require_read(x_account, "ReadTrainingAnchor")
        anchors = list(node.sealed_state["provenance"]["anchors"].values())
        if source_id is not None:
            anchors = [a for a in anchors if a["source_id"] == source_id]
        anchors.sort(key=lambda a: a["anchor_id"])
        return {"anchors": anchors}

    @app.get("/traces/{task_id}")
    def get_trace(task_id: str, x_account: str | None = Header(None)):
        if not x_account:
            raise errors.NotAuthorized("ReadTrace requires the X-Account header")
        steps = provenance.get_trace(node.sealed_state, task_id, x_account)
        return {"task_id": task_id, "steps": steps}

    @app.get("/audits/{task_id}")
    def get_audit(task_id: str, x_account: str | None = Header(None)):
        if not x_account:
            raise errors.NotAuthorized("ReadAudit requires the X-Account header")
        report = provenance.audit_task(node.sealed_state, task_id, x_account)
        return report.to_json()

    # -- validation ------------------------------------------------------------------------

    @app.get("/cases")
    def get_cases(status: str | None = None,
                  x_account: str | None = Header(None)):
        require_read(x_account, "ReadFlaggedCase")
        return {"cases": validation.list_cases(node.sealed_state, status)}

    @app.get("/cases/{case_id}")
    def get_case(case_id: int, x_account: str | None = Header(None)):
        require_read(x_account, "ReadFlaggedCase")
        return validation.get_case(node.sealed_state, case_id)

    @app.post("/cases/{case_id}/ballot")
    async def post_ballot(case_id: int, request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {
            "scheme", "quorum", "window", "provider_weight", "early_finalize",
            "opened_at",
        })
        command = {"type": "open_ballot", "case_id": case_id, **fields}
        return submit_command(body, command)

    @app.post("/cases/{case_id}/votes")
    async def post_vote(case_id: int, request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"verdict", "cast_at"})
        command = {"type": "cast_vote", "case_id": case_id, **fields}
        return submit_command(body, command)

    @app.post("/cases/{case_id}/finalize")
    async def post_finalize(case_id: int, request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"now"})
        command = {"type": "finalize_case", "case_id": case_id, **fields}
        return submit_command(body, command)

    # -- incentives -----------------------------------------------------------------------

    @app.post("/claims")
    async def post_claim(request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"case_id", "amount"})
        return submit_command(body, {"type": "register_claim", **fields})

    @app.post("/claims/{claim_id}/confirm")
    async def post_claim_confirm(claim_id: int, request: Request):
        body = await request.json()
        wrapped_fields(body, set())
        return submit_command(body, {"type": "confirm_claim", "claim_id": claim_id})

    @app.post("/claims/{claim_id}/pay")
    async def post_claim_pay(claim_id: int, request: Request):
        body = await request.json()
        wrapped_fields(body, set())
        return submit_command(body, {"type": "pay_claim", "claim_id": claim_id})

    @app.get("/claims")
    def get_claims(x_account: str | None = Header(None)):
        require_read(x_account, "ReadAudit")
        claims = sorted(node.sealed_state["incentives"]["claims"].values(),
                        key=lambda c: c["claim_id"])
        return {"claims": claims}

    @app.get("/tokens/export")
    def tokens_export():
        return incentives.export_report(node.sealed_state, node.height)

    # -- marketplace -----------------------------------------------------------------------

    @app.get("/market/offerings")
    def market_offerings(kind: str | None = None, active_only: bool = True):
        return {"offerings": marketplace.query_offerings(
            node.sealed_state, kind, active_only)}

    @app.post("/market/offerings")
    async def post_offering(request: Request):
        body = await request.json()
        fields = wrapped_fields(body, {"subject", "kind", "metrics"})
        return submit_command(body, {"type": "list_offering", **fields})

    @app.post("/market/select")
    async def market_select(request: Request):
        requirement = await request.json()
        ranked = marketplace.select(node.sealed_state, requirement)
        return {"ranking": [
            {"offering_id": oid, "score": score} for oid, score in ranked
        ]}

    # -- harness ---------------------------------------------------------------------------

    @app.get("/harness/info")
    def harness_info():
        if harness is None:
            raise errors.BadConfig("this service has no harness configured")
        state = node.sealed_state
        components = {
            "recorder": harness.recorder,
            "guardrail": harness.guardrail,
            "fm": harness.fm,
            **harness.tools,
        }
        return {
            "components": {
                name: {
                    "account_id": kp.account_id,
                    "pubkey": kp.pubkey_hex,
                    "registered": identity.account_exists(state, kp.account_id),
                }
                for name, kp in components.items()
            },
            "store": {
                "source_id": harness.store.source_id,
                "documents": [doc_id for doc_id, _ in harness.store.documents],
                "anchored": harness.store.anchor_id is not None,
            },
            "rulesets": sorted(harness.rulesets),
            "test_mode": harness.test_mode,
            "faults": sorted(harness.faults),
        }

    @app.post("/tasks")
    async def post_task(request: Request):
        if harness is None:
            raise errors.BadConfig("this service has no harness configured")
        body = await request.json()
        for field in ("user", "prompt", "config", "signature"):
            if field not in body:
                raise errors.MalformedCommand(f"task request needs {field}")
        state = node.sealed_state
        user = identity.get_account(state, body["user"])
        payload = canonical_bytes({
            "config": body["config"],
            "prompt_hash": sha256_hex(body["prompt"].encode("utf-8")),
            "user": body["user"],
        })
        if not verify_signature(user["pubkey"], payload, body["signature"]):
            raise errors.BadSignature("task request signature does not verify")
        missing = [
            kp.account_id for kp in (harness.recorder, harness.guardrail, harness.fm)
            if not identity.account_exists(state, kp.account_id)
        ]
        if missing:
            raise errors.BadConfig(
                "harness components not registered yet; run: fm-govern task setup"
            )
        config = dict(body["config"])
        config.setdefault("tools", [])
        return harness.run_task(body["user"], body["prompt"], config)

    @app.post("/harness/faults")
    async def post_fault(request: Request):
        if harness is None:
            raise errors.BadConfig("this service has no harness configured")
        body = await request.json()
        kind = body.get("kind")
        if kind not in FAULT_KINDS:
            raise errors.MalformedCommand(f"kind must be one of {FAULT_KINDS}")
        harness.inject_fault(kind)
        return {"faults": sorted(harness.faults)}

    @app.delete("/harness/faults")
    def delete_faults():
        if harness is None:
            raise errors.BadConfig("this service has no harness configured")
        harness.clear_faults()
        return {"faults": []}

    # -- events ------------------------------------------------------------------------------

    @app.get("/events")
    def get_events(cursor: int = 0, timeout: float = 25.0):
        events = node.wait_events(cursor, min(max(timeout, 0.0), poll_cap))
        return {"events": events,
                "latest": node.events[-1]["cursor"] if node.events else 0}

    return app
