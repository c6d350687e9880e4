"""fm-govern: operator and auditor command line.

Subcommands map 1:1 onto the HTTP API; mutating commands are signed
locally with --key-file (the service never sees private keys) and, by
default, wait until the transaction seals so the printed status is the
on-chain outcome. Output is canonical JSON for scripting. Exit codes:
0 success, 1 chain-verification violations, 2 rejected commands or API
errors.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import httpx

from .canonical import canonical_bytes, sha256_hex
from .crypto import Keypair
from .ledger.chain import tx_id_for
from .merkle import MerkleTree
from .policy import ROLES

DEFAULT_URL = "http://127.0.0.1:8545"


def _echo(payload) -> None:
    click.echo(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def _fail(payload, code=2):
    _echo(payload)
    sys.exit(code)


class Client:
    def __init__(self, url: str, key_file: str | None):
        self.url = url.rstrip("/")
        self.key_file = key_file
        self._keypair = None
        self.http = httpx.Client(base_url=self.url, timeout=30.0)

    @property
    def keypair(self) -> Keypair:
        if self._keypair is None:
            if not self.key_file:
                _fail({"error": "NoKeyFile",
                       "detail": "this command needs --key-file (or FMGOV_KEY_FILE)"})
            self._keypair = Keypair.load(self.key_file)
        return self._keypair

    def get(self, path: str, params=None, as_account: str | None = None):
        headers = {"X-Account": as_account} if as_account else None
        return self._finish(self.http.get(path, params=params, headers=headers))

    def post(self, path: str, body: dict):
        return self._finish(self.http.post(path, json=body))

    def _finish(self, response: httpx.Response):
        try:
            payload = response.json()
        except ValueError:
            payload = {"error": "BadResponse", "detail": response.text}
        if response.status_code >= 400:
            _fail(payload)
        return payload

    # -- signing ----------------------------------------------------------

    def next_nonce(self, account_id: str) -> int:
        return self.get(f"/accounts/{account_id}")["next_nonce"]

    def signed_tx(self, command: dict) -> dict:
        keypair = self.keypair
        nonce = self.next_nonce(keypair.account_id)
        body = canonical_bytes({"command": command, "nonce": nonce,
                                "sender": keypair.account_id})
        return {
            "tx_id": tx_id_for(keypair.account_id, nonce, command),
            "sender": keypair.account_id,
            "nonce": nonce,
            "command": command,
            "signature": keypair.sign(body),
        }

    def signed_body(self, command: dict, extra: dict) -> dict:
        """Wrapped-endpoint body: sender/nonce/signature plus typed fields."""
        tx = self.signed_tx(command)
        return {"sender": tx["sender"], "nonce": tx["nonce"],
                "signature": tx["signature"], **extra}

    def submit_and_wait(self, command: dict, wait: bool = True) -> dict:
        tx = self.signed_tx(command)
        receipt = self.post("/tx", tx)
        if wait:
            receipt = self.wait_sealed(tx["tx_id"])
        return receipt

    def wait_sealed(self, tx_id: str, timeout: float = 15.0) -> dict:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            status = self.get(f"/tx/{tx_id}")
            if status["status"] != "pending":
                if status["status"] != "ok":
                    _fail(status)
                return status
            time.sleep(0.1)
        _fail({"error": "Timeout", "detail": f"tx {tx_id} still pending"})


pass_client = click.make_pass_decorator(Client)


@click.group()
@click.option("--url", envvar="FMGOV_URL", default=DEFAULT_URL, show_default=True)
@click.option("--key-file", envvar="FMGOV_KEY_FILE", default=None,
              help="Ed25519 key file for local signing.")
@click.pass_context
def main(ctx, url, key_file):
    """Governance ledger for foundation-model systems."""
    ctx.obj = Client(url, key_file)


# -- local commands ---------------------------------------------------------------


@main.command()
@click.option("--data-dir", envvar="FMGOV_DATA_DIR", required=True,
              type=click.Path(path_type=Path))
@click.option("--key-file", "key_file", envvar="FMGOV_KEY_FILE", required=True,
              type=click.Path(path_type=Path),
              help="Where to write the bootstrap provider's key.")
@click.option("--epoch-length", type=int, default=None)
def init(data_dir, key_file, epoch_length):
    """Create a fresh data directory with genesis and harness fixtures."""
    from .service.bootstrap import init_data_dir

    if key_file.exists():
        provider = Keypair.load(key_file)
    else:
        provider = Keypair.generate()
        provider.save(key_file)
    info = init_data_dir(data_dir, provider, epoch_length=epoch_length)
    _echo(info)


@main.command()
@click.option("--data-dir", envvar="FMGOV_DATA_DIR", required=True,
              type=click.Path(path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8545, show_default=True)
@click.option("--seal-interval", default=1.0, show_default=True,
              help="Seconds between automatic seals; 0 disables the sealer.")
@click.option("--test-mode", is_flag=True, default=False,
              help="Enable fault injection endpoints.")
def serve(data_dir, host, port, seal_interval, test_mode):
    """Run the HTTP service over a data directory."""
    import uvicorn

    from .ledger.node import Node
    from .service.app import create_app
    from .service.bootstrap import load_harness

    if seal_interval < 0:
        _fail({"error": "BadConfig", "detail": "seal interval must be >= 0"})
    node = Node.open(data_dir)
    harness = load_harness(data_dir, node, test_mode=test_mode)
    app = create_app(node, harness, seal_interval=seal_interval)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        node.close()


# -- accounts and roles ----------------------------------------------------------------


@main.group()
def account():
    """On-chain identities."""


@account.command("register")
@click.option("--pubkey", default=None, help="Hex public key to register.")
@click.option("--new-key-file", type=click.Path(path_type=Path), default=None,
              help="Generate a keypair here and register its public key.")
@click.option("--kind", type=click.Choice(["human", "organization", "agent"]),
              default="human", show_default=True)
@click.option("--metadata", default="")
@click.option("--owner", default=None, help="Owner account id (agents only).")
@click.option("--attested", is_flag=True, default=False)
@pass_client
def account_register(client, pubkey, new_key_file, kind, metadata, owner, attested):
    if (pubkey is None) == (new_key_file is None):
        _fail({"error": "BadArgs", "detail": "pass exactly one of --pubkey/--new-key-file"})
    if new_key_file is not None:
        keypair = Keypair.generate()
        keypair.save(new_key_file)
        pubkey = keypair.pubkey_hex
    command = {"type": "register_account", "pubkey": pubkey, "kind": kind,
               "metadata": metadata}
    if owner:
        command["owner"] = owner
    if attested:
        command["attested"] = True
    receipt = client.submit_and_wait(command)
    from .crypto import account_id_for_pubkey

    _echo({"account_id": account_id_for_pubkey(pubkey), **receipt})


@account.command("show")
@click.argument("account_id")
@pass_client
def account_show(client, account_id):
    _echo(client.get(f"/accounts/{account_id}"))


@main.group()
def role():
    """Role grants and revocations."""


def _role_command(client, target, role_name, op):
    _echo(client.submit_and_wait({"type": "set_role", "target": target,
                                  "role": role_name, "op": op}))


@role.command("grant")
@click.argument("target")
@click.argument("role_name", type=click.Choice(ROLES))
@pass_client
def role_grant(client, target, role_name):
    _role_command(client, target, role_name, "grant")


@role.command("revoke")
@click.argument("target")
@click.argument("role_name", type=click.Choice(ROLES))
@pass_client
def role_revoke(client, target, role_name):
    _role_command(client, target, role_name, "revoke")


# -- agreements and consent ---------------------------------------------------------------


def _terms_hash(terms_file, terms_hash):
    if (terms_file is None) == (terms_hash is None):
        _fail({"error": "BadArgs", "detail": "pass exactly one of --terms-file/--terms-hash"})
    if terms_file is not None:
        return sha256_hex(Path(terms_file).read_bytes())
    return terms_hash


@main.group()
def agreement():
    """IP/consent agreements gating service use."""


@agreement.command("deploy")
@click.option("--terms-file", type=click.Path(exists=True), default=None)
@click.option("--terms-hash", default=None)
@click.option("--require", "required", multiple=True, type=click.Choice(ROLES),
              required=True)
@pass_client
def agreement_deploy(client, terms_file, terms_hash, required):
    digest = _terms_hash(terms_file, terms_hash)
    command = {"type": "deploy_agreement", "terms_hash": digest,
               "required_roles": sorted(set(required))}
    body = client.signed_body(command, {"terms_hash": digest,
                                        "required_roles": command["required_roles"]})
    receipt = client.post("/agreements", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@agreement.command("sign")
@click.argument("agreement_id", type=int)
@pass_client
def agreement_sign(client, agreement_id):
    terms = client.get(f"/agreements/{agreement_id}")["terms_hash"]
    over_terms = client.keypair.sign(bytes.fromhex(terms))
    command = {"type": "sign_agreement", "agreement_id": agreement_id,
               "signature": over_terms}
    body = client.signed_body(command, {"signature_over_terms": over_terms})
    receipt = client.post(f"/agreements/{agreement_id}/signatures", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@agreement.command("show")
@click.argument("agreement_id", type=int)
@pass_client
def agreement_show(client, agreement_id):
    _echo(client.get(f"/agreements/{agreement_id}"))


@main.group()
def consent():
    """User consent records."""


@consent.command("grant")
@click.option("--scope", required=True)
@click.option("--granted-at", type=int, default=None)
@pass_client
def consent_grant(client, scope, granted_at):
    granted_at = granted_at if granted_at is not None else int(time.time())
    command = {"type": "record_consent", "scope": scope, "granted_at": granted_at}
    body = client.signed_body(command, {"scope": scope, "granted_at": granted_at})
    receipt = client.post("/consents", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@consent.command("revoke")
@click.argument("consent_id", type=int)
@click.option("--revoked-at", type=int, default=None)
@pass_client
def consent_revoke(client, consent_id, revoked_at):
    revoked_at = revoked_at if revoked_at is not None else int(time.time())
    _echo(client.submit_and_wait({"type": "revoke_consent", "consent_id": consent_id,
                                  "revoked_at": revoked_at}))


# -- anchors --------------------------------------------------------------------------------


@main.group()
def anchor():
    """Data-store Merkle anchors."""


@anchor.command("submit")
@click.option("--source", "source_id", required=True)
@click.option("--from-dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Compute the root over this directory's files.")
@click.option("--root", default=None)
@click.option("--count", type=int, default=None)
@pass_client
def anchor_submit(client, source_id, from_dir, root, count):
    if from_dir is not None:
        files = sorted(p for p in Path(from_dir).iterdir() if p.is_file())
        leaves = [sha256_hex(p.read_bytes()) for p in files]
        root = MerkleTree(leaves).root
        count = len(leaves)
    if root is None or count is None:
        _fail({"error": "BadArgs", "detail": "pass --from-dir or both --root/--count"})
    command = {"type": "anchor_snapshot", "source_id": source_id,
               "merkle_root": root, "item_count": count}
    body = client.signed_body(command, {"source_id": source_id,
                                        "merkle_root": root, "item_count": count})
    receipt = client.post("/anchors", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@anchor.command("list")
@click.option("--source", "source_id", default=None)
@pass_client
def anchor_list(client, source_id):
    params = {"source_id": source_id} if source_id else None
    _echo(client.get("/anchors", params=params,
                     as_account=client.keypair.account_id))


# -- tasks and audits ------------------------------------------------------------------------


@main.group()
def task():
    """Pipeline harness tasks."""


@task.command("setup")
@pass_client
def task_setup(client):
    """Register the service's harness component accounts (provider key)."""
    info = client.get("/harness/info")
    provider_id = client.keypair.account_id
    registered = {}
    for name, component in info["components"].items():
        if component["registered"]:
            registered[name] = component["account_id"]
            continue
        receipt = client.submit_and_wait({
            "type": "register_account", "pubkey": component["pubkey"],
            "kind": "agent", "metadata": f"harness {name}", "owner": provider_id,
        })
        registered[name] = component["account_id"]
    _echo({"components": registered})


@task.command("run")
@click.argument("prompt")
@click.option("--agreement", "agreement_id", type=int, required=True)
@click.option("--consent", "consent_id", type=int, required=True)
@click.option("--ruleset", "ruleset_id", default="default", show_default=True)
@click.option("--k", "retrieval_k", type=int, default=2, show_default=True)
@click.option("--tool", "tools", multiple=True)
@pass_client
def task_run(client, prompt, agreement_id, consent_id, ruleset_id, retrieval_k, tools):
    config = {
        "agreement_id": agreement_id, "consent_id": consent_id,
        "ruleset_id": ruleset_id, "retrieval_k": retrieval_k,
        "tools": list(tools),
    }
    keypair = client.keypair
    payload = canonical_bytes({
        "config": config, "prompt_hash": sha256_hex(prompt.encode("utf-8")),
        "user": keypair.account_id,
    })
    _echo(client.post("/tasks", {
        "user": keypair.account_id, "prompt": prompt, "config": config,
        "signature": keypair.sign(payload),
    }))


@main.group()
def audit():
    """Audit reconstruction."""


@audit.command("task")
@click.argument("task_id")
@pass_client
def audit_task(client, task_id):
    _echo(client.get(f"/audits/{task_id}", as_account=client.keypair.account_id))


# -- cases and votes ----------------------------------------------------------------------------


@main.group()
def case():
    """Flagged response cases."""


@case.command("list")
@click.option("--status", default=None)
@pass_client
def case_list(client, status):
    params = {"status": status} if status else None
    _echo(client.get("/cases", params=params, as_account=client.keypair.account_id))


@case.command("show")
@click.argument("case_id", type=int)
@pass_client
def case_show(client, case_id):
    _echo(client.get(f"/cases/{case_id}", as_account=client.keypair.account_id))


@case.command("ballot")
@click.argument("case_id", type=int)
@click.option("--scheme", type=click.Choice([
    "one-verifier-one-vote", "token-weighted", "provider-weighted"]),
    default="one-verifier-one-vote", show_default=True)
@click.option("--quorum", type=int, default=1, show_default=True)
@click.option("--window", type=int, default=3600, show_default=True)
@click.option("--provider-weight", type=int, default=1, show_default=True)
@click.option("--early-finalize", is_flag=True, default=False)
@click.option("--opened-at", type=int, default=None)
@pass_client
def case_ballot(client, case_id, scheme, quorum, window, provider_weight,
                early_finalize, opened_at):
    opened_at = opened_at if opened_at is not None else int(time.time())
    fields = {"scheme": scheme, "quorum": quorum, "window": window,
              "provider_weight": provider_weight, "early_finalize": early_finalize,
              "opened_at": opened_at}
    command = {"type": "open_ballot", "case_id": case_id, **fields}
    body = client.signed_body(command, fields)
    receipt = client.post(f"/cases/{case_id}/ballot", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@case.command("finalize")
@click.argument("case_id", type=int)
@click.option("--now", type=int, default=None)
@pass_client
def case_finalize(client, case_id, now):
    now = now if now is not None else int(time.time())
    command = {"type": "finalize_case", "case_id": case_id, "now": now}
    body = client.signed_body(command, {"now": now})
    receipt = client.post(f"/cases/{case_id}/finalize", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@case.command("adjudicate")
@click.argument("case_id", type=int)
@click.argument("verdict", type=click.Choice(["upheld", "overturned"]))
@pass_client
def case_adjudicate(client, case_id, verdict):
    _echo(client.submit_and_wait({"type": "adjudicate", "case_id": case_id,
                                  "verdict": verdict}))


@main.group()
def vote():
    """Verifier ballots."""


@vote.command("cast")
@click.argument("case_id", type=int)
@click.argument("verdict", type=click.Choice(["uphold", "overturn"]))
@click.option("--cast-at", type=int, default=None)
@pass_client
def vote_cast(client, case_id, verdict, cast_at):
    cast_at = cast_at if cast_at is not None else int(time.time())
    command = {"type": "cast_vote", "case_id": case_id, "verdict": verdict,
               "cast_at": cast_at}
    body = client.signed_body(command, {"verdict": verdict, "cast_at": cast_at})
    receipt = client.post(f"/cases/{case_id}/votes", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


# -- tokens ----------------------------------------------------------------------------------------


@main.group()
def tokens():
    """Token ledger operations."""


@tokens.command("mint")
@click.argument("to")
@click.argument("amount", type=int)
@pass_client
def tokens_mint(client, to, amount):
    _echo(client.submit_and_wait({"type": "mint", "to": to, "amount": amount}))


@tokens.command("transfer")
@click.argument("to")
@click.argument("amount", type=int)
@pass_client
def tokens_transfer(client, to, amount):
    _echo(client.submit_and_wait({"type": "transfer", "to": to, "amount": amount}))


@tokens.command("lock")
@click.argument("account_id")
@click.argument("amount", type=int)
@click.option("--reason", default="")
@pass_client
def tokens_lock(client, account_id, amount, reason):
    _echo(client.submit_and_wait({"type": "lock", "account": account_id,
                                  "amount": amount, "reason": reason}))


@tokens.command("unlock")
@click.argument("account_id")
@click.argument("amount", type=int)
@pass_client
def tokens_unlock(client, account_id, amount):
    _echo(client.submit_and_wait({"type": "unlock", "account": account_id,
                                  "amount": amount}))


@tokens.command("slash")
@click.argument("account_id")
@click.argument("amount", type=int)
@click.option("--reason", default="")
@pass_client
def tokens_slash(client, account_id, amount, reason):
    _echo(client.submit_and_wait({"type": "slash", "account": account_id,
                                  "amount": amount, "reason": reason}))


@tokens.command("balance")
@click.argument("account_id")
@pass_client
def tokens_balance(client, account_id):
    _echo(client.get(f"/accounts/{account_id}/balance"))


@tokens.command("export")
@pass_client
def tokens_export(client):
    _echo(client.get("/tokens/export"))


@tokens.command("settle")
@click.argument("epoch", type=int)
@pass_client
def tokens_settle(client, epoch):
    _echo(client.submit_and_wait({"type": "settle_epoch", "epoch": epoch}))


@tokens.command("claim")
@click.argument("case_id", type=int)
@click.argument("amount", type=int)
@pass_client
def tokens_claim(client, case_id, amount):
    command = {"type": "register_claim", "case_id": case_id, "amount": amount}
    body = client.signed_body(command, {"case_id": case_id, "amount": amount})
    receipt = client.post("/claims", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@tokens.command("confirm-claim")
@click.argument("claim_id", type=int)
@pass_client
def tokens_confirm_claim(client, claim_id):
    command = {"type": "confirm_claim", "claim_id": claim_id}
    body = client.signed_body(command, {})
    receipt = client.post(f"/claims/{claim_id}/confirm", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@tokens.command("pay-claim")
@click.argument("claim_id", type=int)
@pass_client
def tokens_pay_claim(client, claim_id):
    command = {"type": "pay_claim", "claim_id": claim_id}
    body = client.signed_body(command, {})
    receipt = client.post(f"/claims/{claim_id}/pay", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


# -- marketplace --------------------------------------------------------------------------------------


@main.group()
def market():
    """Marketplace of systems, models, and tools."""


@market.command("list-offering")
@click.option("--subject", required=True)
@click.option("--kind", type=click.Choice(["system", "model", "tool"]), required=True)
@click.option("--price", type=int, required=True)
@click.option("--time", "processing_time", type=int, required=True)
@click.option("--ctx", "context_window", type=int, required=True)
@pass_client
def market_list_offering(client, subject, kind, price, processing_time,
                         context_window):
    metrics = {"price": price, "processing_time": processing_time,
               "context_window": context_window}
    command = {"type": "list_offering", "subject": subject, "kind": kind,
               "metrics": metrics}
    body = client.signed_body(command, {"subject": subject, "kind": kind,
                                        "metrics": metrics})
    receipt = client.post("/market/offerings", body)
    _echo(client.wait_sealed(receipt["tx_id"]))


@market.command("offerings")
@click.option("--kind", default=None)
@click.option("--all", "include_inactive", is_flag=True, default=False)
@pass_client
def market_offerings(client, kind, include_inactive):
    params = {"active_only": not include_inactive}
    if kind:
        params["kind"] = kind
    _echo(client.get("/market/offerings", params=params))


@market.command("select")
@click.option("--w-price", type=float, default=1.0, show_default=True)
@click.option("--w-time", type=float, default=1.0, show_default=True)
@click.option("--w-ctx", type=float, default=1.0, show_default=True)
@click.option("--max-price", type=int, default=None)
@click.option("--max-time", type=int, default=None)
@click.option("--min-ctx", type=int, default=None)
@pass_client
def market_select(client, w_price, w_time, w_ctx, max_price, max_time, min_ctx):
    requirement = {"weights": {"price": w_price, "processing_time": w_time,
                               "context_window": w_ctx}}
    if max_price is not None:
        requirement["max_price"] = max_price
    if max_time is not None:
        requirement["max_processing_time"] = max_time
    if min_ctx is not None:
        requirement["min_context_window"] = min_ctx
    _echo(client.post("/market/select", requirement))


# -- chain -----------------------------------------------------------------------------------------------


@main.group()
def chain():
    """Chain inspection and verification."""


@chain.command("verify")
@click.option("--from", "from_height", type=int, default=0, show_default=True)
@click.option("--to", "to_height", type=int, default=None)
@pass_client
def chain_verify(client, from_height, to_height):
    params = {"from": from_height}
    if to_height is not None:
        params["to"] = to_height
    report = client.get("/chain/verify", params=params)
    _echo(report)
    if report["violations"]:
        sys.exit(1)


@chain.command("tip")
@pass_client
def chain_tip(client):
    _echo(client.get("/chain/tip"))


@chain.command("block")
@click.argument("height", type=int)
@pass_client
def chain_block(client, height):
    _echo(client.get(f"/blocks/{height}"))


@chain.command("proof")
@click.argument("tx_id")
@pass_client
def chain_proof(client, tx_id):
    _echo(client.get(f"/chain/proof/{tx_id}"))


if __name__ == "__main__":
    main()
