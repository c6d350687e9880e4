"""Data-directory layout and harness construction for the service.

    <data-dir>/
      blocks.log, tip.json, snapshot.json, LOCK     (ledger)
      harness/keys/{recorder,guardrail,fm,tool}.json (component keys)
      harness/ruleset.json                           (guardrail rules)
      harness/store/*.txt                            (mock data lake)

Harness component keys are service-side by design: the recorder, guardrail,
and FM connector are parts of the system. User and provider keys never
enter the data dir.
"""

from __future__ import annotations

import json
from pathlib import Path

from .. import errors
from ..canonical import canonical_bytes
from ..crypto import Keypair
from ..harness.pipeline import Harness
from ..harness.rules import DEFAULT_RULES
from ..harness.store import MockStore
from ..ledger.node import Node
from ..state import default_genesis_config

COMPONENTS = ("recorder", "guardrail", "fm", "tool")

DEMO_DOCUMENTS = {
    "climate.txt": "The climate outlook for the region is mild with seasonal rain.",
    "finance.txt": "Market prices and finance data for governance tokens.",
    "medicine.txt": "Medical guidance about treatment schedules and medicine safety.",
    "gaming.txt": "Strategy notes for cooperative gaming and fair play.",
}

DEFAULT_SOURCE_ID = "local-data-lake"


def init_data_dir(data_dir: str | Path, provider: Keypair,
                  epoch_length: int | None = None) -> dict:
    """Create genesis plus the harness fixtures; returns component ids."""
    data_dir = Path(data_dir)
    config = default_genesis_config(provider.pubkey_hex)
    if epoch_length is not None:
        config["epoch_length"] = epoch_length
    node = Node.init(data_dir, config)
    node.close()

    keys_dir = data_dir / "harness" / "keys"
    keys_dir.mkdir(parents=True)
    components = {}
    for name in COMPONENTS:
        keypair = Keypair.generate()
        keypair.save(keys_dir / f"{name}.json")
        components[name] = keypair.account_id

    harness_dir = data_dir / "harness"
    (harness_dir / "ruleset.json").write_bytes(canonical_bytes(DEFAULT_RULES))
    store_dir = harness_dir / "store"
    store_dir.mkdir()
    for filename, text in DEMO_DOCUMENTS.items():
        (store_dir / filename).write_text(text, encoding="utf-8")
    return {
        "provider": provider.account_id,
        "components": components,
        "data_dir": str(data_dir),
    }


def harness_keypairs(data_dir: str | Path) -> dict[str, Keypair]:
    keys_dir = Path(data_dir) / "harness" / "keys"
    if not keys_dir.is_dir():
        raise errors.BadConfig(f"{keys_dir} is missing; run fm-govern init")
    return {name: Keypair.load(keys_dir / f"{name}.json") for name in COMPONENTS}


def load_harness(data_dir: str | Path, node: Node, test_mode: bool = False,
                 clock=None) -> Harness:
    data_dir = Path(data_dir)
    keys = harness_keypairs(data_dir)
    ruleset_path = data_dir / "harness" / "ruleset.json"
    try:
        rules = json.loads(ruleset_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise errors.BadConfig(f"unreadable ruleset file: {exc}") from None
    store = MockStore.from_dir(data_dir / "harness" / "store", DEFAULT_SOURCE_ID)
    harness = Harness(
        node,
        recorder=keys["recorder"],
        guardrail=keys["guardrail"],
        fm=keys["fm"],
        store=store,
        rulesets={"default": rules},
        tools={"tool": keys["tool"]},
        test_mode=test_mode,
        clock=clock,
    )
    harness.adopt_anchor()
    return harness
