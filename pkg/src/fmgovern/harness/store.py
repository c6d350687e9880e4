"""Merkle-committed mock document store standing in for the data layer.

Retrieval similarity is a deterministic case-folded token-overlap count
(ties broken by doc_id), replacing embedding search. Proof paths come from
the tree built at anchor time while leaf hashes come from the documents as
they are now, so post-anchor tampering makes proofs fail exactly as an
audit requires.
"""

from __future__ import annotations

import re
from pathlib import Path

from .. import errors
from ..canonical import sha256_hex
from ..merkle import MerkleProof, MerkleTree

_TOKEN = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN.findall(text.casefold()))


class MockStore:
    def __init__(self, source_id: str, documents: list[tuple[str, bytes]]):
        self.source_id = source_id
        self.documents = sorted(documents, key=lambda d: d[0])
        self.anchored_tree: MerkleTree | None = None
        self.anchor_id: int | None = None
        self.anchor_epoch: int | None = None

    @classmethod
    def from_dir(cls, path: str | Path, source_id: str) -> "MockStore":
        docs = []
        for file in sorted(Path(path).iterdir()):
            if file.is_file():
                docs.append((file.name, file.read_bytes()))
        return cls(source_id, docs)

    # -- commitment -------------------------------------------------------

    def doc_hashes(self) -> list[str]:
        return [sha256_hex(data) for _, data in self.documents]

    def build_commitment(self) -> tuple[str, int]:
        """(merkle_root, item_count) over the current documents."""
        tree = MerkleTree(self.doc_hashes())
        return tree.root, len(self.documents)

    def mark_anchored(self, anchor_id: int, epoch: int):
        """Pin the tree that was committed on-chain; proofs come from it."""
        self.anchored_tree = MerkleTree(self.doc_hashes())
        self.anchor_id = anchor_id
        self.anchor_epoch = epoch

    # -- retrieval ---------------------------------------------------------

    def retrieve(self, query: str, k: int) -> list[dict]:
        """Top-k by token overlap, with proofs against the anchored tree."""
        if self.anchored_tree is None:
            raise errors.NoAnchor(f"store {self.source_id!r} was never anchored")
        query_tokens = _tokens(query)
        scored = []
        for index, (doc_id, data) in enumerate(self.documents):
            overlap = len(query_tokens & _tokens(data.decode("utf-8", "replace")))
            scored.append((-overlap, doc_id, index))
        scored.sort()
        results = []
        for neg_overlap, doc_id, index in scored[:max(k, 0)]:
            results.append({
                "doc_id": doc_id,
                "score": -neg_overlap,
                "item_hash": sha256_hex(self.documents[index][1]),
                "proof": self.anchored_tree.proof(index),
            })
        return results

    # -- fault injection ------------------------------------------------------

    def tamper(self):
        """Flip one byte of the first document without re-anchoring."""
        doc_id, data = self.documents[0]
        mutated = bytearray(data or b"\x00")
        mutated[0] ^= 0x01
        self.documents[0] = (doc_id, bytes(mutated))
