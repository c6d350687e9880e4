"""Merkle trees over 32-byte leaves with inclusion proofs.

Conventions: pair hash is SHA-256(left || right) over the raw 32-byte
digests; a level with an odd number of nodes duplicates its last node.
The root of an empty leaf set is the all-zero hash. Proof paths list the
sibling hash plus which side the sibling sits on, leaf upward.

Verification additionally requires each step's side to agree with the bit
of the leaf index at that level. Without that check, a side flip on a
self-sibling step (a duplicated last leaf) folds to the same root, so
proofs would not be canonical.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import ZERO_HASH, sha256


@dataclass(frozen=True)
class ProofStep:
    sibling: str  # hex hash of the sibling node
    side: str  # "left" or "right": where the sibling sits in the pair

    def to_json(self) -> dict:
        return {"sibling": self.sibling, "side": self.side}

    @classmethod
    def from_json(cls, obj: dict) -> "ProofStep":
        if set(obj) != {"sibling", "side"} or obj["side"] not in ("left", "right"):
            raise ValueError(f"malformed proof step: {obj!r}")
        return cls(sibling=obj["sibling"], side=obj["side"])


@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    path: tuple[ProofStep, ...]

    def to_json(self) -> dict:
        return {"leaf_index": self.leaf_index, "path": [s.to_json() for s in self.path]}

    @classmethod
    def from_json(cls, obj: dict) -> "MerkleProof":
        return cls(
            leaf_index=int(obj["leaf_index"]),
            path=tuple(ProofStep.from_json(s) for s in obj["path"]),
        )


def _pair(left: bytes, right: bytes) -> bytes:
    return sha256(left + right)


class MerkleTree:
    """Tree built once from hex leaf hashes; yields root and proofs."""

    def __init__(self, leaves_hex: list[str]):
        self.leaves = [bytes.fromhex(h) for h in leaves_hex]
        self.levels: list[list[bytes]] = []
        if self.leaves:
            level = list(self.leaves)
            self.levels.append(level)
            while len(level) > 1:
                if len(level) % 2 == 1:
                    level = level + [level[-1]]
                    self.levels[-1] = level
                nxt = [_pair(level[i], level[i + 1]) for i in range(0, len(level), 2)]
                self.levels.append(nxt)
                level = nxt

    @property
    def root(self) -> str:
        if not self.levels:
            return ZERO_HASH
        return self.levels[-1][0].hex()

    def proof(self, leaf_index: int) -> MerkleProof:
        if not self.leaves or not 0 <= leaf_index < len(self.leaves):
            raise IndexError(f"leaf index {leaf_index} out of range")
        path = []
        index = leaf_index
        for level in self.levels[:-1]:
            if index % 2 == 0:
                sibling, side = level[index + 1], "right"
            else:
                sibling, side = level[index - 1], "left"
            path.append(ProofStep(sibling=sibling.hex(), side=side))
            index //= 2
        return MerkleProof(leaf_index=leaf_index, path=tuple(path))


def merkle_root(leaves_hex: list[str]) -> str:
    return MerkleTree(leaves_hex).root


def verify_proof(leaf_hex: str, proof: MerkleProof, root_hex: str) -> bool:
    """True iff folding the leaf along the proof path reproduces the root."""
    try:
        node = bytes.fromhex(leaf_hex)
        target = bytes.fromhex(root_hex)
    except ValueError:
        return False
    if len(node) != 32 or len(target) != 32:
        return False
    index = proof.leaf_index
    if not isinstance(index, int) or index < 0:
        return False
    for step in proof.path:
        try:
            sib = bytes.fromhex(step.sibling)
        except ValueError:
            return False
        if len(sib) != 32:
            return False
        expected_side = "right" if index % 2 == 0 else "left"
        if step.side != expected_side:
            return False
        if step.side == "left":
            node = _pair(sib, node)
        else:
            node = _pair(node, sib)
        index //= 2
    return index == 0 and node == target
