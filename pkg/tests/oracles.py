"""Independent oracles used across the test suite.

These deliberately avoid the production code paths they check: the tree
oracle recurses top-down instead of building levels bottom-up, and the
tally oracle recomputes ballots from raw vote lists.
"""

from __future__ import annotations

import hashlib


def oracle_merkle_root(leaves: list[bytes]) -> bytes:
    """Recursive Merkle root: split at the largest power of two? No --
    mirror the level-duplication convention by recursing over padded lists."""
    if not leaves:
        return b"\x00" * 32
    if len(leaves) == 1:
        return leaves[0]
    if len(leaves) % 2 == 1:
        leaves = leaves + [leaves[-1]]
    nxt = []
    for i in range(0, len(leaves), 2):
        nxt.append(hashlib.sha256(leaves[i] + leaves[i + 1]).digest())
    return oracle_merkle_root(nxt)


def oracle_merkle_proof(leaves: list[bytes], index: int) -> list[tuple[bytes, str]]:
    """Proof path computed by brute force: at each level, pad, grab sibling."""
    path = []
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2 == 1:
            level = level + [level[-1]]
        if index % 2 == 0:
            path.append((level[index + 1], "right"))
        else:
            path.append((level[index - 1], "left"))
        nxt = []
        for i in range(0, len(level), 2):
            nxt.append(hashlib.sha256(level[i] + level[i + 1]).digest())
        level = nxt
        index //= 2
    return path


def oracle_fold(leaf: bytes, path: list[tuple[bytes, str]]) -> bytes:
    node = leaf
    for sibling, side in path:
        if side == "left":
            node = hashlib.sha256(sibling + node).digest()
        else:
            node = hashlib.sha256(node + sibling).digest()
    return node


def oracle_tally(votes: list[tuple[str, int]]) -> tuple[str, int, int]:
    """Brute-force ballot tally.

    votes: list of (verdict, weight). Returns (verdict, uphold, overturn)
    with the conservative tie rule: equal weight upholds the flag.
    """
    uphold = sum(w for v, w in votes if v == "uphold")
    overturn = sum(w for v, w in votes if v == "overturn")
    verdict = "upheld" if uphold >= overturn else "overturned"
    return verdict, uphold, overturn
