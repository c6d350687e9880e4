import hashlib
import random

import pytest

from fmgovern.canonical import ZERO_HASH
from fmgovern.merkle import MerkleProof, MerkleTree, ProofStep, merkle_root, verify_proof

from .oracles import oracle_fold, oracle_merkle_proof, oracle_merkle_root


def _leaves(n: int) -> list[bytes]:
    return [hashlib.sha256(bytes([i])).digest() for i in range(n)]


def H(x: bytes) -> bytes:
    return hashlib.sha256(x).digest()


def test_empty_tree_root_is_zero():
    assert merkle_root([]) == ZERO_HASH


def test_single_leaf_root_is_leaf_and_proof_empty():
    leaf = H(b"only")
    tree = MerkleTree([leaf.hex()])
    assert tree.root == leaf.hex()
    proof = tree.proof(0)
    assert proof.path == ()
    assert verify_proof(leaf.hex(), proof, leaf.hex())


def test_three_leaf_root_hand_computed():
    # root of [a, b, c] = H(H(a||b) || H(c||c)) under last-leaf duplication
    a, b, c = _leaves(3)
    expected = H(H(a + b) + H(c + c))
    assert merkle_root([a.hex(), b.hex(), c.hex()]) == expected.hex()


def test_three_leaf_proof_hand_computed():
    a, b, c = _leaves(3)
    tree = MerkleTree([x.hex() for x in (a, b, c)])
    proof = tree.proof(0)
    assert [(s.sibling, s.side) for s in proof.path] == [
        (b.hex(), "right"),
        (H(c + c).hex(), "right"),
    ]
    assert verify_proof(a.hex(), proof, tree.root)


@pytest.mark.parametrize("n", range(1, 9))
def test_roots_match_oracle(n):
    leaves = _leaves(n)
    assert merkle_root([x.hex() for x in leaves]) == oracle_merkle_root(leaves).hex()


@pytest.mark.parametrize("n", range(1, 9))
def test_all_proofs_match_oracle_and_verify(n):
    leaves = _leaves(n)
    tree = MerkleTree([x.hex() for x in leaves])
    for i in range(n):
        proof = tree.proof(i)
        oracle_path = oracle_merkle_proof(leaves, i)
        assert [(bytes.fromhex(s.sibling), s.side) for s in proof.path] == oracle_path
        assert oracle_fold(leaves[i], oracle_path) == bytes.fromhex(tree.root)
        assert verify_proof(leaves[i].hex(), proof, tree.root)


@pytest.mark.parametrize("n", range(1, 9))
def test_every_single_element_mutation_fails(n):
    leaves = _leaves(n)
    tree = MerkleTree([x.hex() for x in leaves])
    for i in range(n):
        proof = tree.proof(i)
        for k in range(len(proof.path)):
            # flip the side
            mutated = list(proof.path)
            step = mutated[k]
            flipped = "left" if step.side == "right" else "right"
            mutated[k] = ProofStep(sibling=step.sibling, side=flipped)
            bad = MerkleProof(leaf_index=i, path=tuple(mutated))
            assert not verify_proof(leaves[i].hex(), bad, tree.root)
            # corrupt the sibling hash
            mutated = list(proof.path)
            sib = bytearray(bytes.fromhex(step.sibling))
            sib[0] ^= 0xFF
            mutated[k] = ProofStep(sibling=bytes(sib).hex(), side=step.side)
            bad = MerkleProof(leaf_index=i, path=tuple(mutated))
            assert not verify_proof(leaves[i].hex(), bad, tree.root)
        # a wrong leaf index also fails, for every other in-range index
        for j in range(n):
            if j != i:
                bad = MerkleProof(leaf_index=j, path=proof.path)
                assert not verify_proof(leaves[i].hex(), bad, tree.root)


def test_wrong_leaf_and_wrong_root_fail():
    leaves = _leaves(4)
    tree = MerkleTree([x.hex() for x in leaves])
    proof = tree.proof(2)
    assert not verify_proof(leaves[3].hex(), proof, tree.root)
    assert not verify_proof(leaves[2].hex(), proof, ZERO_HASH)


def test_verify_rejects_malformed_hex():
    assert not verify_proof("zz", MerkleProof(0, ()), ZERO_HASH)
    assert not verify_proof(ZERO_HASH, MerkleProof(0, (ProofStep("xx", "left"),)), ZERO_HASH)


def test_random_larger_trees_match_oracle():
    rng = random.Random(7)
    for _ in range(20):
        n = rng.randint(9, 40)
        leaves = [hashlib.sha256(rng.randbytes(8)).digest() for _ in range(n)]
        tree = MerkleTree([x.hex() for x in leaves])
        assert tree.root == oracle_merkle_root(leaves).hex()
        i = rng.randrange(n)
        assert verify_proof(leaves[i].hex(), tree.proof(i), tree.root)
