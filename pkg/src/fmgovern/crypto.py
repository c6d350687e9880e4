"""Ed25519 keys and signatures.

Account identity is the SHA-256 of the 32-byte public key; signatures are
64-byte detached Ed25519 over whatever byte string the caller passes
(canonical transaction bodies, agreement terms hashes). All values cross
module boundaries as lowercase hex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .canonical import sha256_hex


def account_id_for_pubkey(pubkey_hex: str) -> str:
    return sha256_hex(bytes.fromhex(pubkey_hex))


@dataclass
class Keypair:
    """A local signing identity. The private part never goes on-chain."""

    seed_hex: str
    pubkey_hex: str

    @classmethod
    def generate(cls) -> "Keypair":
        priv = Ed25519PrivateKey.generate()
        seed = priv.private_bytes_raw()
        pub = priv.public_key().public_bytes_raw()
        return cls(seed_hex=seed.hex(), pubkey_hex=pub.hex())

    @classmethod
    def from_seed(cls, seed_hex: str) -> "Keypair":
        priv = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(seed_hex))
        pub = priv.public_key().public_bytes_raw()
        return cls(seed_hex=seed_hex, pubkey_hex=pub.hex())

    @property
    def account_id(self) -> str:
        return account_id_for_pubkey(self.pubkey_hex)

    def sign(self, data: bytes) -> str:
        priv = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(self.seed_hex))
        return priv.sign(data).hex()

    def save(self, path: str | Path):
        payload = {
            "account_id": self.account_id,
            "pubkey": self.pubkey_hex,
            "privkey": self.seed_hex,
        }
        p = Path(path)
        p.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        p.chmod(0o600)

    @classmethod
    def load(cls, path: str | Path) -> "Keypair":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        kp = cls.from_seed(payload["privkey"])
        if payload.get("pubkey") and payload["pubkey"] != kp.pubkey_hex:
            raise ValueError(f"key file {path} is inconsistent")
        return kp


def verify_signature(pubkey_hex: str, data: bytes, signature_hex: str) -> bool:
    try:
        sig = bytes.fromhex(signature_hex)
        pub = Ed25519PublicKey.from_public_bytes(bytes.fromhex(pubkey_hex))
    except ValueError:
        return False
    if len(sig) != 64:
        return False
    try:
        pub.verify(sig, data)
        return True
    except InvalidSignature:
        return False
