"""Ed25519 authentication keys: DID authentication, record and list signing.

An entity's weave address is the content id of its raw public key, which
is also the method-specific part of its ``did:arweave`` identifier.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .encoding import content_id
from .errors import InvalidKey

ED25519_TYPE = "Ed25519VerificationKey2018"
PUBLIC_KEY_SIZE = 32


def load_public_key(raw: bytes) -> Ed25519PublicKey:
    if not isinstance(raw, (bytes, bytearray)) or len(raw) != PUBLIC_KEY_SIZE:
        raise InvalidKey("Ed25519 public key must be 32 bytes")
    try:
        return Ed25519PublicKey.from_public_bytes(bytes(raw))
    except ValueError as exc:
        raise InvalidKey(str(exc)) from None


def address_of(public_key: bytes) -> str:
    load_public_key(public_key)
    return content_id(bytes(public_key))


def verify_signature(public_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        load_public_key(public_key).verify(signature, message)
    except (InvalidKey, InvalidSignature, TypeError, ValueError):
        return False
    return True


@dataclass(frozen=True)
class AuthKeyPair:
    private_bytes: bytes
    public_bytes: bytes

    @classmethod
    def generate(cls, seed: bytes | None = None) -> "AuthKeyPair":
        seed = os.urandom(32) if seed is None else seed
        if len(seed) != 32:
            raise InvalidKey("Ed25519 seed must be 32 bytes")
        sk = Ed25519PrivateKey.from_private_bytes(seed)
        pub = sk.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
        return cls(bytes(seed), pub)

    @property
    def address(self) -> str:
        return content_id(self.public_bytes)

    def sign(self, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(self.private_bytes).sign(message)

    def __repr__(self):
        return f"AuthKeyPair(address={self.address!r})"
