"""BBS multi-message signatures with selective-disclosure proofs."""

from . import backend
from .scheme import (
    MAX_MESSAGES,
    ORDER,
    IndexOutOfRange,
    InvalidKey,
    InvalidSignature,
    Proof,
    PublicKey,
    SecretKey,
    SeedTooShort,
    Signature,
    TooManyMessages,
    check_proof,
    check_signature,
    generators,
    hash_to_scalar,
    keygen,
    message_to_scalar,
    messages_to_scalars,
    proof_gen,
    proof_size,
    proof_verify,
    sign,
    sk_to_pk,
    verify,
)

__all__ = [
    "MAX_MESSAGES", "ORDER", "IndexOutOfRange", "InvalidKey", "InvalidSignature", "Proof",
    "PublicKey", "SecretKey", "SeedTooShort", "Signature", "TooManyMessages", "backend",
    "check_proof", "check_signature", "generators", "hash_to_scalar", "keygen",
    "message_to_scalar", "messages_to_scalars", "proof_gen", "proof_size", "proof_verify",
    "sign", "sk_to_pk", "verify",
]
