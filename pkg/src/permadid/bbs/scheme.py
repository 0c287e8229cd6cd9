"""BBS signatures and selective-disclosure proofs over BLS12-381.

Follows the structure of the CFRG BBS draft (hash-to-scalar messages,
"H2G_HM2S_" interface): signatures live in G1 with public keys in G2,
generators come from hash-to-curve, and proofs are Fiat-Shamir
transformed Schnorr-style proofs of knowledge of a signature over the
undisclosed messages.

Byte layouts (all scalars 32-byte big-endian, points compressed):

    public key   W                                  96 bytes
    signature    A || e                             80 bytes
    proof        Abar || Bbar || D                  3 x 48 bytes
                 || e^ || r1^ || r3^                3 x 32 bytes
                 || m^_j for each undisclosed j     U x 32 bytes
                 || challenge                       32 bytes

so a proof is 272 + 32*U bytes. Disclosed indexes are not part of the
proof bytes; the verifier supplies them with the disclosed messages and
they are bound through the challenge.

Test vectors from the draft are not reproduced here and interop with
other implementations is not claimed.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass
from hashlib import sha256
from typing import Iterable, Sequence

from py_ecc.bls.hash import expand_message_xmd

from ..errors import BbsError
from . import backend

ORDER = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001

CIPHERSUITE_ID = b"BBS_BLS12381G1_XMD:SHA-256_SSWU_RO_"
API_ID = CIPHERSUITE_ID + b"H2G_HM2S_"

HASH_TO_SCALAR_DST = API_ID + b"H2S_"
MAP_MSG_DST = API_ID + b"MAP_MSG_TO_SCALAR_AS_HASH_"
KEYGEN_DST = API_ID + b"KEYGEN_DST_"

MAX_MESSAGES = 64
MIN_SEED_LENGTH = 32

G1_SIZE = 48
G2_SIZE = 96
SCALAR_SIZE = 32
SIGNATURE_SIZE = G1_SIZE + SCALAR_SIZE
PROOF_BASE_SIZE = 3 * G1_SIZE + 4 * SCALAR_SIZE

G1_IDENTITY = bytes([0xC0]) + bytes(47)
G2_IDENTITY = bytes([0xC0]) + bytes(95)


class SeedTooShort(BbsError):
    pass


class TooManyMessages(BbsError):
    pass


class InvalidSignature(BbsError):
    pass


class IndexOutOfRange(BbsError):
    pass


class InvalidKey(BbsError):
    pass


# --------------------------------------------------------------------------
# scalars and hashing


def i2osp(value: int, length: int) -> bytes:
    return value.to_bytes(length, "big")


def scalar_bytes(s: int) -> bytes:
    return (s % ORDER).to_bytes(SCALAR_SIZE, "big")


def hash_to_scalar(msg: bytes, dst: bytes = HASH_TO_SCALAR_DST) -> int:
    """Map ``msg`` to a scalar in [1, ORDER) under domain separation ``dst``."""
    uniform = expand_message_xmd(msg, dst, 48, sha256)
    s = int.from_bytes(uniform, "big") % ORDER
    # zero occurs with probability ~2^-255; remap rather than special-case callers
    while s == 0:
        uniform = expand_message_xmd(uniform, dst, 48, sha256)
        s = int.from_bytes(uniform, "big") % ORDER
    return s


def message_to_scalar(msg: bytes) -> int:
    return hash_to_scalar(msg, MAP_MSG_DST)


def messages_to_scalars(messages: Iterable[bytes]) -> list[int]:
    return [message_to_scalar(m) for m in messages]


def _serialize(items: Iterable) -> bytes:
    """Points (bytes) verbatim, scalars as 32 bytes, indexes/counts as 8 bytes."""
    out = bytearray()
    for kind, value in items:
        if kind == "point":
            out += value
        elif kind == "scalar":
            out += scalar_bytes(value)
        else:
            out += i2osp(value, 8)
    return bytes(out)


# --------------------------------------------------------------------------
# generators


class _Generators:
    """Prefix-stable, lazily extended list of G1 generators."""

    seed_dst = API_ID + b"SIG_GENERATOR_SEED_"
    generator_dst = API_ID + b"SIG_GENERATOR_DST_"

    def __init__(self, generator_seed: bytes):
        self._lock = threading.Lock()
        self._v = expand_message_xmd(generator_seed, self.seed_dst, 48, sha256)
        self._points: list[bytes] = []

    def take(self, count: int) -> list[bytes]:
        with self._lock:
            k = backend.kernels()
            while len(self._points) < count:
                i = len(self._points) + 1
                self._v = expand_message_xmd(self._v + i2osp(i, 8), self.seed_dst, 48, sha256)
                self._points.append(k.hash_to_g1(self._v, self.generator_dst))
            return self._points[:count]


_MESSAGE_GENERATORS = _Generators(API_ID + b"MESSAGE_GENERATOR_SEED")
P1 = _Generators(API_ID + b"BP_MESSAGE_GENERATOR_SEED").take(1)[0]
P2 = backend.kernels().g2_generator()


def generators(count: int) -> tuple[bytes, list[bytes]]:
    """Return (Q1, [H_1..H_count])."""
    pts = _MESSAGE_GENERATORS.take(count + 1)
    return pts[0], pts[1:]


# --------------------------------------------------------------------------
# keys


@dataclass(frozen=True)
class SecretKey:
    sk: int

    def __post_init__(self):
        if not 0 < self.sk < ORDER:
            raise InvalidKey("secret key out of range")

    def to_bytes(self) -> bytes:
        return scalar_bytes(self.sk)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SecretKey":
        if len(data) != SCALAR_SIZE:
            raise InvalidKey("secret key must be 32 bytes")
        return cls(int.from_bytes(data, "big"))

    def __repr__(self):
        return "SecretKey(<redacted>)"


@dataclass(frozen=True)
class PublicKey:
    w: bytes

    def __post_init__(self):
        if len(self.w) != G2_SIZE or self.w == G2_IDENTITY or not backend.kernels().g2_is_valid(self.w):
            raise InvalidKey("public key is not a valid non-identity G2 point")

    def to_bytes(self) -> bytes:
        return self.w

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicKey":
        return cls(bytes(data))


def sk_to_pk(sk: SecretKey) -> PublicKey:
    return PublicKey(backend.kernels().g2_msm([P2], [scalar_bytes(sk.sk)]))


def keygen(seed: bytes, key_info: bytes = b"") -> tuple[SecretKey, PublicKey]:
    if len(seed) < MIN_SEED_LENGTH:
        raise SeedTooShort(f"seed must be at least {MIN_SEED_LENGTH} bytes, got {len(seed)}")
    sk = SecretKey(hash_to_scalar(seed + i2osp(len(key_info), 2) + key_info, KEYGEN_DST))
    return sk, sk_to_pk(sk)


# --------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class Signature:
    a: bytes
    e: int

    def to_bytes(self) -> bytes:
        return self.a + scalar_bytes(self.e)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != SIGNATURE_SIZE:
            raise ValueError("signature must be 80 bytes")
        e = int.from_bytes(data[G1_SIZE:], "big")
        if not 0 < e < ORDER:
            raise ValueError("signature scalar out of range")
        return cls(bytes(data[:G1_SIZE]), e)


def calculate_domain(pk: PublicKey, q1: bytes, hs: Sequence[bytes], header: bytes) -> int:
    dom_octs = _serialize([("int", len(hs)), ("point", q1), *(("point", h) for h in hs)]) + API_ID
    dom_input = pk.w + dom_octs + i2osp(len(header), 8) + header
    return hash_to_scalar(dom_input, HASH_TO_SCALAR_DST)


def _b_point(q1: bytes, hs: Sequence[bytes], domain: int, messages: Sequence[int]) -> bytes:
    points = [P1, q1, *hs]
    scalars = [1, domain, *messages]
    return backend.kernels().g1_msm(points, [scalar_bytes(s) for s in scalars])


def _check_messages(messages: Sequence[int], max_messages: int) -> list[int]:
    if len(messages) > max_messages:
        raise TooManyMessages(f"{len(messages)} messages exceeds limit {max_messages}")
    return [int(m) % ORDER for m in messages]


def sign(
    sk: SecretKey,
    pk: PublicKey,
    header: bytes,
    messages: Sequence[int],
    max_messages: int = MAX_MESSAGES,
) -> Signature:
    messages = _check_messages(messages, max_messages)
    q1, hs = generators(len(messages))
    domain = calculate_domain(pk, q1, hs, header)
    e = hash_to_scalar(
        _serialize([("scalar", sk.sk), *(("scalar", m) for m in messages), ("scalar", domain)])
    )
    b = _b_point(q1, hs, domain, messages)
    denom = (sk.sk + e) % ORDER
    if denom == 0:
        raise InvalidKey("degenerate signing key")
    a = backend.kernels().g1_msm([b], [scalar_bytes(pow(denom, -1, ORDER))])
    if a == G1_IDENTITY:
        raise InvalidSignature("signature point is the identity")
    return Signature(a, e)


_NEG_P2: bytes | None = None


def _neg_p2() -> bytes:
    global _NEG_P2
    if _NEG_P2 is None:
        _NEG_P2 = backend.kernels().g2_msm([P2], [scalar_bytes(ORDER - 1)])
    return _NEG_P2


def check_signature(pk: PublicKey, header: bytes, messages: Sequence[int], sig: Signature) -> str | None:
    """Return None when ``sig`` is valid, else a short failure code."""
    k = backend.kernels()
    if len(messages) > MAX_MESSAGES:
        return "too-many-messages"
    if not isinstance(sig, Signature) or len(sig.a) != G1_SIZE or not 0 < sig.e < ORDER:
        return "malformed-signature"
    if sig.a == G1_IDENTITY or not k.g1_is_valid(sig.a):
        return "invalid-point"
    messages = [int(m) % ORDER for m in messages]
    q1, hs = generators(len(messages))
    domain = calculate_domain(pk, q1, hs, header)
    b = _b_point(q1, hs, domain, messages)
    w_plus = k.g2_msm([pk.w, P2], [scalar_bytes(1), scalar_bytes(sig.e)])
    if not k.pairing_product_is_one([sig.a, b], [w_plus, _neg_p2()]):
        return "pairing-check-failed"
    return None


def verify(pk: PublicKey, header: bytes, messages: Sequence[int], sig: Signature) -> bool:
    return check_signature(pk, header, messages, sig) is None


# --------------------------------------------------------------------------
# proofs


@dataclass(frozen=True)
class Proof:
    abar: bytes
    bbar: bytes
    d: bytes
    e_hat: int
    r1_hat: int
    r3_hat: int
    m_hat: tuple[int, ...]
    challenge: int

    def to_bytes(self) -> bytes:
        out = bytearray(self.abar + self.bbar + self.d)
        for s in (self.e_hat, self.r1_hat, self.r3_hat, *self.m_hat, self.challenge):
            out += scalar_bytes(s)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Proof":
        if len(data) < PROOF_BASE_SIZE or (len(data) - 3 * G1_SIZE) % SCALAR_SIZE:
            raise ValueError("bad proof length")
        pts = [bytes(data[i * G1_SIZE : (i + 1) * G1_SIZE]) for i in range(3)]
        off = 3 * G1_SIZE
        scalars = [
            int.from_bytes(data[i : i + SCALAR_SIZE], "big") for i in range(off, len(data), SCALAR_SIZE)
        ]
        if any(not 0 < s < ORDER for s in scalars):
            raise ValueError("proof scalar out of range")
        return cls(*pts, scalars[0], scalars[1], scalars[2], tuple(scalars[3:-1]), scalars[-1])

    @property
    def undisclosed_count(self) -> int:
        return len(self.m_hat)


def proof_size(undisclosed: int) -> int:
    return PROOF_BASE_SIZE + SCALAR_SIZE * undisclosed


def _challenge(
    abar: bytes,
    bbar: bytes,
    d: bytes,
    t1: bytes,
    t2: bytes,
    domain: int,
    disclosed: Sequence[tuple[int, int]],
    presentation_header: bytes,
) -> int:
    items: list = [("int", len(disclosed))]
    for idx, msg in disclosed:
        items += [("int", idx), ("scalar", msg)]
    items += [("point", abar), ("point", bbar), ("point", d), ("point", t1), ("point", t2)]
    items.append(("scalar", domain))
    c_octs = _serialize(items) + i2osp(len(presentation_header), 8) + presentation_header
    return hash_to_scalar(c_octs, HASH_TO_SCALAR_DST)


def _random_scalar(rng) -> int:
    return rng.randrange(1, ORDER)


_SYSTEM_RNG = secrets.SystemRandom()


def proof_gen(
    pk: PublicKey,
    sig: Signature,
    header: bytes,
    presentation_header: bytes,
    messages: Sequence[int],
    disclosed_indexes: Iterable[int],
    rng=None,
) -> Proof:
    """Prove knowledge of ``sig`` over ``messages`` revealing only ``disclosed_indexes``.

    ``rng`` needs a ``randrange`` method; defaults to the OS CSPRNG.
    """
    rng = rng or _SYSTEM_RNG
    messages = [int(m) % ORDER for m in messages]
    n = len(messages)
    disclosed = sorted(set(disclosed_indexes))
    if any(not 0 <= i < n for i in disclosed):
        raise IndexOutOfRange(f"disclosed indexes must lie in 0..{n - 1}")
    code = check_signature(pk, header, messages, sig)
    if code is not None:
        raise InvalidSignature(code)
    undisclosed = [j for j in range(n) if j not in set(disclosed)]

    k = backend.kernels()
    q1, hs = generators(n)
    domain = calculate_domain(pk, q1, hs, header)
    r1, r2, e_t, r1_t, r3_t = (_random_scalar(rng) for _ in range(5))
    m_t = [_random_scalar(rng) for _ in undisclosed]

    b = _b_point(q1, hs, domain, messages)
    r1r2 = r1 * r2 % ORDER
    # every commitment expressed over the base points A and B
    d = k.g1_msm([b], [scalar_bytes(r2)])
    abar = k.g1_msm([sig.a], [scalar_bytes(r1r2)])
    bbar = k.g1_msm([b, sig.a], [scalar_bytes(r1r2), scalar_bytes(-r1r2 * sig.e)])
    t1 = k.g1_msm([sig.a, b], [scalar_bytes(r1r2 * e_t), scalar_bytes(r2 * r1_t)])
    t2 = k.g1_msm(
        [b, *(hs[j] for j in undisclosed)],
        [scalar_bytes(r2 * r3_t), *(scalar_bytes(m) for m in m_t)],
    )
    c = _challenge(
        abar, bbar, d, t1, t2, domain, [(i, messages[i]) for i in disclosed], presentation_header
    )
    r3 = pow(r2, -1, ORDER)
    return Proof(
        abar=abar,
        bbar=bbar,
        d=d,
        e_hat=(e_t + sig.e * c) % ORDER,
        r1_hat=(r1_t - r1 * c) % ORDER,
        r3_hat=(r3_t - r3 * c) % ORDER,
        m_hat=tuple((mt + messages[j] * c) % ORDER for mt, j in zip(m_t, undisclosed)),
        challenge=c,
    )


def check_proof(
    pk: PublicKey,
    proof: Proof | bytes,
    header: bytes,
    presentation_header: bytes,
    disclosed: Sequence[tuple[int, int]],
) -> str | None:
    """Return None when ``proof`` verifies, else a short failure code."""
    if isinstance(proof, (bytes, bytearray)):
        try:
            proof = Proof.from_bytes(bytes(proof))
        except ValueError:
            return "malformed-proof"
    k = backend.kernels()
    disclosed = [(int(i), int(m) % ORDER) for i, m in disclosed]
    idxs = [i for i, _ in disclosed]
    n = len(disclosed) + proof.undisclosed_count
    if n > MAX_MESSAGES:
        return "too-many-messages"
    if idxs != sorted(set(idxs)) or any(not 0 <= i < n for i in idxs):
        return "bad-indexes"
    for p in (proof.abar, proof.bbar, proof.d):
        if p == G1_IDENTITY or not k.g1_is_valid(p):
            return "invalid-point"
    if any(not 0 < s < ORDER for s in (proof.e_hat, proof.r1_hat, proof.r3_hat, proof.challenge, *proof.m_hat)):
        return "malformed-proof"

    q1, hs = generators(n)
    domain = calculate_domain(pk, q1, hs, header)
    c = proof.challenge
    undisclosed = [j for j in range(n) if j not in set(idxs)]
    t1 = k.g1_msm(
        [proof.bbar, proof.abar, proof.d],
        [scalar_bytes(c), scalar_bytes(proof.e_hat), scalar_bytes(proof.r1_hat)],
    )
    t2 = k.g1_msm(
        [P1, q1, *(hs[i] for i in idxs), proof.d, *(hs[j] for j in undisclosed)],
        [
            scalar_bytes(c),
            scalar_bytes(domain * c),
            *(scalar_bytes(m * c) for _, m in disclosed),
            scalar_bytes(proof.r3_hat),
            *(scalar_bytes(m) for m in proof.m_hat),
        ],
    )
    if _challenge(proof.abar, proof.bbar, proof.d, t1, t2, domain, disclosed, presentation_header) != c:
        return "challenge-mismatch"
    if not k.pairing_product_is_one([proof.abar, proof.bbar], [pk.w, _neg_p2()]):
        return "pairing-check-failed"
    return None


def proof_verify(
    pk: PublicKey,
    proof: Proof | bytes,
    header: bytes,
    presentation_header: bytes,
    disclosed: Sequence[tuple[int, int]],
) -> bool:
    return check_proof(pk, proof, header, presentation_header, disclosed) is None
