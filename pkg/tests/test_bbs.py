import json
import os
import random
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st
from py_ecc.optimized_bls12_381 import G2, add, curve_order, multiply, neg
from py_ecc.optimized_bls12_381 import pairing as ref_pairing

from permadid import bbs
from permadid.bbs import _pure, backend
from permadid.bbs.scheme import P1

VECTORS = json.loads((Path(__file__).parent.parent / "fixtures" / "bbs_vectors.json").read_text())

needs_native = pytest.mark.skipif("native" not in backend.available(), reason="native kernels not built")


def _keys(seed=b"k" * 32):
    return bbs.keygen(seed)


def _scalars(n, rng=random):
    return [rng.randrange(1, bbs.ORDER) for _ in range(n)]


# ---- conformance vectors


def test_keygen_vector():
    sk, pk = bbs.keygen(bytes.fromhex(VECTORS["key_material"]), bytes.fromhex(VECTORS["key_info"]))
    assert sk.to_bytes().hex() == VECTORS["secret_key"]
    assert pk.to_bytes().hex() == VECTORS["public_key"]


def test_generator_vector():
    q1, hs = bbs.generators(1)
    assert q1.hex() == VECTORS["q1"]
    assert hs[0].hex() == VECTORS["h1"]


def test_single_message_signature_vector():
    v = VECTORS["single_message"]
    sk, pk = bbs.keygen(bytes.fromhex(VECTORS["key_material"]), bytes.fromhex(VECTORS["key_info"]))
    m = bbs.message_to_scalar(bytes.fromhex(v["message"]))
    assert m == int(v["message_scalar"], 16)
    sig = bbs.sign(sk, pk, bytes.fromhex(v["header"]), [m])
    assert sig.to_bytes().hex() == v["signature"]
    assert bbs.verify(pk, bytes.fromhex(v["header"]), [m], sig)


# ---- sign / verify


def test_sign_verify_roundtrip():
    sk, pk = _keys()
    msgs = bbs.messages_to_scalars([b"a", b"b", b"c"])
    sig = bbs.sign(sk, pk, b"hdr", msgs)
    assert len(sig.to_bytes()) == 80
    assert bbs.verify(pk, b"hdr", msgs, sig)
    assert not bbs.verify(pk, b"other", msgs, sig)
    assert not bbs.verify(pk, b"hdr", msgs[::-1], sig)
    assert not bbs.verify(pk, b"hdr", msgs[:2], sig)


def test_signing_is_deterministic():
    sk, pk = _keys()
    msgs = _scalars(4, random.Random(1))
    assert bbs.sign(sk, pk, b"", msgs) == bbs.sign(sk, pk, b"", msgs)


def test_wrong_key_rejected():
    sk, pk = _keys()
    _, other = _keys(b"o" * 32)
    msgs = _scalars(3)
    assert not bbs.verify(other, b"", msgs, bbs.sign(sk, pk, b"", msgs))


def test_signature_group_relation_oracle():
    """A * (sk + e) == B, recomputed with py_ecc big-integer arithmetic."""
    sk, pk = _keys()
    msgs = _scalars(3, random.Random(7))
    sig = bbs.sign(sk, pk, b"hdr", msgs)
    q1, hs = bbs.generators(3)
    domain = bbs.scheme.calculate_domain(pk, q1, hs, b"hdr")
    b = _pure._dec_g1(P1)
    b = add(b, multiply(_pure._dec_g1(q1), domain))
    for h, m in zip(hs, msgs):
        b = add(b, multiply(_pure._dec_g1(h), m))
    a = _pure._dec_g1(sig.a)
    assert _pure._enc_g1(multiply(a, (sk.sk + sig.e) % curve_order)) == _pure._enc_g1(b)


@pytest.mark.slow
def test_verify_pairing_oracle():
    """e(A, W + P2*e) == e(B, P2) evaluated directly with the reference pairing."""
    sk, pk = _keys()
    msgs = _scalars(2, random.Random(3))
    sig = bbs.sign(sk, pk, b"", msgs)
    q1, hs = bbs.generators(2)
    domain = bbs.scheme.calculate_domain(pk, q1, hs, b"")
    b = add(_pure._dec_g1(P1), multiply(_pure._dec_g1(q1), domain))
    for h, m in zip(hs, msgs):
        b = add(b, multiply(_pure._dec_g1(h), m))
    w = _pure._dec_g2(pk.to_bytes())
    lhs = ref_pairing(add(w, multiply(G2, sig.e)), _pure._dec_g1(sig.a))
    rhs = ref_pairing(G2, b)
    assert lhs == rhs
    assert ref_pairing(neg(G2), b) * lhs == lhs ** 0  # sanity: e(-P2, B) inverts e(P2, B)


def test_malformed_signature_bytes():
    with pytest.raises(ValueError):
        bbs.Signature.from_bytes(b"\x00" * 79)
    raw = bytearray(bbs.sign(*_keys(), b"", [1]).to_bytes())
    raw[48:] = bbs.ORDER.to_bytes(32, "big")
    with pytest.raises(ValueError):
        bbs.Signature.from_bytes(bytes(raw))


def test_zero_messages():
    sk, pk = _keys()
    sig = bbs.sign(sk, pk, b"h", [])
    assert bbs.verify(pk, b"h", [], sig)
    proof = bbs.proof_gen(pk, sig, b"h", b"ph", [], [])
    assert bbs.proof_verify(pk, proof, b"h", b"ph", [])


def test_too_many_messages():
    sk, pk = _keys()
    with pytest.raises(bbs.TooManyMessages):
        bbs.sign(sk, pk, b"", [1] * (bbs.MAX_MESSAGES + 1))


def test_short_seed():
    with pytest.raises(bbs.SeedTooShort):
        bbs.keygen(b"short")


def test_invalid_public_key():
    with pytest.raises(bbs.InvalidKey):
        bbs.PublicKey(b"\x01" * 96)


def test_secret_key_repr_redacted():
    sk, _ = _keys()
    assert hex(sk.sk)[2:10] not in repr(sk)


# ---- proofs


def test_proof_roundtrip_and_size():
    sk, pk = _keys()
    msgs = _scalars(5)
    sig = bbs.sign(sk, pk, b"h", msgs)
    proof = bbs.proof_gen(pk, sig, b"h", b"nonce", msgs, [1, 3])
    raw = proof.to_bytes()
    assert len(raw) == bbs.proof_size(3) == 272 + 32 * 3
    disclosed = [(1, msgs[1]), (3, msgs[3])]
    assert bbs.proof_verify(pk, raw, b"h", b"nonce", disclosed)
    assert bbs.proof_verify(pk, bbs.Proof.from_bytes(raw), b"h", b"nonce", disclosed)
    assert not bbs.proof_verify(pk, raw, b"h", b"other", disclosed)
    assert not bbs.proof_verify(pk, raw, b"x", b"nonce", disclosed)
    assert not bbs.proof_verify(pk, raw, b"h", b"nonce", [(1, msgs[1]), (3, msgs[2])])
    assert not bbs.proof_verify(pk, raw, b"h", b"nonce", [(1, msgs[1]), (2, msgs[3])])
    assert not bbs.proof_verify(pk, raw, b"h", b"nonce", [(1, msgs[1])])


def test_proofs_are_randomized():
    sk, pk = _keys()
    msgs = _scalars(3)
    sig = bbs.sign(sk, pk, b"", msgs)
    a = bbs.proof_gen(pk, sig, b"", b"", msgs, [0]).to_bytes()
    b = bbs.proof_gen(pk, sig, b"", b"", msgs, [0]).to_bytes()
    assert a != b


def test_seeded_proof_rng_is_reproducible():
    sk, pk = _keys()
    msgs = _scalars(3)
    sig = bbs.sign(sk, pk, b"", msgs)
    a = bbs.proof_gen(pk, sig, b"", b"", msgs, [0], rng=random.Random(5)).to_bytes()
    b = bbs.proof_gen(pk, sig, b"", b"", msgs, [0], rng=random.Random(5)).to_bytes()
    assert a == b


def test_proof_gen_rejects_bad_signature():
    sk, pk = _keys()
    msgs = _scalars(2)
    sig = bbs.sign(sk, pk, b"", msgs)
    with pytest.raises(bbs.InvalidSignature):
        bbs.proof_gen(pk, sig, b"", b"", msgs[::-1], [0])


def test_proof_gen_index_range():
    sk, pk = _keys()
    msgs = _scalars(2)
    sig = bbs.sign(sk, pk, b"", msgs)
    with pytest.raises(bbs.IndexOutOfRange):
        bbs.proof_gen(pk, sig, b"", b"", msgs, [2])


def test_proof_from_bytes_rejects_garbage():
    with pytest.raises(ValueError):
        bbs.Proof.from_bytes(b"\x00" * 271)
    with pytest.raises(ValueError):
        bbs.Proof.from_bytes(b"\x00" * 273)


@given(
    n=st.integers(min_value=0, max_value=6),
    data=st.data(),
)
def test_any_disclosure_subset_verifies(n, data):
    sk, pk = _keys()
    msgs = data.draw(st.lists(st.integers(0, bbs.ORDER - 1), min_size=n, max_size=n))
    disclose = sorted(data.draw(st.sets(st.integers(0, max(n - 1, 0)), max_size=n)) if n else [])
    header = data.draw(st.binary(max_size=16))
    ph = data.draw(st.binary(max_size=16))
    sig = bbs.sign(sk, pk, header, msgs)
    assert bbs.verify(pk, header, msgs, sig)
    proof = bbs.proof_gen(pk, sig, header, ph, msgs, disclose)
    assert bbs.proof_verify(pk, proof, header, ph, [(i, msgs[i]) for i in disclose])


@given(st.binary(max_size=64))
def test_hash_to_scalar_in_range(msg):
    s = bbs.hash_to_scalar(msg)
    assert 0 < s < bbs.ORDER


# ---- kernels: native against pure


@needs_native
def test_native_matches_pure_kernels():
    native, pure = backend.get("native"), backend.get("pure")
    rng = random.Random(11)
    assert native.g1_generator() == pure.g1_generator()
    assert native.g2_generator() == pure.g2_generator()
    pts = [native.hash_to_g1(bytes([i]), b"TEST-DST") for i in range(5)]
    assert pts == [pure.hash_to_g1(bytes([i]), b"TEST-DST") for i in range(5)]
    for n in range(0, 6):
        sc = [rng.randrange(bbs.ORDER).to_bytes(32, "big") for _ in range(n)]
        assert native.g1_msm(pts[:n], sc) == pure.g1_msm(pts[:n], sc)
    g2 = [native.g2_generator()]
    sc = [rng.randrange(bbs.ORDER).to_bytes(32, "big")]
    assert native.g2_msm(g2, sc) == pure.g2_msm(g2, sc)


def test_hash_to_g1_rfc_vector():
    # RFC 9380 BLS12381G1_XMD:SHA-256_SSWU_RO_, msg "abc"
    dst = b"QUUX-V01-CS02-with-BLS12381G1_XMD:SHA-256_SSWU_RO_"
    for name in backend.available():
        pt = backend.get(name).hash_to_g1(b"abc", dst)
        x = int.from_bytes(pt, "big") & ((1 << 381) - 1)
        assert x == 0x03567BC5EF9C690C2AB2ECDF6A96EF1C139CC0B2F284DCA0A9A7943388A49A3AEE664BA5379A7655D3C68900BE2F6903


@needs_native
def test_native_and_pure_signatures_agree():
    sk, pk = _keys()
    msgs = _scalars(2, random.Random(2))
    with backend.use("native"):
        fast = bbs.sign(sk, pk, b"x", msgs)
    with backend.use("pure"):
        slow = bbs.sign(sk, pk, b"x", msgs)
    assert fast == slow


@pytest.mark.slow
def test_pure_backend_verifies_native_proof():
    sk, pk = _keys()
    msgs = _scalars(2, random.Random(4))
    sig = bbs.sign(sk, pk, b"", msgs)
    proof = bbs.proof_gen(pk, sig, b"", b"n", msgs, [0])
    with backend.use("pure"):
        assert bbs.proof_verify(pk, proof, b"", b"n", [(0, msgs[0])])
        assert not bbs.proof_verify(pk, proof, b"", b"m", [(0, msgs[0])])


def test_kernel_input_validation():
    for name in backend.available():
        k = backend.get(name)
        with pytest.raises(ValueError):
            k.g1_msm([k.g1_generator()], [bbs.ORDER.to_bytes(32, "big")])
        with pytest.raises(ValueError):
            k.g1_msm([b"\x00" * 48], [b"\x00" * 32])
        assert not k.g1_is_valid(b"\xff" * 48)


def test_backend_selection():
    assert "pure" in backend.available()
    with backend.use("pure"):
        assert backend.name() == "pure"
    with pytest.raises((ValueError, ImportError, KeyError)):
        backend.get("nope")


def test_random_seeds_give_distinct_keys():
    seen = {bbs.keygen(os.urandom(32))[1].to_bytes() for _ in range(5)}
    assert len(seen) == 5
