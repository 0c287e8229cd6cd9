"""Pure-Python BLS12-381 kernels on top of py_ecc.

Same byte-level surface as the compiled ``permadid._native`` module:
compressed points in, compressed points out, scalars as 32-byte big-endian
strings below the group order. Slow (a pairing costs on the order of a
second) but dependency-light; it is also the reference the native kernels
are cross-checked against.
"""

from __future__ import annotations

from hashlib import sha256

from py_ecc.bls.hash_to_curve import hash_to_G1 as _hash_to_G1
from py_ecc.bls.point_compression import (
    compress_G1,
    compress_G2,
    decompress_G1,
    decompress_G2,
)
from py_ecc.optimized_bls12_381 import (
    FQ12,
    G1,
    G2,
    Z1,
    Z2,
    add,
    curve_order,
    final_exponentiate,
    is_inf,
    multiply,
    pairing,
)

NAME = "pure"


def _scalar(b: bytes) -> int:
    if len(b) != 32:
        raise ValueError("scalar must be 32 bytes")
    s = int.from_bytes(b, "big")
    if s >= curve_order:
        raise ValueError("scalar not below group order")
    return s


def _enc_g1(pt) -> bytes:
    return compress_G1(pt).to_bytes(48, "big")


def _enc_g2(pt) -> bytes:
    z1, z2 = compress_G2(pt)
    return z1.to_bytes(48, "big") + z2.to_bytes(48, "big")


def _dec_g1(b: bytes):
    if len(b) != 48:
        raise ValueError("G1 point must be 48 bytes")
    pt = decompress_G1(int.from_bytes(b, "big"))
    if not is_inf(pt) and not is_inf(multiply(pt, curve_order)):
        raise ValueError("invalid G1 point encoding")
    # reject non-canonical encodings that decompress to the same point
    if _enc_g1(pt) != bytes(b):
        raise ValueError("invalid G1 point encoding")
    return pt


def _dec_g2(b: bytes):
    if len(b) != 96:
        raise ValueError("G2 point must be 96 bytes")
    pt = decompress_G2((int.from_bytes(b[:48], "big"), int.from_bytes(b[48:], "big")))
    if not is_inf(pt) and not is_inf(multiply(pt, curve_order)):
        raise ValueError("invalid G2 point encoding")
    if _enc_g2(pt) != bytes(b):
        raise ValueError("invalid G2 point encoding")
    return pt


def g1_msm(points, scalars) -> bytes:
    if len(points) != len(scalars):
        raise ValueError("length mismatch")
    acc = Z1
    for p, s in zip(points, scalars):
        acc = add(acc, multiply(_dec_g1(p), _scalar(s)))
    return _enc_g1(acc)


def g2_msm(points, scalars) -> bytes:
    if len(points) != len(scalars):
        raise ValueError("length mismatch")
    acc = Z2
    for p, s in zip(points, scalars):
        acc = add(acc, multiply(_dec_g2(p), _scalar(s)))
    return _enc_g2(acc)


def g1_generator() -> bytes:
    return _enc_g1(G1)


def g2_generator() -> bytes:
    return _enc_g2(G2)


def g1_is_valid(b: bytes) -> bool:
    try:
        _dec_g1(b)
    except ValueError:
        return False
    return True


def g2_is_valid(b: bytes) -> bool:
    try:
        _dec_g2(b)
    except ValueError:
        return False
    return True


def hash_to_g1(msg: bytes, dst: bytes) -> bytes:
    return _enc_g1(_hash_to_G1(msg, dst, sha256))


def pairing_product_is_one(g1s, g2s) -> bool:
    if len(g1s) != len(g2s):
        raise ValueError("length mismatch")
    acc = FQ12.one()
    for a, b in zip(g1s, g2s):
        acc = acc * pairing(_dec_g2(b), _dec_g1(a), final_exponentiate=False)
    return final_exponentiate(acc) == FQ12.one()
