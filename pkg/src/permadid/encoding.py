"""Byte/text encodings shared across the package.

Identifiers everywhere are base64url (no padding) of a SHA-256 digest,
which is always 43 characters.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from typing import Any

ID_LENGTH = 43
_ID_RE = re.compile(r"^[A-Za-z0-9_-]{43}$")


def b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def b64url_decode(text: str) -> bytes:
    if not isinstance(text, str) or not re.fullmatch(r"[A-Za-z0-9_-]*", text):
        raise ValueError("not base64url")
    if len(text) % 4 == 1:
        raise ValueError("bad base64url length")
    raw = base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))
    # reject encodings with nonzero trailing bits
    if b64url(raw) != text:
        raise ValueError("non-canonical base64url")
    return raw


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def content_id(data: bytes) -> str:
    """43-character base64url id of ``data``."""
    return b64url(digest(data))


def is_id(value: Any) -> bool:
    return isinstance(value, str) and bool(_ID_RE.match(value))


def length_prefixed(*parts: bytes) -> bytes:
    out = bytearray()
    for part in parts:
        out += len(part).to_bytes(8, "big")
        out += part
    return bytes(out)


def canonical_json(obj: Any) -> bytes:
    """Sorted keys, no insignificant whitespace, UTF-8."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


# base58 (Bitcoin alphabet), used for publicKeyBase58 in DID documents
_B58 = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"


def b58encode(data: bytes) -> str:
    n = int.from_bytes(data, "big")
    out = []
    while n:
        n, rem = divmod(n, 58)
        out.append(_B58[rem])
    pad = len(data) - len(data.lstrip(b"\0"))
    return "1" * pad + "".join(reversed(out))


def b58decode(text: str) -> bytes:
    n = 0
    for ch in text:
        idx = _B58.find(ch)
        if idx < 0:
            raise ValueError(f"invalid base58 character {ch!r}")
        n = n * 58 + idx
    pad = len(text) - len(text.lstrip("1"))
    body = n.to_bytes((n.bit_length() + 7) // 8, "big") if n else b""
    return b"\0" * pad + body
