"""Passphrase-encrypted key storage with per-consumer capability grants.

File layout (UTF-8 JSON, one object)::

    {"format": "permadid-keystore", "version": 1,
     "kdf": {"name": "scrypt", "salt": <b64url>, "n": 32768, "r": 8, "p": 1},
     "cipher": "AES-256-GCM", "nonce": <b64url 12 bytes>,
     "grants": {"<consumer>": ["sign_tx", ...]},
     "ciphertext": <b64url>}

Everything except ``ciphertext`` is the header. The header is passed as
associated data, so editing a grant or KDF parameter without the
passphrase makes the file fail to open. The plaintext is a JSON map from
key name to base64url key bytes and only ever exists in memory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt

from .encoding import b64url, b64url_decode, canonical_json
from .errors import KeystoreError, PermissionDenied, WrongPassphrase

FORMAT = "permadid-keystore"
VERSION = 1
CIPHER = "AES-256-GCM"
CAPABILITIES = frozenset({"sign_tx", "sign_credential", "decrypt"})

# scrypt at N=2^15, r=8 costs 32 MiB per derivation
DEFAULT_KDF = {"name": "scrypt", "n": 2**15, "r": 8, "p": 1}


def _derive(passphrase: str, kdf: Mapping) -> bytes:
    if kdf.get("name") != "scrypt":
        raise KeystoreError(f"unsupported KDF {kdf.get('name')!r}")
    return Scrypt(salt=b64url_decode(kdf["salt"]), length=32, n=kdf["n"], r=kdf["r"], p=kdf["p"]).derive(
        passphrase.encode("utf-8")
    )


def _check_caps(caps: Iterable[str]) -> frozenset[str]:
    caps = frozenset(caps)
    unknown = caps - CAPABILITIES
    if unknown:
        raise KeystoreError(f"unknown capabilities {sorted(unknown)}")
    return caps


@dataclass
class Keystore:
    path: str
    keys: dict[str, bytes] = field(repr=False)
    grants: dict[str, frozenset[str]]
    kdf: dict
    _passphrase: str = field(repr=False, default="")

    # ---- file handling

    @classmethod
    def create(
        cls,
        path: str | os.PathLike,
        passphrase: str,
        keys: Mapping[str, bytes],
        *,
        grants: Mapping[str, Iterable[str]] | None = None,
        kdf: Mapping | None = None,
    ) -> "Keystore":
        path = os.fspath(path)
        if os.path.exists(path):
            raise KeystoreError(f"{path} already exists")
        params = dict(DEFAULT_KDF if kdf is None else kdf)
        store = cls(
            path,
            {k: bytes(v) for k, v in keys.items()},
            {c: _check_caps(v) for c, v in (grants or {}).items()},
            params,
            passphrase,
        )
        store.seal()
        return store

    @classmethod
    def open(cls, path: str | os.PathLike, passphrase: str) -> "Keystore":
        path = os.fspath(path)
        with open(path, "rb") as fh:
            try:
                doc = json.loads(fh.read().decode("utf-8"))
                header = {k: v for k, v in doc.items() if k != "ciphertext"}
                if doc["format"] != FORMAT or doc["version"] != VERSION or doc["cipher"] != CIPHER:
                    raise KeystoreError("unsupported keystore format")
                ciphertext = b64url_decode(doc["ciphertext"])
                nonce = b64url_decode(doc["nonce"])
            except (KeyError, ValueError, TypeError, UnicodeDecodeError) as exc:
                raise KeystoreError(f"malformed keystore: {exc}") from None
        key = _derive(passphrase, header["kdf"])
        try:
            plain = AESGCM(key).decrypt(nonce, ciphertext, canonical_json(header))
        except InvalidTag:
            raise WrongPassphrase("wrong passphrase or tampered keystore") from None
        keys = {k: b64url_decode(v) for k, v in json.loads(plain).items()}
        grants = {c: _check_caps(v) for c, v in header["grants"].items()}
        return cls(path, keys, grants, dict(header["kdf"]), passphrase)

    def _header(self, salt: bytes, nonce: bytes) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "kdf": {**{k: v for k, v in self.kdf.items() if k != "salt"}, "salt": b64url(salt)},
            "cipher": CIPHER,
            "nonce": b64url(nonce),
            "grants": {c: sorted(v) for c, v in sorted(self.grants.items())},
        }

    def seal(self) -> None:
        """Re-encrypt under a fresh salt and nonce and atomically replace the file."""
        salt, nonce = os.urandom(16), os.urandom(12)
        header = self._header(salt, nonce)
        key = _derive(self._passphrase, header["kdf"])
        plain = canonical_json({k: b64url(v) for k, v in self.keys.items()})
        ciphertext = AESGCM(key).encrypt(nonce, plain, canonical_json(header))
        self.kdf = header["kdf"]
        tmp = self.path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(canonical_json({**header, "ciphertext": b64url(ciphertext)}))
        os.replace(tmp, self.path)

    # ---- permissions

    def grant(self, consumer: str, capabilities: Iterable[str]) -> None:
        self.grants[consumer] = self.grants.get(consumer, frozenset()) | _check_caps(capabilities)
        self.seal()

    def revoke(self, consumer: str, capabilities: Iterable[str] | None = None) -> None:
        """Drop some capabilities, or every grant when ``capabilities`` is None."""
        current = self.grants.get(consumer, frozenset())
        left = frozenset() if capabilities is None else current - _check_caps(capabilities)
        if left:
            self.grants[consumer] = left
        else:
            self.grants.pop(consumer, None)
        self.seal()

    def allowed(self, consumer: str, capability: str) -> bool:
        return capability in self.grants.get(consumer, frozenset())

    def require(self, consumer: str, capability: str) -> None:
        if not self.allowed(consumer, capability):
            raise PermissionDenied(f"{consumer!r} may not {capability}")

    def use_key(self, consumer: str, capability: str, name: str) -> bytes:
        """Key bytes for ``name``, after checking ``consumer`` holds ``capability``."""
        _check_caps([capability])
        self.require(consumer, capability)
        try:
            return self.keys[name]
        except KeyError:
            raise KeystoreError(f"no key named {name!r}") from None
