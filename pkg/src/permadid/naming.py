"""ArNS-style name registry stored on the weave.

A name record is a weave transaction tagged ``("ArNS-Name", name)`` whose
data is the JSON encoding

    {"name": ..., "target": <tx id>, "owner": <b64url Ed25519 public key>,
     "seq": <int>, "sig": <b64url signature>}

The signature covers (name, target, seq). The first validly signed sealed
record for a name fixes its owner; after that only records signed by the
owner count, and the highest sequence wins (ties broken by the smallest
record transaction id). Pending records are never authoritative.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .encoding import b64url, b64url_decode, canonical_json, is_id
from .errors import InvalidName, NameTaken, NotOwner, UnknownName
from .keys import AuthKeyPair, address_of, verify_signature
from .weave import Weave

NAME_TAG = "ArNS-Name"
NAME_RE = re.compile(r"^[a-z0-9](?:[a-z0-9-]{0,49}[a-z0-9])?$")
_SIG_DOMAIN = b"permadid/arns-record/v1\n"


def validate_name(name: str) -> str:
    if not isinstance(name, str) or not NAME_RE.match(name):
        raise InvalidName(f"invalid name {name!r}: expected [a-z0-9-]{{1,51}} without leading/trailing '-'")
    return name


def record_message(name: str, target: str, seq: int) -> bytes:
    return _SIG_DOMAIN + canonical_json({"name": name, "target": target, "seq": seq})


@dataclass(frozen=True)
class NameRecord:
    name: str
    target: str
    owner_pubkey: bytes
    sequence: int
    signature: bytes
    record_tx: str | None = None

    @property
    def owner_address(self) -> str:
        return address_of(self.owner_pubkey)

    def signature_valid(self) -> bool:
        return verify_signature(
            self.owner_pubkey, record_message(self.name, self.target, self.sequence), self.signature
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "target": self.target,
            "owner": b64url(self.owner_pubkey),
            "seq": self.sequence,
            "sig": b64url(self.signature),
        }

    def encode(self) -> bytes:
        return canonical_json(self.to_json())

    @classmethod
    def decode(cls, raw: bytes, record_tx: str | None = None) -> "NameRecord":
        obj = json.loads(raw.decode("utf-8"))
        if not isinstance(obj, dict) or set(obj) != {"name", "target", "owner", "seq", "sig"}:
            raise ValueError("not a name record")
        seq = obj["seq"]
        if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
            raise ValueError("bad sequence")
        if not isinstance(obj["name"], str) or not is_id(obj["target"]):
            raise ValueError("bad name or target")
        return cls(
            name=obj["name"],
            target=obj["target"],
            owner_pubkey=b64url_decode(obj["owner"]),
            sequence=seq,
            signature=b64url_decode(obj["sig"]),
            record_tx=record_tx,
        )


def make_record(name: str, target: str, key: AuthKeyPair, seq: int) -> NameRecord:
    return NameRecord(name, target, key.public_bytes, seq, key.sign(record_message(name, target, seq)))


class NameRegistry:
    def __init__(self, weave: Weave):
        self.weave = weave

    # ---- reading

    def _records(self, name: str, *, sealed_only: bool = True) -> list[NameRecord]:
        ids = self.weave.query([(NAME_TAG, name)])
        if not sealed_only:
            ids = ids + [p for p in self.weave.pending() if self.weave.get(p).tag(NAME_TAG) == name]
        out = []
        for tid in ids:
            tx = self.weave.get(tid)
            try:
                rec = NameRecord.decode(tx.data, record_tx=tid)
            except (ValueError, UnicodeDecodeError):
                continue
            if rec.name != name or not rec.signature_valid():
                continue
            # the housing transaction must come from the record's owner
            if tx.owner != rec.owner_address:
                continue
            out.append(rec)
        return out

    def owner_of(self, name: str, *, include_pending: bool = False) -> str | None:
        records = self._records(name, sealed_only=not include_pending)
        return records[0].owner_address if records else None

    def latest(self, name: str, *, include_pending: bool = False) -> NameRecord | None:
        records = self._records(name, sealed_only=not include_pending)
        if not records:
            return None
        owner = records[0].owner_address
        owned = [r for r in records if r.owner_address == owner]
        return min(owned, key=lambda r: (-r.sequence, r.record_tx))

    def resolve(self, name: str) -> tuple[str, NameRecord]:
        validate_name(name)
        rec = self.latest(name)
        if rec is None:
            raise UnknownName(f"no sealed record for {name!r}")
        return rec.target, rec

    def names(self) -> list[str]:
        seen = []
        for tid in self.weave.query():
            value = self.weave.get(tid).tag(NAME_TAG)
            if value is not None and value not in seen:
                seen.append(value)
        return seen

    # ---- writing

    def _publish(self, rec: NameRecord, key: AuthKeyPair) -> NameRecord:
        tid = self.weave.submit(key.address, [(NAME_TAG, rec.name)], rec.encode())
        return NameRecord(rec.name, rec.target, rec.owner_pubkey, rec.sequence, rec.signature, tid)

    def register(self, name: str, target: str, owner_key: AuthKeyPair) -> NameRecord:
        """Claim ``name``; re-registering a name you own bumps its sequence."""
        validate_name(name)
        if not is_id(target):
            raise InvalidName(f"target {target!r} is not a transaction id")
        current = self.latest(name, include_pending=True)
        if current is not None and current.owner_address != owner_key.address:
            raise NameTaken(f"{name!r} is owned by {current.owner_address}")
        seq = 0 if current is None else current.sequence + 1
        return self._publish(make_record(name, target, owner_key, seq), owner_key)

    def update(self, name: str, new_target: str, owner_key: AuthKeyPair) -> NameRecord:
        validate_name(name)
        if not is_id(new_target):
            raise InvalidName(f"target {new_target!r} is not a transaction id")
        current = self.latest(name)
        if current is None:
            raise UnknownName(f"no sealed record for {name!r}")
        if current.owner_address != owner_key.address:
            raise NotOwner(f"{name!r} is owned by {current.owner_address}")
        pending = self.latest(name, include_pending=True)
        seq = max(current.sequence, pending.sequence) + 1
        return self._publish(make_record(name, new_target, owner_key, seq), owner_key)
