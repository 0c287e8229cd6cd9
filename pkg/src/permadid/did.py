"""The ``did:arweave`` method.

A DID is ``did:arweave:<address>`` where the address is the content id of
the subject's primary Ed25519 key. Documents are canonical JSON stored on
the weave with tags Content-Type, DID-Type and DID; updates are
republications with a higher ``versionSequence``.

Update authority is a chain: the subject's own address may publish the
first accepted version, and each later version must be published by the
controller named in the version it replaces (the subject when no
controller is named). Versions from anyone else are skipped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from . import bbs
from .encoding import b58decode, b58encode, canonical_json, content_id, is_id
from .errors import (
    InvalidDocument,
    InvalidKey,
    NoAuthenticationKey,
    NotFound,
    ParseError,
)
from .keys import ED25519_TYPE, AuthKeyPair, load_public_key
from .naming import NameRegistry
from .weave import Weave

logger = logging.getLogger(__name__)

METHOD = "arweave"
PREFIX = f"did:{METHOD}:"
DID_CONTEXT = "https://www.w3.org/ns/did/v1"
BBS_KEY_TYPE = "Bls12381G2Key2020"
CREDENTIAL_SERVICE = "VerifiableCredentialService"

DID_TAGS = (("Content-Type", "application/json"), ("DID-Type", "did-document"))

# claim-schema fields that must never appear in a public DID document
SENSITIVE_FIELDS = frozenset(
    {
        "age", "ageOver18", "birthDate", "dateOfBirth", "familyName", "firstNames",
        "givenName", "familyNameAtBirth", "firstNamesAtBirth", "placeOfBirth",
        "currentAddress", "gender", "nationality", "uniqueIdentifier", "email",
        "phone", "credentialSubject", "claims", "ciphertext", "encrypted",
        "encryptedData", "jwe",
    }
)

_TOP_LEVEL = {
    "@context", "id", "controller", "verificationMethod", "authentication",
    "assertionMethod", "service", "versionSequence", "deactivated",
}


@dataclass(frozen=True, order=True)
class Did:
    method_specific_id: str

    def __post_init__(self):
        if not is_id(self.method_specific_id):
            raise ValueError(f"method-specific id must be a 43-character address, got {self.method_specific_id!r}")

    method = METHOD

    def __str__(self) -> str:
        return PREFIX + self.method_specific_id

    @property
    def address(self) -> str:
        return self.method_specific_id

    @classmethod
    def parse(cls, text: str) -> "Did":
        if not isinstance(text, str) or not text.startswith(PREFIX):
            raise ValueError(f"not a did:{METHOD} identifier: {text!r}")
        return cls(text[len(PREFIX) :].split("#", 1)[0])


def is_did(text: Any) -> bool:
    return isinstance(text, str) and text.startswith("did:")


def derive_did(public_key: bytes) -> Did:
    """DID for an Ed25519 authentication key."""
    load_public_key(public_key)
    return Did(content_id(bytes(public_key)))


def _check_key(type_label: str, public_key: bytes) -> None:
    if type_label == ED25519_TYPE:
        load_public_key(public_key)
    elif type_label == BBS_KEY_TYPE:
        try:
            bbs.PublicKey(bytes(public_key))
        except bbs.InvalidKey as exc:
            raise InvalidKey(str(exc)) from None
    else:
        raise InvalidKey(f"unsupported key type {type_label!r}")


@dataclass(frozen=True)
class VerificationMethod:
    id: str
    type_label: str
    controller: str
    public_key: bytes

    @property
    def fragment(self) -> str:
        return self.id.partition("#")[2]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "type": self.type_label,
            "controller": self.controller,
            "publicKeyBase58": b58encode(self.public_key),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VerificationMethod":
        if not isinstance(obj, dict) or set(obj) != {"id", "type", "controller", "publicKeyBase58"}:
            raise ParseError("malformed verification method")
        try:
            key = b58decode(obj["publicKeyBase58"])
        except (ValueError, TypeError) as exc:
            raise ParseError(str(exc)) from None
        return cls(obj["id"], obj["type"], obj["controller"], key)


@dataclass(frozen=True)
class Service:
    id: str
    type: str
    endpoint: str

    def to_json(self) -> dict:
        return {"id": self.id, "type": self.type, "serviceEndpoint": self.endpoint}


@dataclass
class DidDocument:
    id: str
    verification_methods: list[VerificationMethod]
    authentication: list[str]
    services: list[Service] = field(default_factory=list)
    controller: str | None = None
    assertion_method: list[str] = field(default_factory=list)
    version_sequence: int = 0
    deactivated: bool = False
    context: list[str] = field(default_factory=lambda: [DID_CONTEXT])
    extra: dict = field(default_factory=dict)

    @property
    def did(self) -> Did:
        return Did.parse(self.id)

    @property
    def controller_did(self) -> Did:
        return Did.parse(self.controller) if self.controller else self.did

    def method(self, ref: str) -> VerificationMethod | None:
        full = self.id + ref if ref.startswith("#") else ref
        for vm in self.verification_methods:
            if vm.id == full:
                return vm
        return None

    def keys_of_type(self, type_label: str) -> list[VerificationMethod]:
        return [vm for vm in self.verification_methods if vm.type_label == type_label]

    def bbs_key(self, ref: str | None = None) -> tuple[str, bbs.PublicKey] | None:
        methods = [self.method(ref)] if ref else self.keys_of_type(BBS_KEY_TYPE)
        for vm in methods:
            if vm is not None and vm.type_label == BBS_KEY_TYPE:
                return vm.id, bbs.PublicKey(vm.public_key)
        return None

    def auth_keys(self) -> list[bytes]:
        return [self.method(r).public_key for r in self.authentication if self.method(r)]

    def to_json(self) -> dict:
        out: dict = dict(self.extra)
        out.update(
            {
                "@context": list(self.context),
                "id": self.id,
                "verificationMethod": [vm.to_json() for vm in self.verification_methods],
                "authentication": list(self.authentication),
                "service": [s.to_json() for s in self.services],
                "versionSequence": self.version_sequence,
            }
        )
        if self.controller:
            out["controller"] = self.controller
        if self.assertion_method:
            out["assertionMethod"] = list(self.assertion_method)
        if self.deactivated:
            out["deactivated"] = True
        return out

    def encode(self) -> bytes:
        return canonical_json(self.to_json())

    @classmethod
    def from_json(cls, obj: Any) -> "DidDocument":
        if not isinstance(obj, dict):
            raise ParseError("DID document must be a JSON object")
        try:
            ctx = obj["@context"]
            context = [ctx] if isinstance(ctx, str) else list(ctx)
            services = [
                Service(s["id"], s["type"], s["serviceEndpoint"]) for s in obj.get("service", [])
            ]
            seq = obj.get("versionSequence", 0)
            if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
                raise ParseError("versionSequence must be a non-negative integer")
            return cls(
                id=obj["id"],
                verification_methods=[VerificationMethod.from_json(v) for v in obj.get("verificationMethod", [])],
                authentication=list(obj.get("authentication", [])),
                services=services,
                controller=obj.get("controller"),
                assertion_method=list(obj.get("assertionMethod", [])),
                version_sequence=seq,
                deactivated=bool(obj.get("deactivated", False)),
                context=context,
                extra={k: v for k, v in obj.items() if k not in _TOP_LEVEL},
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"malformed DID document: {exc}") from None

    @classmethod
    def decode(cls, raw: bytes) -> "DidDocument":
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(str(exc)) from None
        return cls.from_json(obj)


def _sensitive_keys(obj: Any) -> set[str]:
    found = set()
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k in SENSITIVE_FIELDS:
                found.add(k)
            found |= _sensitive_keys(v)
    elif isinstance(obj, list):
        for v in obj:
            found |= _sensitive_keys(v)
    return found


def validate_document(doc: DidDocument) -> DidDocument:
    """Raise InvalidDocument unless ``doc`` satisfies the method's invariants."""
    try:
        did = doc.did
        if doc.controller:
            Did.parse(doc.controller)
    except ValueError as exc:
        raise InvalidDocument(str(exc)) from None
    if DID_CONTEXT not in doc.context:
        raise InvalidDocument(f"@context must include {DID_CONTEXT}")
    if not doc.authentication:
        raise NoAuthenticationKey("document lists no authentication key")
    ids = set()
    for vm in doc.verification_methods:
        if not vm.fragment:
            raise InvalidDocument(f"verification method {vm.id!r} has no fragment")
        if vm.id in ids:
            raise InvalidDocument(f"duplicate verification method {vm.id!r}")
        ids.add(vm.id)
        try:
            _check_key(vm.type_label, vm.public_key)
        except InvalidKey as exc:
            raise InvalidDocument(f"{vm.id}: {exc}") from None
    for ref in doc.authentication + doc.assertion_method:
        vm = doc.method(ref)
        if vm is None:
            raise InvalidDocument(f"reference {ref!r} does not resolve to a verification method")
    for ref in doc.authentication:
        if doc.method(ref).type_label != ED25519_TYPE:
            raise InvalidDocument(f"authentication key {ref!r} must be {ED25519_TYPE}")
    primary = doc.method(doc.authentication[0])
    if content_id(primary.public_key) != did.address:
        raise InvalidDocument("DID is not derived from the primary authentication key")
    leaked = _sensitive_keys(doc.to_json())
    if leaked:
        raise InvalidDocument(f"document carries claim data: {sorted(leaked)}")
    return doc


def create_document(
    auth_keys: Sequence[bytes | AuthKeyPair],
    services: Iterable = (),
    controller: str | Did | None = None,
    bbs_keys: Sequence[bbs.PublicKey] = (),
    version_sequence: int = 0,
    extra: dict | None = None,
) -> DidDocument:
    """Build and validate a document for the subject of ``auth_keys[0]``."""
    keys = [k.public_bytes if isinstance(k, AuthKeyPair) else bytes(k) for k in auth_keys]
    if not keys:
        raise NoAuthenticationKey("at least one authentication key is required")
    did = str(derive_did(keys[0]))
    vms = [VerificationMethod(f"{did}#keys-{i}", ED25519_TYPE, did, k) for i, k in enumerate(keys, 1)]
    bbs_vms = [
        VerificationMethod(f"{did}#bbs-key-{i}", BBS_KEY_TYPE, did, pk.to_bytes())
        for i, pk in enumerate(bbs_keys, 1)
    ]
    svc = []
    for s in services:
        if isinstance(s, Service):
            svc.append(s)
        else:
            sid, stype, endpoint = s
            svc.append(Service(sid if "#" in sid else f"{did}#{sid}", stype, endpoint))
    doc = DidDocument(
        id=did,
        verification_methods=vms + bbs_vms,
        authentication=[vm.id for vm in vms],
        assertion_method=[vm.id for vm in bbs_vms],
        services=svc,
        controller=str(controller) if controller else None,
        version_sequence=version_sequence,
        extra=dict(extra or {}),
    )
    return validate_document(doc)


class DidResolver:
    """Publishes and resolves documents over a weave and a name registry."""

    def __init__(self, weave: Weave, names: NameRegistry | None = None):
        self.weave = weave
        self.names = names or NameRegistry(weave)

    def publish(self, doc: DidDocument, signer: AuthKeyPair) -> str:
        """Post ``doc``; ``signer`` must hold the current update authority."""
        validate_document(doc)
        try:
            authority = self._resolve_did(doc.id)[0].controller_did.address
        except NotFound:
            authority = doc.did.address
        if signer.address != authority:
            raise InvalidDocument("the publishing key does not hold update authority for this DID")
        tags = [*DID_TAGS, ("DID", doc.id)]
        return self.weave.submit(signer.address, tags, doc.encode())

    def fetch(self, tx_id: str) -> DidDocument:
        tx = self.weave.get(tx_id)
        if tx.tag("DID-Type") != "did-document":
            raise ParseError(f"transaction {tx_id} is not a DID document")
        return DidDocument.decode(tx.data)

    def resolve_with_tx(self, ref: str | Did) -> tuple[DidDocument, str]:
        if isinstance(ref, Did) or is_did(ref):
            return self._resolve_did(str(ref))
        target, _ = self.names.resolve(ref)
        try:
            return self.fetch(target), target
        except NotFound:
            raise NotFound(f"name {ref!r} points at missing transaction {target}") from None

    def resolve(self, ref: str | Did) -> DidDocument:
        return self.resolve_with_tx(ref)[0]

    def _resolve_did(self, did: str) -> tuple[DidDocument, str]:
        try:
            subject = Did.parse(did)
        except ValueError:
            raise NotFound(f"{did!r} is not a resolvable did:{METHOD} identifier") from None
        did = str(subject)
        candidates = []
        for tid in self.weave.query([("DID", did)]):
            tx = self.weave.get(tid)
            try:
                doc = validate_document(DidDocument.decode(tx.data))
            except (ParseError, InvalidDocument, NoAuthenticationKey) as exc:
                logger.debug("skipping %s: %s", tid, exc)
                continue
            if doc.id != did:
                continue
            candidates.append((doc.version_sequence, tid, tx.owner, doc))
        candidates.sort(key=lambda c: (c[0], c[1]))

        current: tuple[DidDocument, str] | None = None
        authority = subject.address
        seq = -1
        for version, tid, owner, doc in candidates:
            if version == seq:
                continue  # tie already settled by the smaller tx id
            if owner != authority:
                logger.debug("untrusted update %s of %s by %s", tid, did, owner)
                continue
            current, seq = (doc, tid), version
            authority = doc.controller_did.address
        if current is None:
            raise NotFound(f"no trusted document for {did}")
        return current
