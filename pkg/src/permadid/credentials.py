"""Verifiable credentials signed with BBS, selective-disclosure presentations,
issuer-computed predicate claims and weave-hosted revocation lists.

Claims are flattened to ``path -> scalar`` and ordered by the UTF-8 bytes
of the path. Message *i* of the signed vector is the UTF-8 string
``"<path>=<canonical value>"`` where the canonical value is

    str   -> JSON string literal ("Alice" -> "\\"Alice\\"")
    int   -> decimal ("25")
    bool  -> "true" / "false"
    date  -> "date:YYYY-MM-DD"

so the label travels inside the signed bytes and a disclosed message
cannot be moved to another path. In credential JSON, dates appear as
``{"@type": "xsd:date", "@value": "YYYY-MM-DD"}``.
"""

from __future__ import annotations

import base64
import datetime as dt
import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from . import bbs
from .did import BBS_KEY_TYPE, DidDocument, DidResolver, is_did
from .encoding import b58encode, b64url, b64url_decode, canonical_json, content_id, length_prefixed
from .errors import (
    DuplicatePath,
    InvalidCredential,
    NonScalarValue,
    NotFound,
    NotIssuer,
    ParseError,
    PredicateOnMissingPath,
    SchemaViolation,
    UnknownPath,
    UnresolvableIssuer,
    UnsupportedOperator,
)
from .keys import AuthKeyPair, verify_signature

VC_CONTEXT = "https://www.w3.org/2018/credentials/v1"
VP_CONTEXT = VC_CONTEXT
PROOF_TYPE = "BbsBlsSignature2020"
PROOF_PURPOSE = "assertionMethod"
ID_PREFIX = "urn:permadid:"
REVOCATION_TAG = "Revocation-List"

ACCEPT = "ACCEPT"
REJECT = "REJECT"
BAD_PROOF = "BadProof"
NONCE_MISMATCH = "NonceMismatch"
REVOKED = "Revoked"
UNRESOLVABLE_ISSUER = "UnresolvableIssuer"

Scalar = str | int | bool | dt.date


def now_rfc3339() -> str:
    return dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


# --------------------------------------------------------------------------
# claims


def encode_value(value: Scalar) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, dt.datetime):
        raise NonScalarValue("date-times are not claim values; use a date")
    if isinstance(value, dt.date):
        return "date:" + value.isoformat()
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise NonScalarValue(f"unsupported claim value {value!r}")


def decode_value(text: str) -> Scalar:
    if text.startswith("date:"):
        return dt.date.fromisoformat(text[5:])
    value = json.loads(text)
    if isinstance(value, float) or value is None or isinstance(value, (list, dict)):
        raise ValueError(f"not a canonical claim value: {text!r}")
    return value


def encode_message(path: str, value: Scalar) -> bytes:
    return f"{path}={encode_value(value)}".encode("utf-8")


def decode_message(raw: bytes) -> tuple[str, Scalar]:
    path, sep, rest = raw.decode("utf-8").partition("=")
    if not sep:
        raise ValueError("message has no '='")
    return path, decode_value(rest)


def _check_path(path: Any) -> str:
    if not isinstance(path, str) or not path or "=" in path:
        raise NonScalarValue(f"claim path must be a non-empty string without '=': {path!r}")
    return path


def _value_to_json(value: Scalar) -> Any:
    if isinstance(value, dt.date) and not isinstance(value, dt.datetime):
        return {"@type": "xsd:date", "@value": value.isoformat()}
    return value


def _value_from_json(value: Any) -> Scalar:
    if isinstance(value, dict) and set(value) == {"@type", "@value"} and value["@type"] == "xsd:date":
        return dt.date.fromisoformat(value["@value"])
    return value


def flatten(claims: Mapping | Iterable, prefix: str = "") -> list[tuple[str, Scalar]]:
    """Flatten nested mappings into dotted paths; lists and floats are rejected."""
    items = claims.items() if isinstance(claims, Mapping) else claims
    out: list[tuple[str, Scalar]] = []
    for key, value in items:
        path = f"{prefix}{key}"
        value = _value_from_json(value)
        if isinstance(value, Mapping):
            out.extend(flatten(value, prefix=path + "."))
            continue
        if isinstance(value, float) or value is None or isinstance(value, (list, tuple, set, bytes)):
            raise NonScalarValue(f"claim {path!r} has non-scalar value {value!r}")
        encode_value(value)
        out.append((_check_path(path), value))
    return out


@dataclass
class ClaimSet:
    subject_id: str
    claims: dict[str, Scalar]

    @classmethod
    def build(cls, subject_id: str, claims: Mapping | Iterable) -> "ClaimSet":
        flat = flatten(claims)
        seen: dict[str, Scalar] = {}
        for path, value in flat:
            if path in seen or path == "id":
                raise DuplicatePath(f"duplicate claim path {path!r}")
            seen[path] = value
        return cls(subject_id, seen)

    def all_claims(self) -> dict[str, Scalar]:
        return {"id": self.subject_id, **self.claims}

    def to_json(self) -> dict:
        return {k: _value_to_json(v) for k, v in self.all_claims().items()}


def canonicalize(claim_set: ClaimSet) -> tuple[list[tuple[str, bytes]], dict[str, int]]:
    """Ordered (path, message bytes) pairs and the path -> index map."""
    items = claim_set.all_claims()
    paths = [_check_path(p) for p in items]
    if len(set(paths)) != len(paths):
        raise DuplicatePath("duplicate claim path")
    ordered = sorted(paths, key=lambda p: p.encode("utf-8"))
    messages = [(p, encode_message(p, items[p])) for p in ordered]
    return messages, {p: i for i, p in enumerate(ordered)}


def message_scalars(claim_set: ClaimSet) -> list[int]:
    messages, _ = canonicalize(claim_set)
    return bbs.messages_to_scalars(m for _, m in messages)


# --------------------------------------------------------------------------
# schemas


@dataclass(frozen=True)
class ClaimSchema:
    name: str
    mandatory: tuple[str, ...]
    optional: tuple[str, ...] = ()
    date_fields: tuple[str, ...] = ()

    def check(self, claims: Mapping[str, Scalar]) -> None:
        missing = [p for p in self.mandatory if p not in claims]
        if missing:
            raise SchemaViolation(f"{self.name}: missing mandatory claims {missing}")
        for p in self.date_fields:
            if p in claims and not (isinstance(claims[p], dt.date) and not isinstance(claims[p], dt.datetime)):
                raise SchemaViolation(f"{self.name}: {p} must be a date")


EIDAS_NATURAL_PERSON = ClaimSchema(
    name="eidas-natural-person",
    mandatory=("familyName", "firstNames", "dateOfBirth", "uniqueIdentifier"),
    optional=(
        "firstNamesAtBirth", "familyNameAtBirth", "placeOfBirth", "currentAddress", "gender",
        "nationality", "countryOfBirth", "townOfBirth", "countryOfResidence", "phone", "email",
    ),
    date_fields=("dateOfBirth",),
)

# only the mandatory attributes; the optional legal-person set is not modelled
EIDAS_LEGAL_PERSON = ClaimSchema(
    name="eidas-legal-person",
    mandatory=("legalName", "uniqueIdentifier"),
)

SCHEMAS = {s.name: s for s in (EIDAS_NATURAL_PERSON, EIDAS_LEGAL_PERSON)}


# --------------------------------------------------------------------------
# predicates


_OPERATORS = (">=", "<=", "in")


@dataclass(frozen=True)
class PredicateSpec:
    path: str
    op: str
    bound: Any
    name: str | None = None

    def claim_name(self) -> str:
        if self.name:
            return self.name
        if self.op == ">=":
            return f"{self.path}Over{self.bound}"
        if self.op == "<=":
            return f"{self.path}AtMost{self.bound}"
        raise UnsupportedOperator("membership predicates need an explicit name")

    def to_json(self) -> dict:
        bound = sorted(self.bound) if self.op == "in" else self.bound
        return {"path": self.path, "op": self.op, "bound": bound, "name": self.name}

    @classmethod
    def from_json(cls, obj: Mapping) -> "PredicateSpec":
        bound = obj["bound"]
        if obj["op"] == "in":
            bound = frozenset(bound)
        return cls(obj["path"], obj["op"], bound, obj.get("name"))


def age_on(birth: dt.date, on: dt.date) -> int:
    """Completed years between ``birth`` and ``on``."""
    return on.year - birth.year - ((on.month, on.day) < (birth.month, birth.day))


def predicate_source(claims: Mapping[str, Scalar], path: str, on: dt.date) -> Scalar:
    # age is derived from the date of birth whenever one is present
    if path == "age" and isinstance(claims.get("dateOfBirth"), dt.date):
        return age_on(claims["dateOfBirth"], on)
    if path not in claims:
        raise PredicateOnMissingPath(f"predicate source {path!r} not in claim set")
    return claims[path]


def evaluate_predicate(spec: PredicateSpec, value: Scalar) -> bool:
    if spec.op == ">=":
        return value >= spec.bound
    if spec.op == "<=":
        return value <= spec.bound
    if spec.op == "in":
        return value in spec.bound
    raise UnsupportedOperator(f"unsupported operator {spec.op!r}")


def predicate_claims(claims: Mapping[str, Scalar], predicates: Sequence[PredicateSpec], on: dt.date) -> dict:
    """Boolean claims for ``predicates`` evaluated against ``claims`` on date ``on``."""
    out: dict[str, bool] = {}
    for spec in predicates:
        if spec.op not in _OPERATORS:
            raise UnsupportedOperator(f"unsupported operator {spec.op!r}")
        name = spec.claim_name()
        if name in claims or name in out:
            raise DuplicatePath(f"predicate claim {name!r} collides with an existing claim")
        source = predicate_source(claims, spec.path, on)
        try:
            out[name] = evaluate_predicate(spec, source)
        except TypeError:
            raise UnsupportedOperator(f"{spec.op} does not apply to {spec.path}={source!r}") from None
    return out


# --------------------------------------------------------------------------
# credentials


@dataclass(frozen=True)
class ProofBlock:
    verification_method: str
    proof_value: bytes
    created: str
    type_label: str = PROOF_TYPE
    proof_purpose: str = PROOF_PURPOSE

    def to_json(self) -> dict:
        return {
            "type": self.type_label,
            "created": self.created,
            "proofPurpose": self.proof_purpose,
            "verificationMethod": self.verification_method,
            "proofValue": base64.b64encode(self.proof_value).decode("ascii"),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ProofBlock":
        return cls(
            verification_method=obj["verificationMethod"],
            proof_value=base64.b64decode(obj["proofValue"], validate=True),
            created=obj["created"],
            type_label=obj["type"],
            proof_purpose=obj["proofPurpose"],
        )


@dataclass(frozen=True)
class Credential:
    id: str
    issuer: str
    issuance_date: str
    subject: ClaimSet
    proof: ProofBlock
    type_labels: tuple[str, ...] = ("VerifiableCredential",)
    context: tuple[str, ...] = (VC_CONTEXT,)

    @property
    def header(self) -> bytes:
        return signature_header(self.id, self.issuer)

    @property
    def holder(self) -> str:
        return self.subject.subject_id

    def paths(self) -> list[str]:
        return list(canonicalize(self.subject)[1])

    def to_json(self) -> dict:
        return {
            "@context": list(self.context),
            "id": self.id,
            "type": list(self.type_labels),
            "issuer": self.issuer,
            "issuanceDate": self.issuance_date,
            "credentialSubject": self.subject.to_json(),
            "proof": self.proof.to_json(),
        }

    def encode(self) -> bytes:
        return canonical_json(self.to_json())

    @classmethod
    def from_json(cls, obj: Mapping) -> "Credential":
        try:
            subject = dict(obj["credentialSubject"])
            subject_id = subject.pop("id")
            types = obj["type"]
            return cls(
                id=obj["id"],
                issuer=obj["issuer"],
                issuance_date=obj["issuanceDate"],
                subject=ClaimSet.build(subject_id, subject),
                proof=ProofBlock.from_json(obj["proof"]),
                type_labels=tuple([types] if isinstance(types, str) else types),
                context=tuple(obj["@context"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed credential: {exc}") from None


def signature_header(credential_id: str, issuer: str) -> bytes:
    return canonical_json({"id": credential_id, "issuer": issuer})


def mint_credential_id(issuer: str, issuance_date: str, subject: ClaimSet, types: Sequence[str]) -> str:
    body = canonical_json(
        {"issuer": issuer, "issuanceDate": issuance_date, "credentialSubject": subject.to_json(), "type": list(types)}
    )
    return ID_PREFIX + content_id(body)


def resolve_issuer_key(resolver: DidResolver, issuer: str, key_ref: str | None = None) -> tuple[str, bbs.PublicKey]:
    """(verification method id, BBS public key) for ``issuer``; UnresolvableIssuer otherwise."""
    if not is_did(issuer):
        raise UnresolvableIssuer(f"issuer {issuer!r} is not a DID")
    try:
        doc: DidDocument = resolver.resolve(issuer)
    except (NotFound, ParseError) as exc:
        raise UnresolvableIssuer(f"cannot resolve issuer {issuer}: {exc}") from None
    if doc.deactivated:
        raise UnresolvableIssuer(f"issuer {issuer} is deactivated")
    if key_ref is not None and not key_ref.startswith(doc.id + "#"):
        raise UnresolvableIssuer(f"{key_ref} is not a key of {issuer}")
    found = doc.bbs_key(key_ref)
    if found is None:
        raise UnresolvableIssuer(f"issuer {issuer} lists no {BBS_KEY_TYPE} key")
    return found


def issue(
    issuer_sk: bbs.SecretKey,
    issuer_did: str,
    holder_did: str,
    holder_pubkey: bytes,
    claims: Mapping | ClaimSet,
    *,
    resolver: DidResolver,
    schema: ClaimSchema | None = None,
    predicates: Sequence[PredicateSpec] = (),
    issuance_date: str | None = None,
    types: Sequence[str] = ("VerifiableCredential",),
) -> Credential:
    """Sign ``claims`` about ``holder_did`` with the issuer's BBS key.

    The holder's public key is added as the ``publicKey`` claim. Predicate
    claims (see :func:`issue_with_predicates`) are computed here.
    """
    if "VerifiableCredential" not in types:
        raise SchemaViolation("type list must contain VerifiableCredential")
    base = claims.claims if isinstance(claims, ClaimSet) else claims
    cs = ClaimSet.build(holder_did, base)
    if schema is not None:
        schema.check(cs.claims)
    if "publicKey" in cs.claims:
        raise DuplicatePath("publicKey is reserved for the holder key")
    cs.claims["publicKey"] = b58encode(bytes(holder_pubkey))

    issuance_date = issuance_date or now_rfc3339()
    cs.claims.update(predicate_claims(cs.claims, predicates, dt.date.fromisoformat(issuance_date[:10])))

    key_ref, pk = resolve_issuer_key(resolver, issuer_did)
    if bbs.sk_to_pk(issuer_sk) != pk:
        raise UnresolvableIssuer("signing key does not match the issuer's published BBS key")

    cred_id = mint_credential_id(issuer_did, issuance_date, cs, types)
    sig = bbs.sign(issuer_sk, pk, signature_header(cred_id, issuer_did), message_scalars(cs))
    return Credential(
        id=cred_id,
        issuer=issuer_did,
        issuance_date=issuance_date,
        subject=cs,
        proof=ProofBlock(key_ref, sig.to_bytes(), issuance_date),
        type_labels=tuple(types),
    )


def issue_with_predicates(
    issuer_sk: bbs.SecretKey,
    issuer_did: str,
    holder_did: str,
    holder_pubkey: bytes,
    claims: Mapping | ClaimSet,
    predicates: Sequence[PredicateSpec],
    **kwargs,
) -> Credential:
    """Issue with extra boolean claims such as ``ageOver18`` (age >= 18, inclusive)."""
    return issue(issuer_sk, issuer_did, holder_did, holder_pubkey, claims, predicates=predicates, **kwargs)


def verify_credential(credential: Credential, resolver: DidResolver) -> str | None:
    """None when the credential's signature checks out, else a reason code."""
    try:
        _, pk = resolve_issuer_key(resolver, credential.issuer, credential.proof.verification_method)
    except UnresolvableIssuer:
        return UNRESOLVABLE_ISSUER
    try:
        sig = bbs.Signature.from_bytes(credential.proof.proof_value)
    except ValueError:
        return BAD_PROOF
    if credential.proof.type_label != PROOF_TYPE:
        return BAD_PROOF
    if not bbs.verify(pk, credential.header, message_scalars(credential.subject), sig):
        return BAD_PROOF
    return None


# --------------------------------------------------------------------------
# presentations


def presentation_header(nonce: bytes, context: bytes = b"") -> bytes:
    return length_prefixed(b"permadid/presentation/v1", nonce, context)


@dataclass(frozen=True)
class Presentation:
    credential_id: str
    issuer: str
    verification_method: str
    disclosed: tuple[tuple[int, str, Scalar], ...]
    proof: bytes
    presentation_header: bytes
    total_message_count: int

    def disclosed_claims(self) -> list[tuple[str, Scalar]]:
        return [(p, v) for _, p, v in self.disclosed]

    def to_json(self) -> dict:
        return {
            "@context": [VP_CONTEXT],
            "type": ["VerifiablePresentation"],
            "credentialId": self.credential_id,
            "issuer": self.issuer,
            "verificationMethod": self.verification_method,
            "disclosed": [
                {"index": i, "message": encode_message(p, v).decode("utf-8")} for i, p, v in self.disclosed
            ],
            "proof": b64url(self.proof),
            "presentationHeader": b64url(self.presentation_header),
            "totalMessageCount": self.total_message_count,
        }

    def encode(self) -> bytes:
        return canonical_json(self.to_json())

    @classmethod
    def from_json(cls, obj: Mapping) -> "Presentation":
        try:
            disclosed = []
            for entry in obj["disclosed"]:
                path, value = decode_message(entry["message"].encode("utf-8"))
                idx = entry["index"]
                if not isinstance(idx, int) or isinstance(idx, bool):
                    raise ValueError("index must be an integer")
                disclosed.append((idx, path, value))
            total = obj["totalMessageCount"]
            if not isinstance(total, int) or isinstance(total, bool):
                raise ValueError("totalMessageCount must be an integer")
            return cls(
                credential_id=obj["credentialId"],
                issuer=obj["issuer"],
                verification_method=obj["verificationMethod"],
                disclosed=tuple(disclosed),
                proof=b64url_decode(obj["proof"]),
                presentation_header=b64url_decode(obj["presentationHeader"]),
                total_message_count=total,
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"malformed presentation: {exc}") from None

    @classmethod
    def decode(cls, raw: bytes) -> "Presentation":
        try:
            return cls.from_json(json.loads(raw.decode("utf-8")))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(str(exc)) from None


def present(
    credential: Credential,
    disclose_paths: Iterable[str],
    verifier_nonce: bytes,
    *,
    resolver: DidResolver,
    context: bytes = b"",
    rng=None,
) -> Presentation:
    messages, index_map = canonicalize(credential.subject)
    wanted = set(disclose_paths)
    unknown = wanted - set(index_map)
    if unknown:
        raise UnknownPath(f"credential has no claims {sorted(unknown)}")
    try:
        key_ref, pk = resolve_issuer_key(resolver, credential.issuer, credential.proof.verification_method)
        sig = bbs.Signature.from_bytes(credential.proof.proof_value)
    except (UnresolvableIssuer, ValueError) as exc:
        raise InvalidCredential(str(exc)) from None
    scalars = bbs.messages_to_scalars(m for _, m in messages)
    indexes = sorted(index_map[p] for p in wanted)
    ph = presentation_header(verifier_nonce, context)
    try:
        proof = bbs.proof_gen(pk, sig, credential.header, ph, scalars, indexes, rng=rng)
    except bbs.InvalidSignature as exc:
        raise InvalidCredential(f"credential signature does not verify: {exc}") from None
    all_claims = credential.subject.all_claims()
    return Presentation(
        credential_id=credential.id,
        issuer=credential.issuer,
        verification_method=key_ref,
        disclosed=tuple((i, messages[i][0], all_claims[messages[i][0]]) for i in indexes),
        proof=proof.to_bytes(),
        presentation_header=ph,
        total_message_count=len(messages),
    )


@dataclass(frozen=True)
class VerificationOutcome:
    accepted: bool
    reason: str | None = None
    disclosed: tuple[tuple[str, Scalar], ...] = ()

    @property
    def outcome(self) -> str:
        return ACCEPT if self.accepted else REJECT

    def __bool__(self) -> bool:
        return self.accepted

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "reason": self.reason,
            "disclosed": [{"path": p, "value": _value_to_json(v)} for p, v in self.disclosed],
        }


def _reject(reason: str) -> VerificationOutcome:
    return VerificationOutcome(False, reason)


def _indexes_consistent(p: Presentation) -> bool:
    idxs = [i for i, _, _ in p.disclosed]
    paths = [path.encode("utf-8") for _, path, _ in p.disclosed]
    if idxs != sorted(set(idxs)) or any(not 0 <= i < p.total_message_count for i in idxs):
        return False
    # canonical order is by path bytes, so disclosed paths must ascend with their indexes
    return paths == sorted(set(paths))


def verify_presentation(
    presentation: Presentation,
    expected_nonce: bytes,
    *,
    resolver: DidResolver,
    revocations: "RevocationRegistry | None" = None,
    context: bytes = b"",
) -> VerificationOutcome:
    """ACCEPT iff issuer resolves, proof verifies, nonce matches and the credential is not revoked."""
    try:
        _, pk = resolve_issuer_key(resolver, presentation.issuer, presentation.verification_method)
    except UnresolvableIssuer:
        return _reject(UNRESOLVABLE_ISSUER)
    if presentation.presentation_header != presentation_header(expected_nonce, context):
        return _reject(NONCE_MISMATCH)
    if not _indexes_consistent(presentation):
        return _reject(BAD_PROOF)
    try:
        proof = bbs.Proof.from_bytes(presentation.proof)
    except ValueError:
        return _reject(BAD_PROOF)
    if proof.undisclosed_count + len(presentation.disclosed) != presentation.total_message_count:
        return _reject(BAD_PROOF)
    disclosed = [(i, bbs.message_to_scalar(encode_message(p, v))) for i, p, v in presentation.disclosed]
    header = signature_header(presentation.credential_id, presentation.issuer)
    if not bbs.proof_verify(pk, proof, header, presentation.presentation_header, disclosed):
        return _reject(BAD_PROOF)
    if revocations is not None and revocations.is_revoked(presentation.issuer, presentation.credential_id):
        return _reject(REVOKED)
    return VerificationOutcome(True, None, tuple(presentation.disclosed_claims()))


# --------------------------------------------------------------------------
# revocation


_REVOCATION_DOMAIN = b"permadid/revocation-list/v1\n"


@dataclass(frozen=True)
class RevocationList:
    issuer: str
    revoked: frozenset[str]
    sequence: int
    signer_key: bytes
    signature: bytes = b""

    def signing_bytes(self) -> bytes:
        return _REVOCATION_DOMAIN + canonical_json(
            {"issuer": self.issuer, "revoked": sorted(self.revoked), "seq": self.sequence}
        )

    def to_json(self) -> dict:
        return {
            "issuer": self.issuer,
            "revoked": sorted(self.revoked),
            "seq": self.sequence,
            "signer": b64url(self.signer_key),
            "sig": b64url(self.signature),
        }

    def encode(self) -> bytes:
        return canonical_json(self.to_json())

    @classmethod
    def decode(cls, raw: bytes) -> "RevocationList":
        obj = json.loads(raw.decode("utf-8"))
        seq = obj["seq"]
        if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
            raise ValueError("bad sequence")
        if not isinstance(obj["revoked"], list) or not all(isinstance(r, str) for r in obj["revoked"]):
            raise ValueError("bad revoked list")
        return cls(
            issuer=obj["issuer"],
            revoked=frozenset(obj["revoked"]),
            sequence=seq,
            signer_key=b64url_decode(obj["signer"]),
            signature=b64url_decode(obj["sig"]),
        )


class RevocationRegistry:
    """Issuer-signed revocation lists on the weave; highest valid sequence wins."""

    def __init__(self, resolver: DidResolver):
        self.resolver = resolver
        self.weave = resolver.weave

    def _valid(self, issuer: str, tx_id: str) -> RevocationList | None:
        tx = self.weave.get(tx_id)
        try:
            lst = RevocationList.decode(tx.data)
            doc = self.resolver.resolve(issuer)
        except (ValueError, KeyError, TypeError, UnicodeDecodeError, NotFound, ParseError):
            return None
        if lst.issuer != issuer or lst.signer_key not in doc.auth_keys():
            return None
        if tx.owner != doc.controller_did.address and tx.owner != doc.did.address:
            return None
        if not verify_signature(lst.signer_key, lst.signing_bytes(), lst.signature):
            return None
        return lst

    def latest(self, issuer: str) -> RevocationList | None:
        best = None
        for tid in self.weave.query([(REVOCATION_TAG, issuer)]):
            lst = self._valid(issuer, tid)
            if lst is not None and (best is None or lst.sequence > best.sequence):
                best = lst
        return best

    def is_revoked(self, issuer: str, credential_id: str) -> bool:
        lst = self.latest(issuer)
        return lst is not None and credential_id in lst.revoked

    def revoke(self, issuer_key: AuthKeyPair, issuer: str, credential_id: str) -> str:
        try:
            doc = self.resolver.resolve(issuer)
        except (NotFound, ParseError) as exc:
            raise NotIssuer(f"cannot resolve issuer {issuer}: {exc}") from None
        if issuer_key.public_bytes not in doc.auth_keys():
            raise NotIssuer(f"key {issuer_key.address} does not authenticate {issuer}")
        current = self.latest(issuer)
        revoked = (current.revoked if current else frozenset()) | {credential_id}
        seq = current.sequence + 1 if current else 0
        unsigned = RevocationList(issuer, revoked, seq, issuer_key.public_bytes)
        lst = RevocationList(issuer, revoked, seq, issuer_key.public_bytes, issuer_key.sign(unsigned.signing_bytes()))
        return self.weave.submit(
            issuer_key.address,
            [("Content-Type", "application/json"), (REVOCATION_TAG, issuer)],
            lst.encode(),
        )
