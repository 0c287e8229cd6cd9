"""Issuer, holder and verifier orchestration over a shared weave.

A :class:`Network` bundles the weave, name registry, DID resolver and
revocation registry that all entities see. Entities are
:class:`EntityProfile` objects; each is single-owner mutable state and
entities only exchange immutable messages (credentials, requests and
presentations).

The three phases are

1. :meth:`Network.setup_entity` generates keys, publishes a DID document,
   optionally registers a name and mines so the entity resolves at once;
2. :meth:`Network.run_issuance` has an issuer sign claims into the holder's
   in-memory wallet (credentials never go on the weave);
3. :meth:`Network.run_verification` has the holder answer a verifier's
   request with a selective-disclosure presentation bound to a fresh
   single-use nonce.

:meth:`Network.refresh_identity` rotates the holder's keys and DID and has
every credential reissued, so presentations made afterwards share no
holder identifier with earlier ones.
"""

from __future__ import annotations

import json
import os
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from . import bbs
from . import credentials as vc
from .did import DidDocument, DidResolver, create_document
from .errors import (
    NameTaken,
    NoMatchingCredential,
    NotFound,
    ParseError,
    PermadidError,
    UnknownName,
    UnresolvableIssuer,
)
from .keys import AuthKeyPair
from .naming import NameRegistry
from .weave import Weave

ISSUER = "issuer"
HOLDER = "holder"
VERIFIER = "verifier"
SERVICE_PROVIDER = "service_provider"
ROLES = (ISSUER, HOLDER, VERIFIER, SERVICE_PROVIDER)

UNRESOLVABLE_HOLDER = "UnresolvableHolder"
DISCLOSURE_MISMATCH = "DisclosureMismatch"

NONCE_SIZE = 32
NONCE_WINDOW = 10_000


class NonceTracker:
    """Outstanding nonces a verifier has handed out; each one is accepted once.

    Bounded: past ``capacity`` outstanding nonces the oldest are forgotten,
    which only ever turns a late answer into a rejection.
    """

    def __init__(self, capacity: int = NONCE_WINDOW):
        self.capacity = capacity
        self._outstanding: OrderedDict[bytes, None] = OrderedDict()

    def issue(self) -> bytes:
        nonce = os.urandom(NONCE_SIZE)
        while nonce in self._outstanding:
            nonce = os.urandom(NONCE_SIZE)
        self._outstanding[nonce] = None
        while len(self._outstanding) > self.capacity:
            self._outstanding.popitem(last=False)
        return nonce

    def is_outstanding(self, nonce: bytes) -> bool:
        return nonce in self._outstanding

    def consume(self, nonce: bytes) -> bool:
        return self._outstanding.pop(nonce, 0) is None

    def __len__(self) -> int:
        return len(self._outstanding)


@dataclass
class WalletEntry:
    credential: vc.Credential
    claims: dict
    predicates: tuple[vc.PredicateSpec, ...] = ()
    schema: vc.ClaimSchema | None = None


@dataclass
class EntityProfile:
    role: str
    auth: AuthKeyPair
    did: str
    name: str | None = None
    published_doc_tx: str | None = None
    bbs_sk: bbs.SecretKey | None = None
    bbs_pk: bbs.PublicKey | None = None
    wallet: list[WalletEntry] = field(default_factory=list)
    nonces: NonceTracker = field(default_factory=NonceTracker)
    issued: list[str] = field(default_factory=list)
    # owns the name record; kept across refreshes while the DID keys rotate
    name_key: AuthKeyPair | None = None

    def __post_init__(self):
        if self.name is not None and self.name_key is None:
            self.name_key = self.auth

    @classmethod
    def generate(cls, role: str, name: str | None = None) -> "EntityProfile":
        """Fresh keys and the derived DID; nothing is published yet."""
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}; expected one of {ROLES}")
        auth = AuthKeyPair.generate()
        sk = pk = None
        if role == ISSUER:
            sk, pk = bbs.keygen(os.urandom(32))
        doc = create_document([auth], bbs_keys=[pk] if pk else ())
        return cls(role=role, auth=auth, did=doc.id, name=name, bbs_sk=sk, bbs_pk=pk)

    @property
    def public_key(self) -> bytes:
        return self.auth.public_bytes

    def document(self, services: Iterable = (), version_sequence: int = 0) -> DidDocument:
        return create_document(
            [self.auth],
            services=services,
            bbs_keys=[self.bbs_pk] if self.bbs_pk else (),
            version_sequence=version_sequence,
        )

    def credentials(self) -> list[vc.Credential]:
        return [e.credential for e in self.wallet]

    def find_credential(self, paths: Iterable[str]) -> vc.Credential | None:
        wanted = set(paths)
        for entry in reversed(self.wallet):
            if wanted <= set(entry.credential.subject.all_claims()):
                return entry.credential
        return None

    def __repr__(self):
        return f"EntityProfile(role={self.role!r}, did={self.did!r}, name={self.name!r})"


@dataclass(frozen=True)
class VerificationRequest:
    required_paths: frozenset[str]
    nonce: bytes
    verifier: str

    @property
    def context(self) -> bytes:
        return self.verifier.encode("utf-8")

    def to_json(self) -> dict:
        return {"requiredPaths": sorted(self.required_paths), "nonce": self.nonce.hex(), "verifier": self.verifier}


@dataclass(frozen=True)
class VerificationResult:
    outcome: str
    reason: str | None = None
    disclosed: tuple[tuple[str, Any], ...] = ()
    presentation: vc.Presentation | None = None

    @property
    def accepted(self) -> bool:
        return self.outcome == vc.ACCEPT

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "reason": self.reason,
            "disclosed": [{"path": p, "value": vc._value_to_json(v)} for p, v in self.disclosed],
        }


def _reject(reason: str, presentation: vc.Presentation | None = None) -> VerificationResult:
    return VerificationResult(vc.REJECT, reason, (), presentation)


class Network:
    """Shared public infrastructure: weave, names, DIDs and revocation lists."""

    def __init__(self, weave: Weave | None = None):
        self.weave = weave if weave is not None else Weave(allow_empty_blocks=True)
        self.names = NameRegistry(self.weave)
        self.resolver = DidResolver(self.weave, self.names)
        self.revocations = vc.RevocationRegistry(self.resolver)

    def mine(self):
        if self.weave.pending():
            return self.weave.mine_block()
        return None

    # ---- phase 1

    def publish(self, entity: EntityProfile, *, version_sequence: int = 0) -> str:
        doc = entity.document(version_sequence=version_sequence)
        entity.published_doc_tx = self.resolver.publish(doc, entity.auth)
        return entity.published_doc_tx

    def setup_entity(self, role: str, name: str | None = None) -> EntityProfile:
        if name is not None:
            owner = self.names.owner_of(name, include_pending=True)
            if owner is not None:
                raise NameTaken(f"{name!r} is already registered")
        entity = EntityProfile.generate(role, name)
        tx = self.publish(entity)
        if name is not None:
            self.names.register(name, tx, entity.name_key)
        self.mine()
        return entity

    # ---- phase 2

    def run_issuance(
        self,
        issuer: EntityProfile,
        holder: EntityProfile,
        claims: Mapping,
        predicates: Sequence[vc.PredicateSpec] = (),
        schema: vc.ClaimSchema | None = None,
    ) -> vc.Credential:
        if issuer.bbs_sk is None:
            raise UnresolvableIssuer(f"{issuer.did} holds no BBS signing key")
        cred = vc.issue(
            issuer.bbs_sk,
            issuer.did,
            holder.did,
            holder.public_key,
            claims,
            resolver=self.resolver,
            schema=schema,
            predicates=predicates,
        )
        holder.wallet.append(WalletEntry(cred, dict(claims), tuple(predicates), schema))
        issuer.issued.append(cred.id)
        return cred

    def revoke(self, issuer: EntityProfile, credential_id: str) -> str:
        tx = self.revocations.revoke(issuer.auth, issuer.did, credential_id)
        self.mine()
        return tx

    # ---- phase 3

    def request(self, verifier: EntityProfile, paths: Iterable[str]) -> VerificationRequest:
        return VerificationRequest(frozenset(paths), verifier.nonces.issue(), verifier.did)

    def present(self, holder: EntityProfile, request: VerificationRequest) -> vc.Presentation:
        cred = holder.find_credential(request.required_paths)
        if cred is None:
            raise NoMatchingCredential(f"no credential covers {sorted(request.required_paths)}")
        return vc.present(
            cred, request.required_paths, request.nonce, resolver=self.resolver, context=request.context
        )

    def check(
        self,
        verifier: EntityProfile,
        request: VerificationRequest,
        presentation: vc.Presentation,
        holder_ref: str | None = None,
    ) -> VerificationResult:
        """The verifier's side: holder lookup, nonce, proof, disclosure and revocation checks."""
        if holder_ref is not None:
            try:
                self.resolver.resolve(holder_ref)
            except (NotFound, UnknownName, ParseError, ValueError):
                return _reject(UNRESOLVABLE_HOLDER, presentation)
        if request.verifier != verifier.did or not verifier.nonces.is_outstanding(request.nonce):
            return _reject(vc.NONCE_MISMATCH, presentation)
        outcome = vc.verify_presentation(
            presentation,
            request.nonce,
            resolver=self.resolver,
            revocations=self.revocations,
            context=request.context,
        )
        # a nonce is spent by any answer that reaches it, accepted or not
        if outcome.reason != vc.NONCE_MISMATCH:
            verifier.nonces.consume(request.nonce)
        if not outcome.accepted:
            return _reject(outcome.reason, presentation)
        if {p for p, _ in outcome.disclosed} != set(request.required_paths):
            return _reject(DISCLOSURE_MISMATCH, presentation)
        return VerificationResult(vc.ACCEPT, None, outcome.disclosed, presentation)

    def run_verification(
        self, verifier: EntityProfile, holder: EntityProfile, request: VerificationRequest
    ) -> VerificationResult:
        presentation = self.present(holder, request)
        return self.check(verifier, request, presentation, holder.name or holder.did)

    # ---- key refresh

    def refresh_identity(self, holder: EntityProfile, issuers: Sequence[EntityProfile]) -> EntityProfile:
        """Rotate the holder's keys and DID and have every credential reissued.

        The returned profile replaces ``holder``; the name, if any, now
        points at the new document.
        """
        by_did = {i.did: i for i in issuers}
        missing = {e.credential.issuer for e in holder.wallet} - set(by_did)
        if missing:
            raise UnresolvableIssuer(f"no issuer profile for {sorted(missing)}")
        fresh = EntityProfile.generate(holder.role, holder.name)
        fresh.name_key = holder.name_key
        tx = self.publish(fresh)
        if holder.name is not None:
            self.names.update(holder.name, tx, holder.name_key)
        self.mine()
        for entry in holder.wallet:
            self.run_issuance(by_did[entry.credential.issuer], fresh, entry.claims, entry.predicates, entry.schema)
        return fresh


# --------------------------------------------------------------------------
# scenario scripts


@dataclass
class ScenarioRun:
    network: Network
    entities: dict[str, EntityProfile]
    transcript: list[dict]

    @property
    def ok(self) -> bool:
        return all(step.get("ok", True) for step in self.transcript)


def _load_script(script: Any) -> list[dict]:
    if isinstance(script, (str, os.PathLike)):
        with open(script, encoding="utf-8") as fh:
            script = json.load(fh)
    steps = script.get("steps") if isinstance(script, dict) else script
    if not isinstance(steps, list) or not all(isinstance(s, dict) and "action" in s for s in steps):
        raise ParseError("scenario must be a list of {action, actor, params} steps")
    return steps


def _date_claims(claims: Mapping) -> dict:
    # dates in scenario files use the xsd:date value objects of credential JSON
    return {k: vc._value_from_json(v) for k, v in claims.items()}


def run_scenario(script: Any, network: Network | None = None) -> ScenarioRun:
    """Drive setup/issue/verify/replay/revoke/refresh/resolve steps; see the README for the format."""
    net = network or Network()
    entities: dict[str, EntityProfile] = {}
    captured: dict[str, tuple[VerificationRequest, vc.Presentation, str]] = {}
    transcript: list[dict] = []

    def entity(label: str) -> EntityProfile:
        if label not in entities:
            raise ParseError(f"unknown actor {label!r}")
        return entities[label]

    for n, step in enumerate(_load_script(script)):
        action, actor, params = step["action"], step.get("actor"), step.get("params", {})
        record: dict = {"step": n, "action": action, "actor": actor}
        started = time.perf_counter()
        try:
            if action == "setup":
                ent = net.setup_entity(params.get("role", HOLDER), params.get("name"))
                entities[actor] = ent
                record.update(did=ent.did, name=ent.name, documentTx=ent.published_doc_tx)
            elif action == "issue":
                schema = vc.SCHEMAS[params["schema"]] if params.get("schema") else None
                preds = [vc.PredicateSpec.from_json(p) for p in params.get("predicates", [])]
                cred = net.run_issuance(
                    entity(actor), entity(params["holder"]), _date_claims(params["claims"]), preds, schema
                )
                record.update(credentialId=cred.id, paths=cred.paths())
            elif action == "verify":
                holder = entity(params["holder"])
                request = net.request(entity(actor), params["paths"])
                presentation = net.present(holder, request)
                result = net.check(entity(actor), request, presentation, holder.name or holder.did)
                captured[actor] = (request, presentation, holder.name or holder.did)
                record.update(request=request.to_json(), presentation=presentation.to_json(), **result.to_json())
            elif action == "replay":
                request, presentation, ref = captured[actor]
                result = net.check(entity(actor), request, presentation, ref)
                record.update(presentation=presentation.to_json(), **result.to_json())
            elif action == "revoke":
                holder = entity(params["holder"])
                issuer = entity(actor)
                revoked = [c.id for c in holder.credentials() if c.issuer == issuer.did]
                for cid in revoked:
                    net.revoke(issuer, cid)
                record.update(revoked=revoked)
            elif action == "refresh":
                issuers = [e for e in entities.values() if e.role == ISSUER]
                old = entity(actor)
                entities[actor] = net.refresh_identity(old, issuers)
                record.update(previousDid=old.did, did=entities[actor].did)
            elif action == "resolve":
                doc, tx = net.resolver.resolve_with_tx(params["ref"])
                record.update(did=doc.id, documentTx=tx)
            else:
                raise ParseError(f"unknown action {action!r}")
            record["ok"] = True
        except PermadidError as exc:
            record.update(ok=False, error=exc.code, message=str(exc))
        if "expect" in step:
            got = record.get("outcome") or ("ERROR" if not record["ok"] else "OK")
            want = step["expect"]
            record["ok"] = got == want or record.get("reason") == want or record.get("error") == want
            record["expected"] = want
        elif "outcome" in record:
            record["ok"] = record["ok"] and record["outcome"] == vc.ACCEPT
        record["elapsedMs"] = round((time.perf_counter() - started) * 1000, 2)
        transcript.append(record)
    return ScenarioRun(net, entities, transcript)
