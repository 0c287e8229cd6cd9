"""``permadid`` command line.

State lives in a home directory (``--home``, default ``$PERMADID_HOME`` or
``./.permadid``)::

    weave.pweave      append-only weave snapshot
    keys/<label>.json key files, or keystores when PERMADID_PASSPHRASE is set
    nonces.json       nonces already spent by ``vc verify``

Every write is followed by a mined block so the result is resolvable at
once. Exit codes: 0 success, 1 rejected (verification REJECT or a refused
operation), 2 usage error, 3 internal error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import re
import sys
from collections import OrderedDict
from pathlib import Path
from typing import Any

from . import bbs
from . import credentials as vc
from .did import Did, DidDocument, create_document
from .encoding import b64url, b64url_decode, canonical_json
from .errors import NotFound, PermadidError
from .keys import AuthKeyPair
from .keystore import Keystore
from .protocol import NONCE_WINDOW, Network, run_scenario
from .weave import Weave

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
KEY_FORMAT = "permadid-key"
PASSPHRASE_ENV = "PERMADID_PASSPHRASE"

logger = logging.getLogger("permadid")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# output schemas, one per subcommand (JSON Schema draft 2020-12)


def _obj(required: dict[str, Any]) -> dict:
    return {"type": "object", "required": sorted(required), "properties": required}


_STR, _INT, _BOOL = {"type": "string"}, {"type": "integer"}, {"type": "boolean"}
_NSTR = {"type": ["string", "null"]}
_OUTCOME = _obj(
    {"outcome": {"enum": ["ACCEPT", "REJECT"]}, "reason": _NSTR, "disclosed": {"type": "array"}}
)

OUTPUT_SCHEMAS: dict[str, dict] = {
    "keygen": _obj({"label": _STR, "did": _STR, "address": _STR, "bbsPublicKey": _NSTR, "encrypted": _BOOL}),
    "did create": _obj({"document": {"type": "object"}}),
    "did publish": _obj({"did": _STR, "tx": _STR, "versionSequence": _INT}),
    "did resolve": _obj({"document": {"type": "object"}, "tx": _STR}),
    "name register": _obj({"name": _STR, "target": _STR, "seq": _INT, "tx": _STR}),
    "name update": _obj({"name": _STR, "target": _STR, "seq": _INT, "tx": _STR}),
    "name resolve": _obj({"name": _STR, "target": _STR, "owner": _STR, "seq": _INT}),
    "vc issue": _obj({"credential": {"type": "object"}, "id": _STR, "paths": {"type": "array"}}),
    "vc present": _obj({"presentation": {"type": "object"}}),
    "vc verify": _OUTCOME,
    "revoke": _obj({"credentialId": _STR, "tx": _STR}),
    "scenario run": _obj({"ok": _BOOL, "transcript": {"type": "array"}}),
    "weave mine": _obj({"height": _INT, "blockId": _STR, "txCount": _INT}),
    "weave verify": _obj({"ok": _BOOL, "violations": {"type": "array"}}),
    "weave stats": _obj({"height": _INT, "blocks": _INT, "sealed_transactions": _INT, "pending_transactions": _INT}),
    "keystore grant": _obj({"label": _STR, "grants": {"type": "object"}}),
    "keystore revoke": _obj({"label": _STR, "grants": {"type": "object"}}),
}


# --------------------------------------------------------------------------
# state helpers


class Home:
    def __init__(self, root: str | os.PathLike, consumer: str = "cli"):
        self.root = Path(root)
        self.consumer = consumer
        self.keys_dir = self.root / "keys"
        self._network: Network | None = None

    @property
    def weave_path(self) -> Path:
        return self.root / "weave.pweave"

    @property
    def network(self) -> Network:
        if self._network is None:
            self.root.mkdir(parents=True, exist_ok=True)
            self._network = Network(Weave(self.weave_path))
        return self._network

    def mine(self) -> None:
        self.network.mine()

    # ---- keys

    def key_path(self, label: str) -> Path:
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", label):
            raise UsageError(f"bad key label {label!r}")
        return self.keys_dir / f"{label}.json"

    def save_key(self, label: str, auth: AuthKeyPair, bbs_sk: bbs.SecretKey | None) -> bool:
        path = self.key_path(label)
        if path.exists():
            raise UsageError(f"key {label!r} already exists at {path}")
        self.keys_dir.mkdir(parents=True, exist_ok=True)
        material = {"auth": auth.private_bytes}
        if bbs_sk is not None:
            material["bbs"] = bbs_sk.to_bytes()
        passphrase = os.environ.get(PASSPHRASE_ENV)
        if passphrase:
            Keystore.create(path, passphrase, material, grants={self.consumer: ["sign_tx", "sign_credential"]})
            return True
        body = {"format": KEY_FORMAT, **{k: b64url(v) for k, v in material.items()}}
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o600)
        with os.fdopen(fd, "wb") as fh:
            fh.write(canonical_json(body))
        return False

    def _material(self, label: str, capability: str, name: str) -> bytes | None:
        path = self.key_path(label)
        if not path.exists():
            raise UsageError(f"no key named {label!r} (run keygen first)")
        obj = json.loads(path.read_text(encoding="utf-8"))
        if obj.get("format") == KEY_FORMAT:
            return b64url_decode(obj[name]) if name in obj else None
        passphrase = os.environ.get(PASSPHRASE_ENV)
        if not passphrase:
            raise UsageError(f"{label!r} is an encrypted keystore; set {PASSPHRASE_ENV}")
        store = Keystore.open(path, passphrase)
        if name not in store.keys:
            return None
        return store.use_key(self.consumer, capability, name)

    def auth_key(self, label: str) -> AuthKeyPair:
        return AuthKeyPair.generate(self._material(label, "sign_tx", "auth"))

    def bbs_key(self, label: str) -> bbs.SecretKey:
        raw = self._material(label, "sign_credential", "bbs")
        if raw is None:
            raise UsageError(f"key {label!r} has no BBS signing key (keygen --issuer)")
        return bbs.SecretKey.from_bytes(raw)

    def keystore(self, label: str) -> Keystore:
        passphrase = os.environ.get(PASSPHRASE_ENV)
        if not passphrase:
            raise UsageError(f"set {PASSPHRASE_ENV} to edit keystore grants")
        return Keystore.open(self.key_path(label), passphrase)

    # ---- spent nonces

    def spend_nonce(self, nonce: bytes) -> bool:
        """Record ``nonce`` as used; False when it already was."""
        path = self.root / "nonces.json"
        seen = OrderedDict.fromkeys(json.loads(path.read_text()) if path.exists() else [])
        key = nonce.hex()
        if key in seen:
            return False
        seen[key] = None
        while len(seen) > NONCE_WINDOW:
            seen.popitem(last=False)
        self.root.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(list(seen)))
        return True


def _read_json_arg(value: str) -> Any:
    text = Path(value[1:]).read_text(encoding="utf-8") if value.startswith("@") else value
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None


def _read_json_file(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"no such file {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None


def _write_out(path: str | None, obj: dict) -> None:
    if path:
        Path(path).write_bytes(canonical_json(obj) + b"\n")


def _hex(value: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise UsageError(f"not a hex string: {value!r}") from None


_PREDICATE_RE = re.compile(r"^\s*([^\s<>=]+)\s*(>=|<=|\sin\s)\s*(.+?)(?:\s+as\s+(\w+))?\s*$")


def parse_predicate(text: str) -> vc.PredicateSpec:
    """``age>=18``, ``age<=65 as notSenior`` or ``nationality in DE,FR as euCitizen``."""
    m = _PREDICATE_RE.match(text)
    if not m:
        raise UsageError(f"cannot parse predicate {text!r}")
    path, op, bound, name = m.group(1), m.group(2).strip(), m.group(3), m.group(4)
    if op == "in":
        return vc.PredicateSpec(path, op, frozenset(b.strip() for b in bound.split(",")), name)
    try:
        return vc.PredicateSpec(path, op, int(bound), name)
    except ValueError:
        raise UsageError(f"predicate bound must be an integer: {bound!r}") from None


def _claims_from_json(obj: Any, schema: vc.ClaimSchema | None) -> dict:
    if not isinstance(obj, dict):
        raise UsageError("claims must be a JSON object")
    out = {}
    for k, v in obj.items():
        v = vc._value_from_json(v)
        if schema and k in schema.date_fields and isinstance(v, str):
            try:
                v = dt.date.fromisoformat(v)
            except ValueError:
                raise UsageError(f"{k} must be an ISO date") from None
        out[k] = v
    return out


def _holder_key(net: Network, ref: str) -> tuple[str, bytes]:
    doc = net.resolver.resolve(ref)
    return doc.id, doc.method(doc.authentication[0]).public_key


# --------------------------------------------------------------------------
# commands


def cmd_keygen(home: Home, args) -> dict:
    auth = AuthKeyPair.generate()
    sk = pk = None
    if args.issuer:
        sk, pk = bbs.keygen(os.urandom(32))
    encrypted = home.save_key(args.label, auth, sk)
    return {
        "label": args.label,
        "did": str(Did(auth.address)),
        "address": auth.address,
        "bbsPublicKey": b64url(pk.to_bytes()) if pk else None,
        "encrypted": encrypted,
    }


def _document(home: Home, args, version_sequence: int = 0) -> DidDocument:
    auth = home.auth_key(args.label)
    bbs_keys = []
    raw = home._material(args.label, "sign_credential", "bbs")
    if raw is not None:
        bbs_keys.append(bbs.sk_to_pk(bbs.SecretKey.from_bytes(raw)))
    services = [tuple(s.split(",", 2)) for s in args.service or []]
    if any(len(s) != 3 for s in services):
        raise UsageError("--service takes id,type,endpoint")
    return create_document(
        [auth], services=services, controller=args.controller, bbs_keys=bbs_keys, version_sequence=version_sequence
    )


def cmd_did_create(home: Home, args) -> dict:
    return {"document": _document(home, args).to_json()}


def cmd_did_publish(home: Home, args) -> dict:
    net = home.network
    auth = home.auth_key(args.label)
    did = str(Did(auth.address))
    try:
        seq = net.resolver.resolve(did).version_sequence + 1
    except NotFound:
        seq = 0
    doc = _document(home, args, seq)
    signer = home.auth_key(args.signer) if args.signer else auth
    tx = net.resolver.publish(doc, signer)
    home.mine()
    return {"did": doc.id, "tx": tx, "versionSequence": seq}


def cmd_did_resolve(home: Home, args) -> dict:
    doc, tx = home.network.resolver.resolve_with_tx(args.ref)
    return {"document": doc.to_json(), "tx": tx}


def _name_target(home: Home, args) -> str:
    if args.target:
        return args.target
    auth = home.auth_key(args.key)
    _, tx = home.network.resolver.resolve_with_tx(str(Did(auth.address)))
    return tx


def cmd_name_register(home: Home, args) -> dict:
    rec = home.network.names.register(args.name, _name_target(home, args), home.auth_key(args.key))
    home.mine()
    return {"name": rec.name, "target": rec.target, "seq": rec.sequence, "tx": rec.record_tx}


def cmd_name_update(home: Home, args) -> dict:
    rec = home.network.names.update(args.name, _name_target(home, args), home.auth_key(args.key))
    home.mine()
    return {"name": rec.name, "target": rec.target, "seq": rec.sequence, "tx": rec.record_tx}


def cmd_name_resolve(home: Home, args) -> dict:
    target, rec = home.network.names.resolve(args.name)
    return {"name": rec.name, "target": target, "owner": rec.owner_address, "seq": rec.sequence}


def cmd_vc_issue(home: Home, args) -> dict:
    net = home.network
    schema = vc.SCHEMAS[args.schema] if args.schema else None
    claims = _claims_from_json(_read_json_arg(args.claims), schema)
    holder_did, holder_pk = _holder_key(net, args.holder)
    issuer_auth = home.auth_key(args.issuer)
    cred = vc.issue(
        home.bbs_key(args.issuer),
        str(Did(issuer_auth.address)),
        holder_did,
        holder_pk,
        claims,
        resolver=net.resolver,
        schema=schema,
        predicates=[parse_predicate(p) for p in args.predicate or []],
    )
    _write_out(args.out, cred.to_json())
    return {"credential": cred.to_json(), "id": cred.id, "paths": cred.paths()}


def cmd_vc_present(home: Home, args) -> dict:
    cred = vc.Credential.from_json(_read_json_file(args.credential))
    paths = [p for item in args.disclose or [] for p in item.split(",") if p]
    pres = vc.present(
        cred, paths, _hex(args.nonce), resolver=home.network.resolver, context=args.context.encode("utf-8")
    )
    _write_out(args.out, pres.to_json())
    return {"presentation": pres.to_json()}


def cmd_vc_verify(home: Home, args) -> dict:
    net = home.network
    pres = vc.Presentation.from_json(_read_json_file(args.presentation))
    nonce = _hex(args.nonce)
    outcome = vc.verify_presentation(
        pres, nonce, resolver=net.resolver, revocations=net.revocations, context=args.context.encode("utf-8")
    )
    if outcome.reason != vc.NONCE_MISMATCH and not args.no_track_nonce and not home.spend_nonce(nonce):
        outcome = vc.VerificationOutcome(False, vc.NONCE_MISMATCH)
    return outcome.to_json()


def cmd_revoke(home: Home, args) -> dict:
    auth = home.auth_key(args.issuer)
    tx = home.network.revocations.revoke(auth, str(Did(auth.address)), args.credential_id)
    home.mine()
    return {"credentialId": args.credential_id, "tx": tx}


def cmd_scenario_run(home: Home, args) -> dict:
    network = home.network if args.persist else None
    run = run_scenario(_read_json_file(args.file), network)
    return {"ok": run.ok, "transcript": run.transcript}


def cmd_weave_mine(home: Home, args) -> dict:
    block = home.network.weave.mine_block()
    return {"height": block.height, "blockId": block.block_id, "txCount": len(block.tx_ids)}


def cmd_weave_verify(home: Home, args) -> dict:
    violations = home.network.weave.violations()
    return {"ok": not violations, "violations": [str(v) for v in violations]}


def cmd_weave_stats(home: Home, args) -> dict:
    return home.network.weave.stats().to_json()


def cmd_keystore_grant(home: Home, args) -> dict:
    store = home.keystore(args.label)
    store.grant(args.consumer, args.capability)
    return {"label": args.label, "grants": {c: sorted(v) for c, v in store.grants.items()}}


def cmd_keystore_revoke(home: Home, args) -> dict:
    store = home.keystore(args.label)
    store.revoke(args.consumer, args.capability or None)
    return {"label": args.label, "grants": {c: sorted(v) for c, v in store.grants.items()}}


def cmd_gateway_serve(home: Home, args) -> dict:
    from .gateway import GatewayConfig, serve

    home.network  # create the weave file if missing
    gw = serve(GatewayConfig(args.host, args.port, str(home.weave_path), args.allow_writes))
    print(f"serving {home.weave_path} on {gw.url}", file=sys.stderr)
    try:
        gw.serve_forever()
    except KeyboardInterrupt:
        pass
    return {}


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permadid", description="Self-sovereign identity on a simulated blockweave.")
    p.add_argument("--home", default=os.environ.get("PERMADID_HOME", ".permadid"), help="state directory")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--consumer", default="cli", help="keystore consumer name used for key access")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(parent, name, fn, help_text):
        sp = parent.add_parser(name, help=help_text)
        sp.set_defaults(fn=fn)
        return sp

    kg = add(sub, "keygen", cmd_keygen, "generate an identity key")
    kg.add_argument("label")
    kg.add_argument("--issuer", action="store_true", help="also generate a BBS credential-signing key")

    did = sub.add_parser("did", help="DID documents").add_subparsers(dest="sub", required=True)
    for name, fn in (("create", cmd_did_create), ("publish", cmd_did_publish)):
        sp = add(did, name, fn, f"{name} the DID document for a key")
        sp.add_argument("label")
        sp.add_argument("--controller")
        sp.add_argument("--service", action="append", metavar="ID,TYPE,ENDPOINT")
        if name == "publish":
            sp.add_argument("--signer", help="controller key label when it differs from the subject")
    add(did, "resolve", cmd_did_resolve, "resolve a DID or name").add_argument("ref")

    name = sub.add_parser("name", help="name registry").add_subparsers(dest="sub", required=True)
    for verb, fn in (("register", cmd_name_register), ("update", cmd_name_update)):
        sp = add(name, verb, fn, f"{verb} a name")
        sp.add_argument("name")
        sp.add_argument("--key", required=True, help="owner key label")
        sp.add_argument("--target", help="transaction id (default: the key's DID document)")
    add(name, "resolve", cmd_name_resolve, "resolve a name").add_argument("name")

    cred = sub.add_parser("vc", help="credentials").add_subparsers(dest="sub", required=True)
    sp = add(cred, "issue", cmd_vc_issue, "issue a credential")
    sp.add_argument("--issuer", required=True, help="issuer key label")
    sp.add_argument("--holder", required=True, help="holder DID or name")
    sp.add_argument("--claims", required=True, help="JSON object or @file")
    sp.add_argument("--schema", choices=sorted(vc.SCHEMAS))
    sp.add_argument("--predicate", action="append", help="e.g. 'age>=18'")
    sp.add_argument("--out")
    sp = add(cred, "present", cmd_vc_present, "derive a selective-disclosure presentation")
    sp.add_argument("credential")
    sp.add_argument("--disclose", action="append", help="claim path(s), comma separated")
    sp.add_argument("--nonce", required=True, help="verifier nonce, hex")
    sp.add_argument("--context", default="")
    sp.add_argument("--out")
    sp = add(cred, "verify", cmd_vc_verify, "verify a presentation")
    sp.add_argument("presentation")
    sp.add_argument("--nonce", required=True)
    sp.add_argument("--context", default="")
    sp.add_argument("--no-track-nonce", action="store_true", help="do not record the nonce as spent")

    sp = add(sub, "revoke", cmd_revoke, "revoke a credential")
    sp.add_argument("credential_id")
    sp.add_argument("--issuer", required=True)

    sc = sub.add_parser("scenario", help="scenario scripts").add_subparsers(dest="sub", required=True)
    sp = add(sc, "run", cmd_scenario_run, "run a scenario script")
    sp.add_argument("file")
    sp.add_argument("--persist", action="store_true", help="run against the home weave instead of a fresh one")

    wv = sub.add_parser("weave", help="weave maintenance").add_subparsers(dest="sub", required=True)
    add(wv, "mine", cmd_weave_mine, "seal pending transactions")
    add(wv, "verify", cmd_weave_verify, "check structural integrity")
    add(wv, "stats", cmd_weave_stats, "summary statistics")

    ks = sub.add_parser("keystore", help="keystore permissions").add_subparsers(dest="sub", required=True)
    for verb, fn in (("grant", cmd_keystore_grant), ("revoke", cmd_keystore_revoke)):
        sp = add(ks, verb, fn, f"{verb} consumer capabilities")
        sp.add_argument("label")
        sp.add_argument("consumer")
        sp.add_argument("capability", nargs="*" if verb == "revoke" else "+")

    gw = sub.add_parser("gateway", help="HTTP gateway").add_subparsers(dest="sub", required=True)
    sp = add(gw, "serve", cmd_gateway_serve, "serve the home weave over HTTP")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8080)
    sp.add_argument("--allow-writes", action="store_true")
    return p


def _print(result: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(result, ensure_ascii=False, sort_keys=True))
        return
    for key, value in result.items():
        if isinstance(value, (dict, list)):
            print(f"{key}:")
            print(json.dumps(value, indent=2, ensure_ascii=False, sort_keys=True))
        else:
            print(f"{key}: {value}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    home = Home(args.home, args.consumer)
    try:
        result = args.fn(home, args)
    except UsageError as exc:
        print(f"permadid: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PermadidError as exc:
        err = {"error": exc.code, "message": str(exc)}
        print(json.dumps(err) if args.json else f"permadid: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except Exception:  # noqa: BLE001 - last-resort boundary
        logger.exception("internal error")
        return EXIT_INTERNAL
    _print(result, args.json)
    if result.get("outcome") == vc.REJECT or result.get("ok") is False:
        return EXIT_REJECT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
