import json
import os

import jsonschema
import pytest

from permadid.cli import OUTPUT_SCHEMAS, main, parse_predicate


@pytest.fixture
def run(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("PERMADID_PASSPHRASE", raising=False)
    monkeypatch.chdir(tmp_path)

    def _run(*argv, schema=None):
        code = main(["--home", str(tmp_path / "home"), "--json", *argv])
        out = capsys.readouterr().out
        result = json.loads(out) if out.strip() else None
        if schema and result is not None:
            jsonschema.validate(result, OUTPUT_SCHEMAS[schema])
        return code, result

    return _run


def _setup(run):
    assert run("keygen", "gov", "--issuer", schema="keygen")[0] == 0
    run("keygen", "alice", schema="keygen")
    assert run("did", "publish", "gov", schema="did publish")[0] == 0
    run("did", "publish", "alice", schema="did publish")
    assert run("name", "register", "alice", "--key", "alice", schema="name register")[0] == 0


def test_full_flow(run, tmp_path):
    _setup(run)
    code, res = run("name", "resolve", "alice", schema="name resolve")
    assert code == 0
    code, doc = run("did", "resolve", "alice", schema="did resolve")
    assert doc["tx"] == res["target"]
    code, issued = run("vc", "issue", "--issuer", "gov", "--holder", "alice", "--claims",
                       '{"name": "Alice", "age": 25}', "--predicate", "age>=18", "--out", "cred.json",
                       schema="vc issue")
    assert code == 0 and "ageOver18" in issued["paths"]
    nonce = os.urandom(32).hex()
    code, _ = run("vc", "present", "cred.json", "--disclose", "age", "--nonce", nonce, "--out", "pres.json",
                  schema="vc present")
    assert code == 0
    code, out = run("vc", "verify", "pres.json", "--nonce", nonce, schema="vc verify")
    assert (code, out["outcome"], out["disclosed"]) == (0, "ACCEPT", [{"path": "age", "value": 25}])
    code, out = run("vc", "verify", "pres.json", "--nonce", nonce, schema="vc verify")
    assert (code, out["reason"]) == (1, "NonceMismatch")

    pres = (tmp_path / "pres.json").read_text()
    (tmp_path / "bad.json").write_text(pres.replace("age=25", "age=52"))
    nonce2 = nonce
    code, out = run("vc", "verify", "bad.json", "--nonce", nonce2, "--no-track-nonce")
    assert (code, out["reason"]) == (1, "BadProof")

    cred_id = issued["id"]
    assert run("revoke", cred_id, "--issuer", "gov", schema="revoke")[0] == 0
    code, out = run("vc", "verify", "pres.json", "--nonce", nonce, "--no-track-nonce")
    assert (code, out["reason"]) == (1, "Revoked")


def test_did_create_and_update(run):
    run("keygen", "bob")
    code, out = run("did", "create", "bob", "--service", "vc,VerifiableCredentialService,https://b.example",
                    schema="did create")
    assert code == 0 and out["document"]["service"][0]["serviceEndpoint"] == "https://b.example"
    assert run("did", "publish", "bob")[1]["versionSequence"] == 0
    assert run("did", "publish", "bob")[1]["versionSequence"] == 1


def test_name_update(run):
    _setup(run)
    code, out = run("name", "update", "alice", "--key", "alice", "--target", "B" * 43, schema="name update")
    assert code == 0 and out["seq"] == 1
    assert run("name", "update", "alice", "--key", "gov")[0] == 1


def test_weave_commands(run):
    _setup(run)
    assert run("weave", "verify", schema="weave verify")[1]["ok"] is True
    code, stats = run("weave", "stats", schema="weave stats")
    assert stats["height"] == 3  # two documents and one name record
    assert run("weave", "mine")[0] == 1  # nothing pending


def test_scenario(run):
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    code, out = run("scenario", "run", os.path.join(root, "fixtures", "alice_age.json"), schema="scenario run")
    assert code == 0 and out["ok"]
    assert [s["action"] for s in out["transcript"]] == ["setup", "setup", "setup", "resolve", "issue", "verify"]


def test_usage_errors(run):
    assert run("bogus")[0] == 2
    assert run("vc", "verify", "missing.json", "--nonce", "00")[0] == 2
    assert run("vc", "present", "x.json", "--disclose", "age", "--nonce", "zz")[0] == 2
    assert run("did", "publish", "nobody")[0] == 2


def test_keystore_backed_keys(run, monkeypatch):
    monkeypatch.setenv("PERMADID_PASSPHRASE", "correct horse")
    code, out = run("keygen", "gov", "--issuer")
    assert out["encrypted"] is True
    assert run("did", "publish", "gov")[0] == 0
    code, out = run("keystore", "revoke", "gov", "cli", "sign_tx", schema="keystore revoke")
    assert out["grants"] == {"cli": ["sign_credential"]}
    assert run("did", "publish", "gov")[0] == 1  # PermissionDenied
    assert run("keystore", "grant", "gov", "cli", "sign_tx", schema="keystore grant")[0] == 0
    assert run("did", "publish", "gov")[0] == 0
    monkeypatch.setenv("PERMADID_PASSPHRASE", "wrong")
    assert run("did", "publish", "gov")[0] == 1


def test_parse_predicate():
    assert parse_predicate("age>=18").bound == 18
    p = parse_predicate("nationality in DE, FR as euCitizen")
    assert p.op == "in" and p.bound == {"DE", "FR"} and p.name == "euCitizen"
    with pytest.raises(Exception):
        parse_predicate("age > 18")
