import datetime as dt
import json

import pytest

from permadid import credentials as vc
from permadid.errors import NameTaken, NoMatchingCredential, SchemaViolation, UnresolvableIssuer
from permadid.protocol import (
    DISCLOSURE_MISMATCH,
    HOLDER,
    ISSUER,
    EntityProfile,
    NonceTracker,
    run_scenario,
)

EIDAS = {
    "familyName": "Doe",
    "firstNames": "Alice",
    "dateOfBirth": dt.date(2000, 1, 15),
    "uniqueIdentifier": "ES/AS/1",
}


@pytest.fixture
def world(network):
    gov = network.setup_entity("issuer", "gov")
    alice = network.setup_entity("holder", "alice")
    shop = network.setup_entity("verifier")
    return network, gov, alice, shop


def test_setup(world):
    net, gov, alice, shop = world
    doc, tx = net.resolver.resolve_with_tx("alice")
    assert doc.id == alice.did and tx == alice.published_doc_tx
    assert shop.name is None and net.resolver.resolve(shop.did).id == shop.did
    assert net.resolver.resolve(gov.did).bbs_key() is not None
    with pytest.raises(NameTaken):
        net.setup_entity("holder", "alice")


def test_issuance_stays_off_the_weave(world):
    net, gov, alice, _ = world
    before = net.weave.snapshot_hash()
    cred = net.run_issuance(gov, alice, EIDAS, schema=vc.EIDAS_NATURAL_PERSON)
    assert alice.credentials() == [cred]
    assert net.weave.snapshot_hash() == before and net.weave.pending() == []


def test_issuance_with_predicate(world):
    net, gov, alice, _ = world
    cred = net.run_issuance(gov, alice, EIDAS, [vc.PredicateSpec("age", ">=", 18)])
    assert cred.subject.claims["ageOver18"] is True


def test_schema_violation_leaves_wallet_unchanged(world):
    net, gov, alice, _ = world
    with pytest.raises(SchemaViolation):
        net.run_issuance(gov, alice, {"familyName": "Doe"}, schema=vc.EIDAS_NATURAL_PERSON)
    assert alice.wallet == []


def test_verification_and_replay(world):
    net, gov, alice, shop = world
    net.run_issuance(gov, alice, {"name": "Alice", "age": 25})
    req = net.request(shop, {"age"})
    res = net.run_verification(shop, alice, req)
    assert res.accepted and res.disclosed == (("age", 25),)
    replay = net.check(shop, req, res.presentation, "alice")
    assert replay.outcome == "REJECT" and replay.reason == vc.NONCE_MISMATCH
    assert replay.disclosed == ()


def test_foreign_nonce_rejected(world):
    net, gov, alice, shop = world
    other = net.setup_entity("verifier")
    net.run_issuance(gov, alice, {"age": 25})
    req = net.request(other, {"age"})
    pres = net.present(alice, req)
    assert net.check(shop, req, pres).reason == vc.NONCE_MISMATCH


def test_no_matching_credential(world):
    net, gov, alice, shop = world
    with pytest.raises(NoMatchingCredential):
        net.run_verification(shop, alice, net.request(shop, {"age"}))
    net.run_issuance(gov, alice, {"age": 25})
    with pytest.raises(NoMatchingCredential):
        net.run_verification(shop, alice, net.request(shop, {"age", "nationality"}))


def test_issuance_before_setup_fails(network):
    gov = EntityProfile.generate("issuer")
    alice = network.setup_entity("holder")
    with pytest.raises(UnresolvableIssuer):
        network.run_issuance(gov, alice, {"age": 1})


def test_disclosure_exactness(world):
    net, gov, alice, shop = world
    net.run_issuance(gov, alice, {"name": "Alice", "age": 25})
    req = net.request(shop, {"age"})
    wider = vc.present(alice.credentials()[0], {"age", "name"}, req.nonce, resolver=net.resolver, context=req.context)
    res = net.check(shop, req, wider, "alice")
    assert res.reason == DISCLOSURE_MISMATCH and res.disclosed == ()


def test_revocation_flow(world):
    net, gov, alice, shop = world
    cred = net.run_issuance(gov, alice, {"age": 25})
    net.revoke(gov, cred.id)
    res = net.run_verification(shop, alice, net.request(shop, {"age"}))
    assert res.reason == vc.REVOKED


def test_refresh_identity(world):
    net, gov, alice, shop = world
    net.run_issuance(gov, alice, {"name": "Alice", "age": 25})
    before = net.run_verification(shop, alice, net.request(shop, {"age"}))
    fresh = net.refresh_identity(alice, [gov])
    assert fresh.did != alice.did and fresh.name == "alice"
    assert net.resolver.resolve("alice").id == fresh.did
    assert len(fresh.wallet) == 1 and fresh.credentials()[0].holder == fresh.did
    after = net.run_verification(shop, fresh, net.request(shop, {"age"}))
    assert before.accepted and after.accepted
    raw = after.presentation.encode()
    assert alice.did.encode() not in raw and alice.did.split(":")[-1].encode() not in raw


def test_refresh_needs_issuer_profiles(world):
    net, gov, alice, _ = world
    net.run_issuance(gov, alice, {"age": 25})
    with pytest.raises(UnresolvableIssuer):
        net.refresh_identity(alice, [])


def test_nonce_tracker_bounded():
    t = NonceTracker(capacity=3)
    nonces = [t.issue() for _ in range(5)]
    assert len(t) == 3
    assert not t.is_outstanding(nonces[0])
    assert t.consume(nonces[4]) and not t.consume(nonces[4])


def test_scenario_fixture():
    run = run_scenario("fixtures/alice_age.json")
    assert run.ok
    verify = run.transcript[-1]
    assert verify["outcome"] == "ACCEPT"
    assert verify["disclosed"] == [{"path": "age", "value": 25}]
    raw = vc.canonical_json(verify["presentation"])
    assert b"age=25" in raw and b"Alice" not in raw


def test_scenario_replay_revoke_refresh():
    script = [
        {"action": "setup", "actor": "gov", "params": {"role": "issuer"}},
        {"action": "setup", "actor": "alice", "params": {"role": "holder", "name": "alice"}},
        {"action": "setup", "actor": "shop", "params": {"role": "verifier"}},
        {"action": "verify", "actor": "shop", "params": {"holder": "alice", "paths": ["age"]},
         "expect": "NoMatchingCredential"},
        {"action": "issue", "actor": "gov", "params": {
            "holder": "alice", "claims": {"dateOfBirth": {"@type": "xsd:date", "@value": "2001-02-03"}},
            "predicates": [{"path": "age", "op": ">=", "bound": 18}]}},
        {"action": "verify", "actor": "shop", "params": {"holder": "alice", "paths": ["ageOver18"]}},
        {"action": "replay", "actor": "shop", "expect": "NonceMismatch"},
        {"action": "refresh", "actor": "alice"},
        {"action": "verify", "actor": "shop", "params": {"holder": "alice", "paths": ["ageOver18"]}},
        {"action": "revoke", "actor": "gov", "params": {"holder": "alice"}},
        {"action": "replay", "actor": "shop", "expect": "REJECT"},
        {"action": "bogus", "actor": "shop", "expect": "ParseError"},
    ]
    run = run_scenario(script)
    assert run.ok, json.dumps(run.transcript, indent=1, default=str)
    assert run.transcript[5]["disclosed"] == [{"path": "ageOver18", "value": True}]


def test_repeated_refresh_keeps_name(network):
    issuer = network.setup_entity(ISSUER, "gov")
    holder = network.setup_entity(HOLDER, "carol")
    network.run_issuance(issuer, holder, {"age": 40})
    dids = {holder.did}
    for _ in range(3):
        holder = network.refresh_identity(holder, [issuer])
        dids.add(holder.did)
        assert network.resolver.resolve("carol").id == holder.did
    assert len(dids) == 4
