import hashlib
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from permadid.encoding import content_id, is_id
from permadid.errors import CorruptSnapshot, EmptyBundle, MalformedTag, NotFound, NothingToMine, OversizeData
from permadid.weave import Tag, Weave, item_id, parse_item, recall_index, serialize_item, unbundle

A = content_id(b"owner-a")
B = content_id(b"owner-b")
DID_TAGS = [("Content-Type", "application/json"), ("DID-Type", "did-document")]


def test_submit_returns_content_id():
    w = Weave()
    tid = w.submit(A, DID_TAGS, b"{}")
    assert is_id(tid)
    assert tid == item_id(A, [Tag(*t) for t in DID_TAGS], b"{}")
    assert w.get(tid).data == b"{}"


def test_empty_transaction_allowed():
    w = Weave()
    assert is_id(w.submit(A, [], b""))


def test_submit_idempotent():
    w = Weave()
    first = w.submit(A, DID_TAGS, b"x")
    n = len(w)
    assert w.submit(A, DID_TAGS, b"x") == first
    assert len(w) == n
    w.mine_block()
    assert w.submit(A, DID_TAGS, b"x") == first
    assert w.pending() == []


def test_ids_differ_by_owner_tags_and_data():
    w = Weave()
    ids = {w.submit(A, [], b"x"), w.submit(B, [], b"x"), w.submit(A, [("k", "v")], b"x"), w.submit(A, [], b"y")}
    assert len(ids) == 4


def test_tag_validation():
    w = Weave()
    with pytest.raises(MalformedTag):
        w.submit(A, [("", "v")], b"")
    with pytest.raises(MalformedTag):
        w.submit(A, [("n" * 65, "v")], b"")
    with pytest.raises(MalformedTag):
        w.submit(A, [("n", "v" * 1025)], b"")
    with pytest.raises(MalformedTag):
        w.submit(A, ["notapair"], b"")
    with pytest.raises(MalformedTag):
        w.submit("short-owner", [], b"")
    w.submit(A, [("n" * 64, "v" * 1024)], b"")  # limits are inclusive


def test_oversize_data():
    w = Weave(max_data=10)
    w.submit(A, [], b"x" * 10)
    with pytest.raises(OversizeData):
        w.submit(A, [], b"x" * 11)


def test_first_block_has_no_recall():
    w = Weave()
    w.submit(A, [], b"1")
    b = w.mine_block()
    assert b.height == 1 and b.recall_id is None and b.prev_id == w.blocks[0].block_id
    g = w.blocks[0]
    assert g.prev_id is None and g.recall_id is None


def test_recall_index_independent_oracle():
    w = Weave(allow_empty_blocks=True)
    for _ in range(5):
        w.mine_block()
    prev = w.blocks[-1].block_id
    block = w.mine_block()
    assert block.height == 6
    oracle = int(hashlib.sha256(prev.encode()).hexdigest(), 16) % block.height
    assert block.recall_id == w.blocks[oracle].block_id
    assert recall_index(prev, 5) == int(hashlib.sha256(prev.encode()).hexdigest(), 16) % 5


def test_nothing_to_mine():
    w = Weave()
    w.submit(A, [], b"")
    w.mine_block()
    with pytest.raises(NothingToMine):
        w.mine_block()


def test_get_unknown():
    with pytest.raises(NotFound):
        Weave().get("3t8YH9c2sN2F6GpOYXkAAAAAAAAAAAAAAAAAAAAAAAA")


def test_immutability_over_many_blocks():
    w = Weave(allow_empty_blocks=True)
    tid = w.submit(A, DID_TAGS, b"doc bytes")
    w.mine_block()
    for _ in range(100):
        w.mine_block()
    assert w.get(tid).data == b"doc bytes"
    assert w.location(tid) == (1, 0)


def test_pending_visible_but_not_queryable():
    w = Weave()
    tid = w.submit(A, [("k", "v")], b"")
    assert w.get(tid).id == tid
    assert w.query([("k", "v")]) == []
    w.mine_block()
    assert w.query([("k", "v")]) == [tid]


def test_query_order_and_filter():
    w = Weave()
    t1 = w.submit(A, [("k", "v"), ("x", "1")], b"1")
    w.mine_block()
    t2 = w.submit(A, [("k", "v")], b"2")
    t3 = w.submit(B, [("k", "v"), ("x", "1")], b"3")
    w.mine_block()
    assert w.query([("k", "v")]) == [t1, t2, t3]
    assert w.query([("k", "v"), ("x", "1")]) == [t1, t3]
    assert w.query([("k", "nope")]) == []


def test_bundles():
    w = Weave()
    bid, ids = w.bundle_submit(A, [([("Content-Type", "text/plain"), ("n", "1")], b"one"), ([("n", "2")], b"two")])
    w.mine_block()
    assert w.get(ids[0]).data == b"one"
    assert w.get(ids[1]).tag("n") == "2"
    assert w.query([("n", "2")]) == [ids[1]]
    assert w.query([("n", "2")], include_bundled=False) == []
    assert [d for _, _, d in unbundle(w.get(bid))] == [b"one", b"two"]
    with pytest.raises(EmptyBundle):
        w.bundle_submit(A, [])


@given(
    owner=st.binary(min_size=1, max_size=8),
    tags=st.lists(st.tuples(st.text(min_size=1, max_size=10), st.text(max_size=20)), max_size=5),
    data=st.binary(max_size=64),
)
def test_item_serialization_roundtrip(owner, tags, data):
    o = content_id(owner)
    t = tuple(Tag(n, v) for n, v in tags)
    assert parse_item(serialize_item(o, t, data)) == (o, t, data)


def test_snapshot_roundtrip(tmp_path):
    w = Weave(tmp_path / "w.pweave")
    for i in range(20):
        w.submit(A, [("i", str(i))], bytes([i]) * i)
        if i % 3 == 0:
            w.mine_block()
    w.mine_block()
    again = Weave.load(tmp_path / "w.pweave")
    assert again.snapshot_hash() == w.snapshot_hash()
    assert again.verify_weave()
    assert again.query([("i", "7")]) == w.query([("i", "7")])
    reopened = Weave(tmp_path / "w.pweave")
    reopened.submit(B, [], b"more")
    reopened.mine_block()
    assert Weave.load(tmp_path / "w.pweave").height == w.height + 1


def test_snapshot_mutations_detected():
    w = Weave()
    for i in range(10):
        w.submit(A, [("i", str(i))], b"payload %d" % i)
        w.mine_block()
    raw = w.snapshot_bytes()
    rng = random.Random(0)
    for _ in range(50):
        pos = rng.randrange(len(raw))
        mutated = bytearray(raw)
        mutated[pos] ^= rng.randrange(1, 256)
        try:
            assert not Weave.from_bytes(bytes(mutated)).verify_weave()
        except CorruptSnapshot:
            pass


def test_corrupt_snapshot_header():
    with pytest.raises(CorruptSnapshot):
        Weave.from_bytes(b"NOTAWEAVE")
    with pytest.raises(CorruptSnapshot):
        Weave.from_bytes(b"PWEAVE1\n")


def test_stats_and_violations():
    w = Weave()
    w.submit(A, [], b"abc")
    s = w.stats()
    assert s.pending_transactions == 1 and s.sealed_transactions == 0
    w.mine_block()
    s = w.stats()
    assert (s.height, s.blocks, s.sealed_transactions, s.data_bytes) == (1, 2, 1, 3)
    assert w.violations() == []
