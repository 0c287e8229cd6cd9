import base64
import hashlib
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from permadid.encoding import (
    b58decode,
    b58encode,
    b64url,
    b64url_decode,
    canonical_json,
    content_id,
    is_id,
    length_prefixed,
)


@given(st.binary(max_size=200))
def test_b64url_roundtrip(data):
    assert b64url_decode(b64url(data)) == data
    assert "=" not in b64url(data)


@pytest.mark.parametrize("bad", ["a", "ab+c", "ab/c", "abc=", "AB", "Aé"])
def test_b64url_rejects(bad):
    # "AB" has nonzero trailing bits, the rest are not in the alphabet or wrong length
    with pytest.raises(ValueError):
        b64url_decode(bad)


@given(st.binary(max_size=100))
def test_content_id_matches_hashlib(data):
    expected = base64.urlsafe_b64encode(hashlib.sha256(data).digest()).decode().rstrip("=")
    cid = content_id(data)
    assert cid == expected and len(cid) == 43 and is_id(cid)


def test_is_id():
    assert not is_id("x" * 42)
    assert not is_id("x" * 44)
    assert not is_id("+" * 43)
    assert not is_id(None)


@given(st.binary(max_size=64))
def test_b58_roundtrip(data):
    assert b58decode(b58encode(data)) == data


def test_b58_known_value():
    assert b58encode(b"hello world") == "StV1DL6CwTryKyV"
    assert b58encode(b"\0\0\x01") == "112"
    with pytest.raises(ValueError):
        b58decode("0OIl")


def test_length_prefixed_is_unambiguous():
    assert length_prefixed(b"ab", b"c") != length_prefixed(b"a", b"bc")


json_values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.text(),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(), inner, max_size=4),
    max_leaves=10,
)


@given(json_values)
def test_canonical_json_stable(obj):
    raw = canonical_json(obj)
    assert canonical_json(json.loads(raw)) == raw


def test_canonical_json_shape():
    assert canonical_json({"b": 1, "a": "é"}) == '{"a":"é","b":1}'.encode("utf-8")
    with pytest.raises(ValueError):
        canonical_json(float("nan"))
