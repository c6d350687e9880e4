import pytest

from fmgovern.canonical import (
    ZERO_HASH,
    canonical_bytes,
    canonical_loads,
    hash_canonical,
    is_hash_hex,
    sha256_hex,
    u64_be,
)


def test_keys_sorted_and_compact():
    raw = canonical_bytes({"b": 1, "a": [2, {"z": 0, "y": "x"}]})
    assert raw == b'{"a":[2,{"y":"x","z":0}],"b":1}'


def test_encoding_is_utf8_not_escaped():
    raw = canonical_bytes({"note": "café"})
    assert "café".encode("utf-8") in raw


def test_floats_rejected():
    with pytest.raises(ValueError):
        canonical_bytes({"x": 1.5})
    with pytest.raises(ValueError):
        canonical_bytes([0.0])


def test_non_string_keys_rejected():
    with pytest.raises(ValueError):
        canonical_bytes({1: "a"})


def test_order_independence():
    a = canonical_bytes({"x": 1, "y": 2})
    b = canonical_bytes({"y": 2, "x": 1})
    assert a == b
    assert hash_canonical({"x": 1, "y": 2}) == hash_canonical({"y": 2, "x": 1})


def test_loads_roundtrip():
    value = {"a": [1, 2, 3], "b": {"c": "d"}, "e": None, "f": True}
    assert canonical_loads(canonical_bytes(value)) == value


def test_loads_rejects_non_canonical_bytes():
    with pytest.raises(ValueError):
        canonical_loads(b'{"b":1,"a":2}')  # unsorted
    with pytest.raises(ValueError):
        canonical_loads(b'{"a": 1}')  # whitespace
    with pytest.raises(ValueError):
        canonical_loads(b"not json")


def test_u64_be_fixed_width():
    assert u64_be(0) == b"\x00" * 8
    assert u64_be(1) == b"\x00" * 7 + b"\x01"
    assert u64_be(2**40) == bytes.fromhex("0000010000000000")
    with pytest.raises(ValueError):
        u64_be(-1)


def test_hash_hex_predicate():
    assert is_hash_hex(ZERO_HASH)
    assert is_hash_hex(sha256_hex(b"x"))
    assert not is_hash_hex("00" * 31)
    assert not is_hash_hex("G" * 64)
    assert not is_hash_hex(("AB" * 32))  # uppercase rejected
