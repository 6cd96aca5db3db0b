"""Key tag computation against an independently written oracle."""

import random
import struct

from hypothesis import given, strategies as st

from dnsseclab.keyforge import compute_keytag


def oracle_keytag(rdata: bytes) -> int:
    """Second, separately written tag implementation for cross-checking.

    Pads to an even length, sums the big-endian 16-bit words with
    struct.unpack, folds the carry once, masks to 16 bits.
    """
    padded = rdata + b"\x00" if len(rdata) % 2 else rdata
    total = sum(struct.unpack(f">{len(padded) // 2}H", padded)) if padded else 0
    total += (total >> 16) & 0xFFFF
    return total & 0xFFFF


def test_zero_rdata():
    assert compute_keytag(b"\x00\x00\x00\x00") == 0


def test_small_sum_no_carry():
    assert compute_keytag(b"\x00\x01\x00\x02") == 3


def test_empty_rdata():
    assert compute_keytag(b"") == 0


def test_odd_trailing_byte_is_high_octet():
    assert compute_keytag(b"\x01") == 0x0100


def test_carry_folds_once():
    # 0xffff + 0xffff = 0x1fffe; fold adds the carry once: 0xfffe + 1
    assert compute_keytag(b"\xff\xff\xff\xff") == 0xFFFF


def test_oracle_equivalence_1000_random_inputs():
    rng = random.Random(0xDA7A)
    for _ in range(1000):
        blob = rng.randbytes(rng.randint(0, 1024))
        assert compute_keytag(blob) == oracle_keytag(blob)


@given(st.binary(min_size=0, max_size=2048))
def test_oracle_equivalence_property(blob):
    assert compute_keytag(blob) == oracle_keytag(blob)


@given(st.binary(min_size=0, max_size=256))
def test_tag_is_16_bit(blob):
    assert 0 <= compute_keytag(blob) <= 0xFFFF
