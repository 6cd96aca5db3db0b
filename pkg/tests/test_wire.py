"""Wire format encoding, size accounting, and packing maxima."""

import pytest
from hypothesis import given, strategies as st

from dnsseclab import ciphers
from dnsseclab.wire import (
    DnsMessage,
    DnsName,
    ResourceRecord,
    TransportLimitError,
    WireError,
    compressed_message_size,
    encode_message,
    encode_record,
    encode_stream_message,
    message_size,
    pack_budget,
    pack_max,
    record_size,
)

PACKING_TABLE = {
    "ED448": (907, 454, 411_778),
    "ED25519": (1391, 696, 968_136),
    "ECDSAP384SHA384": (589, 519, 305_691),
    "ECDSAP256SHA256": (828, 696, 576_288),
    "RSA-512": (788, 696, 548_448),
    "RSA-1024": (444, 413, 183_372),
    "RSA-2048": (237, 228, 54_036),
    "RSA-4096": (122, 119, 14_518),
}


class TestDnsName:
    def test_round_trip(self):
        name = DnsName.from_text("www-0.attack.er.")
        assert name.to_text() == "www-0.attack.er."
        assert name.wire() == b"\x05www-0\x06attack\x02er\x00"
        assert name.wire_len() == len(name.wire())

    def test_root(self):
        assert DnsName.from_text(".").wire() == b"\x00"
        assert DnsName.from_text(".").to_text() == "."

    def test_parent(self):
        assert DnsName.from_text("a.b.c.").parent().to_text() == "b.c."
        with pytest.raises(WireError):
            DnsName.from_text(".").parent()

    def test_subdomain(self):
        er = DnsName.from_text("er.")
        assert DnsName.from_text("attack.er.").is_subdomain_of(er)
        assert DnsName.from_text("ATTACK.ER.").is_subdomain_of(er)
        assert not DnsName.from_text("attack.example.").is_subdomain_of(er)

    def test_label_too_long(self):
        with pytest.raises(WireError):
            DnsName((b"a" * 64,))

    def test_name_too_long(self):
        with pytest.raises(WireError):
            DnsName(tuple(b"a" * 63 for _ in range(5)))


class TestEncodeRecord:
    def test_a_record_size(self):
        # owner "a." is 3 wire bytes; rdata 4; fixed fields 10
        rr = ResourceRecord(DnsName.from_text("a."), 1, 3600, b"\x06\x06\x06\x06")
        assert len(encode_record(rr)) == 3 + 2 + 2 + 4 + 2 + 4 == 17
        assert record_size(rr) == 17

    def test_dnskey_alg14_field_length(self):
        # key field for the P-384 cipher is 2 x 48 uncompressed coordinates
        spec = ciphers.resolve(14)
        assert spec.key_field_len == 96
        rdata = bytes(4 + spec.key_field_len)
        rr = ResourceRecord(DnsName.from_text("a."), 48, 3600, rdata)
        assert len(encode_record(rr)) == 3 + 10 + 100

    def test_oversize_rdata(self):
        with pytest.raises(WireError):
            ResourceRecord(DnsName.from_text("a."), 1, 3600, bytes(70_000))

    def test_deterministic(self):
        rr = ResourceRecord(DnsName.from_text("x.y."), 16, 60, b"hello")
        assert encode_record(rr) == encode_record(rr)


class TestMessageSize:
    def test_empty_message(self):
        assert message_size(DnsMessage()) == 12

    def test_single_question(self):
        msg = DnsMessage(question=(DnsName.from_text("x."), 1, 1))
        assert message_size(msg) == 12 + 7

    def test_size_matches_encoding(self):
        msg = DnsMessage(question=(DnsName.from_text("q.example."), 255, 1))
        msg.answer.append(ResourceRecord(DnsName.from_text("q.example."), 1, 60, b"\x01\x02\x03\x04"))
        msg.authority.append(ResourceRecord(DnsName.from_text("example."), 2, 60, b"\x00"))
        assert message_size(msg) == len(encode_message(msg))

    @given(st.lists(st.tuples(st.integers(0, 3), st.binary(min_size=0, max_size=64)),
                    max_size=12))
    def test_size_matches_encoding_random(self, records):
        names = [DnsName.from_text(n) for n in ("a.", "bb.cc.", "x.y.z.", ".")]
        msg = DnsMessage(question=(names[0], 1, 1))
        for name_idx, rdata in records:
            msg.answer.append(ResourceRecord(names[name_idx], 1, 30, rdata))
        assert message_size(msg) == len(encode_message(msg))

    def test_compressed_never_larger(self):
        msg = DnsMessage(question=(DnsName.from_text("attack.er."), 48, 1))
        for _ in range(5):
            msg.answer.append(ResourceRecord(DnsName.from_text("attack.er."), 48, 60, bytes(10)))
        assert compressed_message_size(msg) < message_size(msg)
        # repeated owners cost 2 bytes each after the question
        assert compressed_message_size(msg) == 12 + (11 + 4) + 5 * (2 + 10 + 10)


class TestStreamFraming:
    def test_empty(self):
        assert encode_stream_message(DnsMessage()) == b"\x00\x0c" + b"\x00" * 12

    def _message_of_size(self, total: int) -> DnsMessage:
        msg = DnsMessage()
        msg.answer.append(ResourceRecord(DnsName.from_text("."), 1, 0,
                                         bytes(total - 12 - 11)))
        assert message_size(msg) == total
        return msg

    def test_boundary(self):
        framed = encode_stream_message(self._message_of_size(65_535))
        assert framed[:2] == b"\xff\xff"
        assert len(framed) == 2 + 65_535

    def test_boundary_plus_one(self):
        with pytest.raises(TransportLimitError):
            encode_stream_message(self._message_of_size(65_536))


class TestPackMax:
    @pytest.mark.parametrize("cipher,expected", sorted(PACKING_TABLE.items()))
    def test_published_maxima(self, cipher, expected):
        keys, sigs, validations = expected
        assert pack_max(cipher, "dnskey") == keys
        assert pack_max(cipher, "rrsig") == sigs
        assert pack_max(cipher, "dnskey") * pack_max(cipher, "rrsig") == validations

    def test_code_lookup(self):
        assert pack_max(14, "dnskey") == 589
        assert pack_max(15, "dnskey") == 1391

    @pytest.mark.parametrize("cipher", sorted(PACKING_TABLE))
    @pytest.mark.parametrize("kind", ["dnskey", "rrsig"])
    def test_budget_invariant(self, cipher, kind):
        # n records fit beside one complementary record; n+1 do not
        spec = ciphers.resolve(cipher)
        n = pack_max(cipher, kind)
        from dnsseclab.wire import _minimal_record

        counted = record_size(_minimal_record(spec, kind))
        other_kind = "rrsig" if kind == "dnskey" else "dnskey"
        other = record_size(_minimal_record(spec, other_kind))
        assert n * counted + other <= pack_budget()
        assert (n + 1) * counted + other > pack_budget()

    def test_unknown_cipher(self):
        with pytest.raises(ciphers.UnsupportedAlgorithm):
            pack_max("RSA-768", "dnskey")
        with pytest.raises(ciphers.UnsupportedAlgorithm):
            pack_max(99, "dnskey")

    def test_rsa_code_is_ambiguous(self):
        with pytest.raises(ciphers.UnsupportedAlgorithm):
            pack_max(8, "dnskey")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            pack_max(14, "ds")


def test_registry_docs_copy_in_sync():
    import json
    import pathlib

    from dnsseclab.ciphers import registry_table

    path = pathlib.Path(__file__).resolve().parent.parent / "docs" / "cipher_registry.json"
    assert json.loads(path.read_text()) == registry_table()
