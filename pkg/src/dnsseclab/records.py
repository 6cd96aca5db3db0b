"""DNSSEC record types: DNSKEY, RRSIG, and DS.

Each type knows its rdata encoding, a zonefile presentation form, and a
parser for both.  RRSIG additionally carries two bookkeeping fields that
are not part of the wire data (and are excluded from equality): the
generator's ground-truth validity flag and the rdata of the key that
really produced the signature.  The null-crypto validation mode consults
these instead of running public-key cryptography.
"""

from __future__ import annotations

import base64
import binascii
import calendar
import struct
import time
from dataclasses import dataclass, field, replace

from . import ciphers
from .wire import (
    DnsName,
    ResourceRecord,
    TYPE_DNSKEY,
    TYPE_DS,
    TYPE_RRSIG,
    type_from_text,
    type_to_text,
)

FLAG_ZSK = 256
FLAG_KSK = 257
DNSKEY_PROTOCOL = 3

DEFAULT_TTL = 3600
# Fixed validity window so generated zones are byte-reproducible.
DEFAULT_INCEPTION = 1704067200          # 2024-01-01T00:00:00Z
DEFAULT_EXPIRATION = DEFAULT_INCEPTION + 30 * 86400


class RecordError(ValueError):
    """A record field violates its invariant."""


@dataclass(frozen=True)
class DnskeyRecord:
    owner: DnsName
    flags: int
    algorithm: int
    public_key: bytes
    protocol: int = DNSKEY_PROTOCOL

    def __post_init__(self):
        if self.protocol != DNSKEY_PROTOCOL:
            raise RecordError(f"DNSKEY protocol must be {DNSKEY_PROTOCOL}")

    def rdata(self) -> bytes:
        return struct.pack(">HBB", self.flags, self.protocol, self.algorithm) + self.public_key

    def to_rr(self, ttl: int = DEFAULT_TTL) -> ResourceRecord:
        return ResourceRecord(self.owner, TYPE_DNSKEY, ttl, self.rdata())

    @classmethod
    def from_rdata(cls, owner: DnsName, rdata: bytes) -> "DnskeyRecord":
        if len(rdata) < 4:
            raise RecordError("DNSKEY rdata shorter than its fixed fields")
        flags, protocol, algorithm = struct.unpack(">HBB", rdata[:4])
        return cls(owner, flags, algorithm, rdata[4:], protocol)

    def presentation(self, ttl: int = DEFAULT_TTL) -> str:
        key64 = base64.b64encode(self.public_key).decode("ascii")
        return (f"{self.owner.to_text()} {ttl} IN DNSKEY "
                f"{self.flags} {self.protocol} {self.algorithm} {key64}")


def _sig_time_to_text(epoch: int) -> str:
    return time.strftime("%Y%m%d%H%M%S", time.gmtime(epoch))


def _sig_time_from_text(text: str) -> int:
    return calendar.timegm(time.strptime(text, "%Y%m%d%H%M%S"))


@dataclass(frozen=True)
class RrsigRecord:
    owner: DnsName
    type_covered: int
    algorithm: int
    labels: int
    original_ttl: int
    expiration: int
    inception: int
    key_tag: int
    signer_name: DnsName
    signature: bytes
    # Generator bookkeeping, not wire data: None means unknown.
    valid: bool | None = field(default=None, compare=False)
    signed_by: bytes | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.inception >= self.expiration:
            raise RecordError("RRSIG validity window is empty or inverted")

    def rdata_prefix(self) -> bytes:
        """All rdata fields up to and excluding the signature."""
        return struct.pack(
            ">HBBIIIH",
            self.type_covered,
            self.algorithm,
            self.labels,
            self.original_ttl,
            self.expiration,
            self.inception,
            self.key_tag,
        ) + self.signer_name.canonical().wire()

    def rdata(self) -> bytes:
        return self.rdata_prefix() + self.signature

    def to_rr(self, ttl: int = DEFAULT_TTL) -> ResourceRecord:
        return ResourceRecord(self.owner, TYPE_RRSIG, ttl, self.rdata())

    def triple(self) -> tuple[tuple[bytes, ...], int, int]:
        """The (signer name, algorithm, key tag) association triple."""
        return self.signer_name.canonical().labels, self.algorithm, self.key_tag

    @classmethod
    def from_rdata(cls, owner: DnsName, rdata: bytes) -> "RrsigRecord":
        if len(rdata) < 18:
            raise RecordError("RRSIG rdata shorter than its fixed fields")
        (type_covered, algorithm, labels, original_ttl,
         expiration, inception, key_tag) = struct.unpack(">HBBIIIH", rdata[:18])
        name_labels = []
        pos = 18
        while True:
            if pos >= len(rdata):
                raise RecordError("RRSIG signer name runs past rdata")
            n = rdata[pos]
            pos += 1
            if n == 0:
                break
            if n > 63:
                raise RecordError("compressed names are not valid in RRSIG rdata")
            name_labels.append(rdata[pos:pos + n])
            pos += n
        return cls(owner, type_covered, algorithm, labels, original_ttl,
                   expiration, inception, key_tag,
                   DnsName(tuple(name_labels)), rdata[pos:])

    def presentation(self, ttl: int = DEFAULT_TTL) -> str:
        sig64 = base64.b64encode(self.signature).decode("ascii")
        return (f"{self.owner.to_text()} {ttl} IN RRSIG "
                f"{type_to_text(self.type_covered)} {self.algorithm} {self.labels} "
                f"{self.original_ttl} {_sig_time_to_text(self.expiration)} "
                f"{_sig_time_to_text(self.inception)} {self.key_tag} "
                f"{self.signer_name.to_text()} {sig64}")


@dataclass(frozen=True)
class DsRecord:
    owner: DnsName
    key_tag: int
    algorithm: int
    digest_type: int
    digest: bytes

    def __post_init__(self):
        if self.digest_type == ciphers.SHA256_DIGEST_TYPE:
            if len(self.digest) != ciphers.SHA256_DIGEST_LEN:
                raise RecordError(
                    f"type-2 DS digest must be {ciphers.SHA256_DIGEST_LEN} bytes"
                )

    def rdata(self) -> bytes:
        return struct.pack(">HBB", self.key_tag, self.algorithm, self.digest_type) + self.digest

    def to_rr(self, ttl: int = DEFAULT_TTL) -> ResourceRecord:
        return ResourceRecord(self.owner, TYPE_DS, ttl, self.rdata())

    @classmethod
    def from_rdata(cls, owner: DnsName, rdata: bytes) -> "DsRecord":
        if len(rdata) < 4:
            raise RecordError("DS rdata shorter than its fixed fields")
        key_tag, algorithm, digest_type = struct.unpack(">HBB", rdata[:4])
        return cls(owner, key_tag, algorithm, digest_type, rdata[4:])

    def presentation(self, ttl: int = DEFAULT_TTL) -> str:
        return (f"{self.owner.to_text()} {ttl} IN DS "
                f"{self.key_tag} {self.algorithm} {self.digest_type} "
                f"{self.digest.hex().upper()}")


def a_record(owner: DnsName, address: str, ttl: int = DEFAULT_TTL) -> ResourceRecord:
    parts = [int(p) for p in address.split(".")]
    if len(parts) != 4 or any(not 0 <= p <= 255 for p in parts):
        raise RecordError(f"bad IPv4 address {address!r}")
    from .wire import TYPE_A
    return ResourceRecord(owner, TYPE_A, ttl, bytes(parts))


def generic_record(owner: DnsName, rtype: int, rdata: bytes,
                   ttl: int = DEFAULT_TTL) -> ResourceRecord:
    return ResourceRecord(owner, rtype, ttl, rdata)


def rr_presentation(rr: ResourceRecord) -> str:
    """Present any resource record; unknown types use the generic form."""
    from .wire import TYPE_A
    if rr.rtype == TYPE_A and len(rr.rdata) == 4:
        return (f"{rr.owner.to_text()} {rr.ttl} IN A "
                f"{'.'.join(str(b) for b in rr.rdata)}")
    if rr.rtype == TYPE_DNSKEY:
        return DnskeyRecord.from_rdata(rr.owner, rr.rdata).presentation(rr.ttl)
    if rr.rtype == TYPE_RRSIG:
        return RrsigRecord.from_rdata(rr.owner, rr.rdata).presentation(rr.ttl)
    if rr.rtype == TYPE_DS:
        return DsRecord.from_rdata(rr.owner, rr.rdata).presentation(rr.ttl)
    return (f"{rr.owner.to_text()} {rr.ttl} IN {type_to_text(rr.rtype)} "
            f"\\# {len(rr.rdata)} {rr.rdata.hex().upper()}")


def rr_from_presentation(line: str) -> ResourceRecord:
    """Parse one presentation-format line back into a resource record."""
    fields = line.split()
    if len(fields) < 4 or fields[2].upper() != "IN":
        raise RecordError(f"unparseable record line: {line!r}")
    owner = DnsName.from_text(fields[0])
    ttl = int(fields[1])
    rtype_text = fields[3].upper()
    rest = fields[4:]
    if rtype_text == "A":
        return a_record(owner, rest[0], ttl)
    if rtype_text == "DNSKEY":
        flags, protocol, algorithm = int(rest[0]), int(rest[1]), int(rest[2])
        key = base64.b64decode("".join(rest[3:]))
        return DnskeyRecord(owner, flags, algorithm, key, protocol).to_rr(ttl)
    if rtype_text == "RRSIG":
        rec = RrsigRecord(
            owner=owner,
            type_covered=type_from_text(rest[0]),
            algorithm=int(rest[1]),
            labels=int(rest[2]),
            original_ttl=int(rest[3]),
            expiration=_sig_time_from_text(rest[4]),
            inception=_sig_time_from_text(rest[5]),
            key_tag=int(rest[6]),
            signer_name=DnsName.from_text(rest[7]),
            signature=base64.b64decode("".join(rest[8:])),
        )
        return rec.to_rr(ttl)
    if rtype_text == "DS":
        digest = binascii.unhexlify("".join(rest[3:]))
        return DsRecord(owner, int(rest[0]), int(rest[1]), int(rest[2]), digest).to_rr(ttl)
    if rest and rest[0] == "\\#":
        length = int(rest[1])
        rdata = binascii.unhexlify("".join(rest[2:]))
        if len(rdata) != length:
            raise RecordError(f"generic rdata length mismatch in {line!r}")
        return ResourceRecord(owner, type_from_text(rtype_text), ttl, rdata)
    raise RecordError(f"unsupported record type in line: {line!r}")


def with_window(sig: RrsigRecord, inception: int, expiration: int) -> RrsigRecord:
    return replace(sig, inception=inception, expiration=expiration)
