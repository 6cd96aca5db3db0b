"""Key tags, colliding-key forging, real signing keys, and invalid material.

The key tag is the 16-bit checksum resolvers use to pre-filter candidate
DNSKEYs.  Because it is a plain ones-complement-style sum, a forger can
hit any target tag almost for free: fill the key field with seeded random
bytes, then patch one aligned 16-bit word (``patch`` mode, a couple of
iterations).  ``bruteforce`` mode instead re-rolls whole keys until the
tag matches, and ``oncurve`` mode re-rolls genuine keypairs so the forged
records survive point-validity checks.  All generation is a pure function
of its inputs and a seed.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace
from functools import lru_cache

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ec, ed448, ed25519
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)
from cryptography.hazmat.primitives.hashes import SHA256, SHA384

from . import ciphers
from .records import (
    DEFAULT_EXPIRATION,
    DEFAULT_INCEPTION,
    DnskeyRecord,
    DsRecord,
    FLAG_KSK,
    FLAG_ZSK,
    RecordError,
    RrsigRecord,
)
from .wire import DnsName, ResourceRecord

BRUTEFORCE_TRIAL_CAP = 1 << 24

FORGE_PATCH = "patch"
FORGE_BRUTEFORCE = "bruteforce"
FORGE_ONCURVE = "oncurve"


class ForgeError(RuntimeError):
    """Forging could not satisfy its contract within its trial budget."""


def compute_keytag(rdata: bytes) -> int:
    """16-bit key tag over DNSKEY rdata.

    Big-endian 16-bit words are summed (a trailing odd byte counts as the
    high octet), the carry is folded in once, and the result is masked to
    16 bits.
    """
    acc = 0
    for i, byte in enumerate(rdata):
        acc += byte if i & 1 else byte << 8
    acc += (acc >> 16) & 0xFFFF
    return acc & 0xFFFF


@lru_cache(maxsize=65536)
def _cached_keytag(rdata: bytes) -> int:
    return compute_keytag(rdata)


def keytag_of(key: DnskeyRecord) -> int:
    return _cached_keytag(key.rdata())


def seeded_bytes(n: int, *tags: object) -> bytes:
    """Deterministic byte stream derived from a tag tuple via SHA-256."""
    material = "|".join(str(t) for t in tags).encode()
    out = bytearray()
    counter = 0
    while len(out) < n:
        out += hashlib.sha256(material + struct.pack(">I", counter)).digest()
        counter += 1
    return bytes(out[:n])


def _patch_key_bytes(key: bytes, rdata_prefix: bytes, target_tag: int) -> bytes | None:
    """Adjust one aligned 16-bit word of `key` so the full rdata hits the tag.

    The tag is (sum + folded carry) mod 2**16, so solving for the word is a
    short fixed-point iteration over the carry; the fold can skip at most a
    couple of values, in which case None is returned and the caller re-rolls.
    """
    if len(key) < 2:
        return None
    rdata_len = len(rdata_prefix) + len(key)
    # Highest word-aligned offset fully inside the key field.
    word_off = rdata_len - 2 if rdata_len % 2 == 0 else rdata_len - 3
    if word_off < len(rdata_prefix):
        return None
    base = bytearray(rdata_prefix + key)
    base[word_off:word_off + 2] = b"\x00\x00"
    base_sum = 0
    for i, byte in enumerate(base):
        base_sum += byte if i & 1 else byte << 8
    carry = 0
    for _ in range(8):
        word = (target_tag - base_sum - carry) & 0xFFFF
        total = base_sum + word
        if (total + ((total >> 16) & 0xFFFF)) & 0xFFFF == target_tag:
            patched = bytearray(rdata_prefix + key)
            patched[word_off:word_off + 2] = struct.pack(">H", word)
            return bytes(patched[len(rdata_prefix):])
        carry = (total >> 16) & 0xFFFF
    return None


def forge_colliding_key(
    algorithm: int | str,
    target_tag: int,
    owner: DnsName,
    flags: int = FLAG_ZSK,
    seed: int = 0,
    index: int = 0,
    mode: str = FORGE_PATCH,
) -> DnskeyRecord:
    """One well-formed DNSKEY whose computed tag equals `target_tag`.

    `index` distinguishes members of a colliding set under one seed.
    Patch-mode keys have the right field length but are not valid curve
    points; oncurve mode pays the full keypair brute force instead.
    """
    spec = ciphers.resolve(algorithm)
    if not 0 <= target_tag <= 0xFFFF:
        raise ValueError("target tag must be a 16-bit value")
    prefix = struct.pack(">HBB", flags, 3, spec.code)

    if mode == FORGE_PATCH:
        for attempt in range(64):
            key = seeded_bytes(spec.key_field_len, "forge", spec.name, flags,
                               owner.to_text(), seed, index, attempt)
            patched = _patch_key_bytes(key, prefix, target_tag)
            if patched is not None:
                record = DnskeyRecord(owner, flags, spec.code, patched)
                if keytag_of(record) == target_tag:
                    return record
        raise ForgeError("patch mode failed to converge")

    if mode == FORGE_BRUTEFORCE:
        for trial in range(BRUTEFORCE_TRIAL_CAP):
            key = seeded_bytes(spec.key_field_len, "forge-bf", spec.name, flags,
                               owner.to_text(), seed, index, trial)
            record = DnskeyRecord(owner, flags, spec.code, key)
            if keytag_of(record) == target_tag:
                return record
        raise ForgeError(f"no tag match within {BRUTEFORCE_TRIAL_CAP} trials")

    if mode == FORGE_ONCURVE:
        for trial in range(BRUTEFORCE_TRIAL_CAP):
            pair = generate_keypair(spec, owner, flags,
                                    seed=f"oncurve|{seed}|{index}|{trial}")
            if keytag_of(pair.dnskey) == target_tag:
                return pair.dnskey
        raise ForgeError(f"no on-curve tag match within {BRUTEFORCE_TRIAL_CAP} trials")

    raise ValueError(f"unknown forge mode {mode!r}")


def forge_colliding_set(
    algorithm: int | str,
    target_tag: int,
    count: int,
    owner: DnsName,
    flags: int = FLAG_ZSK,
    seed: int = 0,
    mode: str = FORGE_PATCH,
) -> list[DnskeyRecord]:
    """`count` pairwise-distinct DNSKEYs sharing one (owner, alg, tag) triple."""
    if count < 1:
        raise ValueError("count must be >= 1")
    keys = []
    seen: set[bytes] = set()
    index = 0
    while len(keys) < count:
        record = forge_colliding_key(algorithm, target_tag, owner, flags,
                                     seed, index, mode)
        index += 1
        if record.public_key in seen:
            continue
        seen.add(record.public_key)
        keys.append(record)
    return keys


# --- genuine keypairs and signatures ---------------------------------------

_EC_PARAMS = {
    13: (ec.SECP256R1(), SHA256, 32),
    14: (ec.SECP384R1(), SHA384, 48),
}


@dataclass(frozen=True)
class SigningKey:
    algorithm: int
    dnskey: DnskeyRecord
    _private: object

    def key_tag(self) -> int:
        return keytag_of(self.dnskey)

    def sign(self, data: bytes) -> bytes:
        if self.algorithm in _EC_PARAMS:
            curve, digest_cls, coord = _EC_PARAMS[self.algorithm]
            # Deterministic (derived-nonce) signing keeps generated zones
            # byte-reproducible from their seed.
            der = self._private.sign(
                data, ec.ECDSA(digest_cls(), deterministic_signing=True))
            r, s = decode_dss_signature(der)
            return r.to_bytes(coord, "big") + s.to_bytes(coord, "big")
        return self._private.sign(data)


def generate_keypair(
    algorithm: int | str,
    owner: DnsName,
    flags: int = FLAG_KSK,
    seed: int | str = 0,
) -> SigningKey:
    """Deterministic-from-seed genuine keypair for a signing-capable cipher."""
    spec = ciphers.resolve(algorithm)
    if not spec.signing:
        raise ciphers.UnsupportedAlgorithm(
            f"{spec.name} has no signing support in this build"
        )
    material = seeded_bytes(64, "keypair", spec.name, owner.to_text(), flags, seed)
    if spec.code in _EC_PARAMS:
        curve, _digest, coord = _EC_PARAMS[spec.code]
        group_order = _EC_GROUP_ORDER[spec.code]
        scalar = int.from_bytes(material, "big") % (group_order - 1) + 1
        private = ec.derive_private_key(scalar, curve)
        nums = private.public_key().public_numbers()
        public = nums.x.to_bytes(coord, "big") + nums.y.to_bytes(coord, "big")
    elif spec.code == 15:
        private = ed25519.Ed25519PrivateKey.from_private_bytes(material[:32])
        public = private.public_key().public_bytes_raw()
    elif spec.code == 16:
        private = ed448.Ed448PrivateKey.from_private_bytes(material[:57])
        public = private.public_key().public_bytes_raw()
    else:  # pragma: no cover - registry and signing flag keep this unreachable
        raise ciphers.UnsupportedAlgorithm(spec.name)
    record = DnskeyRecord(owner, flags, spec.code, public)
    return SigningKey(spec.code, record, private)


_EC_GROUP_ORDER = {
    13: int("ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551", 16),
    14: int("ffffffffffffffffffffffffffffffffffffffffffffffffc7634d81f4372ddf"
            "581a0db248b0a77aecec196accc52973", 16),
}


def load_public_key(record: DnskeyRecord):
    """Public-key object from DNSKEY bytes; raises if the point is invalid."""
    if record.algorithm in _EC_PARAMS:
        curve, _digest, coord = _EC_PARAMS[record.algorithm]
        if len(record.public_key) != 2 * coord:
            raise ValueError("public key field has the wrong length")
        x = int.from_bytes(record.public_key[:coord], "big")
        y = int.from_bytes(record.public_key[coord:], "big")
        return ec.EllipticCurvePublicNumbers(x, y, curve).public_key()
    if record.algorithm == 15:
        return ed25519.Ed25519PublicKey.from_public_bytes(record.public_key)
    if record.algorithm == 16:
        return ed448.Ed448PublicKey.from_public_bytes(record.public_key)
    raise ciphers.UnsupportedAlgorithm(
        f"algorithm {record.algorithm} has no verification support in this build"
    )


def verify_with_key(record: DnskeyRecord, data: bytes, signature: bytes) -> bool:
    """Cryptographic verification; malformed keys or signatures are False."""
    try:
        public = load_public_key(record)
        if record.algorithm in _EC_PARAMS:
            curve, digest_cls, coord = _EC_PARAMS[record.algorithm]
            if len(signature) != 2 * coord:
                return False
            r = int.from_bytes(signature[:coord], "big")
            s = int.from_bytes(signature[coord:], "big")
            public.verify(encode_dss_signature(r, s), data, ec.ECDSA(digest_cls()))
        else:
            public.verify(signature, data)
        return True
    except (ValueError, InvalidSignature, ciphers.UnsupportedAlgorithm):
        return False


def canonical_rrset_bytes(rrset: list[ResourceRecord], original_ttl: int) -> bytes:
    """Canonical form of an rrset for signing: sorted by rdata, fixed TTL."""
    owner = rrset[0].owner.canonical().wire()
    parts = []
    for rr in sorted(rrset, key=lambda r: r.rdata):
        parts.append(owner)
        parts.append(struct.pack(">HHIH", rr.rtype, rr.rclass, original_ttl, len(rr.rdata)))
        parts.append(rr.rdata)
    return b"".join(parts)


def signed_data(sig: RrsigRecord, rrset: list[ResourceRecord]) -> bytes:
    return sig.rdata_prefix() + canonical_rrset_bytes(rrset, sig.original_ttl)


def sign_rrset(
    rrset: list[ResourceRecord],
    signing_key: SigningKey,
    inception: int = DEFAULT_INCEPTION,
    expiration: int = DEFAULT_EXPIRATION,
) -> RrsigRecord:
    """A valid RRSIG over the canonical rrset form, tagged with ground truth."""
    if not rrset:
        raise ValueError("cannot sign an empty rrset")
    owner = rrset[0].owner
    rtype = rrset[0].rtype
    ttl = rrset[0].ttl
    if any(r.owner.canonical() != owner.canonical() or r.rtype != rtype
           for r in rrset):
        raise ValueError("rrset is not uniform in owner and type")
    if inception >= expiration:
        raise RecordError("RRSIG validity window is empty or inverted")
    sig = RrsigRecord(
        owner=owner,
        type_covered=rtype,
        algorithm=signing_key.algorithm,
        labels=len(owner.labels),
        original_ttl=ttl,
        expiration=expiration,
        inception=inception,
        key_tag=signing_key.key_tag(),
        signer_name=signing_key.dnskey.owner,
        signature=b"",
        valid=True,
        signed_by=signing_key.dnskey.rdata(),
    )
    signature = signing_key.sign(signed_data(sig, rrset))
    return replace(sig, signature=signature)


def fabricate_invalid_rrsig(
    template: RrsigRecord,
    variant_index: int,
    seed: int = 0,
    vary_window: bool = False,
) -> RrsigRecord:
    """An RRSIG with the template's triple and unique, invalid signature bytes.

    With `vary_window` the signature bytes are shared and uniqueness comes
    from shifting the inception instead, the alternative de-duplication
    escape some resolvers had to handle.
    """
    if variant_index < 0:
        raise ValueError("variant_index must be >= 0")
    spec = ciphers.resolve(template.algorithm)
    if vary_window:
        signature = seeded_bytes(spec.sig_field_len, "badsig", template.signer_name.to_text(),
                                 template.key_tag, template.type_covered, seed)
        return replace(template, inception=template.inception - 1 - variant_index,
                       signature=signature, valid=False, signed_by=None)
    signature = seeded_bytes(spec.sig_field_len, "badsig", template.signer_name.to_text(),
                             template.key_tag, template.type_covered, seed, variant_index)
    return replace(template, signature=signature, valid=False, signed_by=None)


def invalid_rrsig_template(
    owner: DnsName,
    type_covered: int,
    algorithm: int | str,
    key_tag: int,
    signer_name: DnsName,
    original_ttl: int = 3600,
    inception: int = DEFAULT_INCEPTION,
    expiration: int = DEFAULT_EXPIRATION,
) -> RrsigRecord:
    """Template carrying a triple, for fabricating signature floods."""
    spec = ciphers.resolve(algorithm)
    return RrsigRecord(
        owner=owner,
        type_covered=type_covered,
        algorithm=spec.code,
        labels=len(owner.labels),
        original_ttl=original_ttl,
        expiration=expiration,
        inception=inception,
        key_tag=key_tag,
        signer_name=signer_name,
        signature=bytes(spec.sig_field_len),
        valid=False,
        signed_by=None,
    )


# --- DS digests -------------------------------------------------------------

def compute_ds(key: DnskeyRecord, digest_type: int = ciphers.SHA256_DIGEST_TYPE) -> DsRecord:
    """DS whose digest covers the owner name wire form plus the DNSKEY rdata."""
    if digest_type != ciphers.SHA256_DIGEST_TYPE:
        raise ciphers.UnsupportedAlgorithm(f"unsupported DS digest type {digest_type}")
    digest = ds_digest(key.owner, key.rdata())
    return DsRecord(key.owner, keytag_of(key), key.algorithm, digest_type, digest)


@lru_cache(maxsize=65536)
def ds_digest_wire(owner_wire: bytes, rdata: bytes) -> bytes:
    return hashlib.sha256(owner_wire + rdata).digest()


def ds_digest(owner: DnsName, rdata: bytes) -> bytes:
    return ds_digest_wire(owner.canonical().wire(), rdata)


def ds_match(ds: DsRecord, key: DnskeyRecord) -> bool:
    """Whether the DS digest authenticates this DNSKEY."""
    if ds.digest_type != ciphers.SHA256_DIGEST_TYPE:
        return False
    return (ds.algorithm == key.algorithm
            and ds.key_tag == keytag_of(key)
            and ds.digest == ds_digest(key.owner, key.rdata()))


def fabricate_invalid_ds(
    owner: DnsName,
    key_tag: int,
    algorithm: int | str,
    variant_index: int,
    seed: int = 0,
    digest_type: int = ciphers.SHA256_DIGEST_TYPE,
) -> DsRecord:
    """DS with a unique seeded digest that matches no generated key."""
    if variant_index < 0:
        raise ValueError("variant_index must be >= 0")
    if digest_type != ciphers.SHA256_DIGEST_TYPE:
        raise ciphers.UnsupportedAlgorithm(f"unsupported DS digest type {digest_type}")
    spec = ciphers.resolve(algorithm)
    digest = seeded_bytes(ciphers.SHA256_DIGEST_LEN, "badds", owner.to_text(),
                          key_tag, seed, variant_index)
    return DsRecord(owner, key_tag, spec.code, digest_type, digest)
