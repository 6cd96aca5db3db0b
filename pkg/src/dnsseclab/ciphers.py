"""Registry of DNSSEC signing algorithms and their wire-format field sizes.

Every byte-size computation in the package (record encoding, message
packing, zone fit checks) goes through this table, so the sizes here are
the single source of truth.  Key fields use the minimal legal encoding:
uncompressed curve points without a prefix octet for ECDSA, raw public
keys for EdDSA, and a 1-byte exponent length plus the universal 65537
exponent for RSA.
"""

from __future__ import annotations

from dataclasses import dataclass


class UnsupportedAlgorithm(ValueError):
    """Raised for algorithm codes or cipher names outside the registry."""


@dataclass(frozen=True)
class CipherSpec:
    name: str
    code: int                # DNSKEY/RRSIG algorithm field value
    key_field_len: int       # public key field bytes in DNSKEY rdata
    sig_field_len: int       # signature field bytes in RRSIG rdata
    signing: bool            # real keypair generation supported here


_RSA_CODE = 8  # RSASHA256; the modulus size distinguishes the variants

# RSA key field: 1-byte exponent length + 3-byte exponent (65537) + modulus.
_CIPHERS = (
    CipherSpec("ECDSAP256SHA256", 13, 64, 64, True),
    CipherSpec("ECDSAP384SHA384", 14, 96, 96, True),
    CipherSpec("ED25519", 15, 32, 64, True),
    CipherSpec("ED448", 16, 57, 114, True),
    CipherSpec("RSA-512", _RSA_CODE, 4 + 64, 64, False),
    CipherSpec("RSA-1024", _RSA_CODE, 4 + 128, 128, False),
    CipherSpec("RSA-2048", _RSA_CODE, 4 + 256, 256, False),
    CipherSpec("RSA-4096", _RSA_CODE, 4 + 512, 512, False),
)

BY_NAME = {c.name: c for c in _CIPHERS}
BY_CODE = {c.code: c for c in _CIPHERS if c.code != _RSA_CODE}

SHA256_DIGEST_TYPE = 2
SHA256_DIGEST_LEN = 32


def resolve(cipher: int | str | CipherSpec) -> CipherSpec:
    """Look up a cipher by name, algorithm code, or pass a spec through.

    The RSA variants share algorithm code 8, so they can only be named
    explicitly.
    """
    if isinstance(cipher, CipherSpec):
        return cipher
    if isinstance(cipher, str):
        try:
            return BY_NAME[cipher.upper()]
        except KeyError:
            raise UnsupportedAlgorithm(f"unknown cipher name {cipher!r}") from None
    if cipher == _RSA_CODE:
        raise UnsupportedAlgorithm(
            "algorithm code 8 is ambiguous; use an explicit RSA-<bits> name"
        )
    try:
        return BY_CODE[cipher]
    except KeyError:
        raise UnsupportedAlgorithm(f"unknown algorithm code {cipher}") from None


def registry_table() -> list[dict]:
    """The registry as plain dicts, for the machine-readable docs copy."""
    return [
        {
            "name": c.name,
            "code": c.code,
            "key_field_len": c.key_field_len,
            "sig_field_len": c.sig_field_len,
            "signing": c.signing,
        }
        for c in _CIPHERS
    ]
