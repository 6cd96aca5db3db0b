"""dnsseclab: an instrumented DNSSEC validation laboratory.

Generates the crafted zones that weaponize permissive DNSSEC validation
(colliding key tags, signature floods, DS-digest floods), counts the
cryptographic work a compliant validator performs on them, applies
resolver mitigation policies, and simulates the resulting denial of
service entirely in process.  For isolated, defensive lab analysis only;
nothing here opens a socket.
"""

__version__ = "0.1.0"

from .ciphers import UnsupportedAlgorithm, resolve as resolve_cipher
from .keyforge import (
    compute_keytag,
    compute_ds,
    fabricate_invalid_ds,
    fabricate_invalid_rrsig,
    forge_colliding_key,
    forge_colliding_set,
    generate_keypair,
    sign_rrset,
)
from .records import DnskeyRecord, DsRecord, RrsigRecord
from .validator import (
    CostCounters,
    MitigationPolicy,
    Status,
    ValidationOutcome,
    ValidatorOptions,
    resolve_and_validate,
)
from .wire import DnsMessage, DnsName, ResourceRecord, encode_record, message_size, pack_max
from .zonegen import AttackVectorSpec, Zone, ZoneGraph, build_zone_graph

__all__ = [
    "AttackVectorSpec",
    "CostCounters",
    "DnsMessage",
    "DnsName",
    "DnskeyRecord",
    "DsRecord",
    "MitigationPolicy",
    "ResourceRecord",
    "RrsigRecord",
    "Status",
    "UnsupportedAlgorithm",
    "ValidationOutcome",
    "ValidatorOptions",
    "Zone",
    "ZoneGraph",
    "build_zone_graph",
    "compute_ds",
    "compute_keytag",
    "encode_record",
    "fabricate_invalid_ds",
    "fabricate_invalid_rrsig",
    "forge_colliding_key",
    "forge_colliding_set",
    "generate_keypair",
    "message_size",
    "pack_max",
    "resolve_and_validate",
    "resolve_cipher",
    "sign_rrset",
]
