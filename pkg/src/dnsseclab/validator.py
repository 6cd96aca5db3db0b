"""Instrumented DNSSEC validation engine with pluggable mitigation policies.

The engine follows the permissive validation rules real resolvers
implement: try every signature covering an rrset, and for each signature
try every key whose (signer name, algorithm, key tag) triple matches,
until one validates or everything has been tried.  DS digests are checked
against every triple-matching key the same way.  Every unit of
cryptographic work is counted, which makes the cost of crafted inputs an
exact, deterministic quantity.

Two verification modes produce identical counters and statuses on
generated zones: ``real`` runs public-key cryptography over the record
bytes, ``null`` consults the generator's ground-truth flags instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .keyforge import ds_digest_wire as _raw_ds_digest
from .keyforge import keytag_of, signed_data, verify_with_key
from .records import DnskeyRecord, DsRecord, RrsigRecord
from .wire import DnsName, ResourceRecord, TYPE_ANY, TYPE_DS
from .zonegen import TrustAnchor, Zone, ZoneGraph


class Status(enum.Enum):
    SECURE = "Secure"
    BOGUS = "Bogus"
    POLICY_SERVFAIL = "PolicyServfail"
    CHAIN_BROKEN = "ChainBroken"


class Reason(enum.Enum):
    VALIDATED = "validated"
    ALL_SIGNATURES_FAILED = "all-signatures-failed"
    MISSING_RRSIG = "missing-rrsig"
    FAILURE_LIMIT = "failure-limit"
    COLLISION_LIMIT = "collision-limit"
    VALIDATION_LIMIT = "validation-limit"
    NO_DS_MATCH = "no-ds-match"
    DNSKEY_BOGUS = "dnskey-rrset-bogus"
    DS_BOGUS = "ds-rrset-bogus"
    NAME_ERROR = "name-error"
    NO_TRUST_ANCHOR = "no-trust-anchor"


@dataclass
class CostCounters:
    """Exact counts of the cryptographic work performed in a resolution."""

    signature_attempts: int = 0
    signature_failures: int = 0
    signature_successes: int = 0
    digest_computations: int = 0
    keytag_computations: int = 0
    keys_scanned: int = 0
    requery_count: int = 0

    _FIELDS = ("signature_attempts", "signature_failures", "signature_successes",
               "digest_computations", "keytag_computations", "keys_scanned",
               "requery_count")

    def snapshot(self) -> "CostCounters":
        return replace(self)

    def delta(self, since: "CostCounters") -> "CostCounters":
        return CostCounters(*(getattr(self, f) - getattr(since, f)
                              for f in self._FIELDS))

    def add(self, other: "CostCounters") -> "CostCounters":
        return CostCounters(*(getattr(self, f) + getattr(other, f)
                              for f in self._FIELDS))

    def as_dict(self) -> dict:
        return {
            "signature_attempts": self.signature_attempts,
            "signature_failures": self.signature_failures,
            "signature_successes": self.signature_successes,
            "digest_computations": self.digest_computations,
            "keytag_computations": self.keytag_computations,
            "keys_scanned": self.keys_scanned,
            "requery_count": self.requery_count,
        }


@dataclass(frozen=True)
class MitigationPolicy:
    """Per-resolution caps; an absent limit means the permissive baseline.

    ``max_validation_failures`` counts failed signature verifications;
    ``max_colliding_keys`` bounds the candidate set a single triple may
    select; ``max_total_validations`` bounds validation work overall, by
    default counting signature attempts and DS digests jointly.
    """

    max_validation_failures: int | None = None
    max_colliding_keys: int | None = None
    max_total_validations: int | None = None
    count_digests_in_total: bool = True

    @classmethod
    def unlimited(cls) -> "MitigationPolicy":
        return cls()

    @classmethod
    def combined(cls, failures: int = 16, collisions: int = 4,
                 total: int = 8) -> "MitigationPolicy":
        return cls(max_validation_failures=failures, max_colliding_keys=collisions,
                   max_total_validations=total)

    @classmethod
    def from_dict(cls, data: dict | None) -> "MitigationPolicy":
        if not data:
            return cls.unlimited()
        known = {"max_validation_failures", "max_colliding_keys",
                 "max_total_validations", "count_digests_in_total"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown policy fields: {sorted(unknown)}")
        return cls(**data)

    def as_dict(self) -> dict:
        return {
            "max_validation_failures": self.max_validation_failures,
            "max_colliding_keys": self.max_colliding_keys,
            "max_total_validations": self.max_total_validations,
            "count_digests_in_total": self.count_digests_in_total,
        }


@dataclass(frozen=True)
class ValidatorOptions:
    """Behavioral knobs of the modeled resolver, not of the policy."""

    null_crypto: bool = False
    requery_count: int = 0
    rescan_key_selection: bool = False
    max_keys_per_response: int | None = None


@dataclass
class ValidationOutcome:
    status: Status
    reason: Reason
    counters: CostCounters
    stages: dict[str, CostCounters] = field(default_factory=dict)

    @property
    def answer_counters(self) -> CostCounters:
        return self.stages.get("answer", CostCounters())

    def as_dict(self) -> dict:
        return {
            "status": self.status.value,
            "reason": self.reason.value,
            "counters": self.counters.as_dict(),
            "stages": {label: c.as_dict() for label, c in self.stages.items()},
        }


class _PolicyLimit(Exception):
    def __init__(self, reason: Reason):
        self.reason = reason


class _PolicyGuard:
    """Tracks per-resolution totals against the policy limits."""

    def __init__(self, policy: MitigationPolicy, counters: CostCounters):
        self.policy = policy
        self.counters = counters
        self._validations = 0

    def check_candidates(self, count: int) -> None:
        limit = self.policy.max_colliding_keys
        if limit is not None and count > limit:
            raise _PolicyLimit(Reason.COLLISION_LIMIT)

    def before_validation(self, is_digest: bool = False) -> None:
        limit = self.policy.max_total_validations
        if limit is None:
            return
        if is_digest and not self.policy.count_digests_in_total:
            return
        if self._validations >= limit:
            raise _PolicyLimit(Reason.VALIDATION_LIMIT)
        self._validations += 1


class ValidationEngine:
    """One resolution's worth of validation state and counters.

    Key metadata (canonical owner, tag, rdata) is computed once per key
    object and cached for the resolution; the counters still count every
    logical examination.
    """

    def __init__(self, policy: MitigationPolicy | None = None,
                 options: ValidatorOptions | None = None):
        self.policy = policy or MitigationPolicy.unlimited()
        self.options = options or ValidatorOptions()
        self.counters = CostCounters()
        self._guard = _PolicyGuard(self.policy, self.counters)
        self._limit_failures = self.policy.max_validation_failures
        self._key_meta: dict[int, tuple] = {}
        self._key_refs: dict[int, DnskeyRecord] = {}  # pins ids for the cache

    def _meta(self, key: DnskeyRecord) -> tuple:
        """(canonical owner labels, algorithm, key tag, rdata, owner wire)."""
        meta = self._key_meta.get(id(key))
        if meta is None:
            canon = key.owner.canonical()
            rdata = key.rdata()
            meta = (canon.labels, key.algorithm, keytag_of(key), rdata, canon.wire())
            self._key_meta[id(key)] = meta
            self._key_refs[id(key)] = key
        return meta

    # -- key selection -----------------------------------------------------

    def retained_keys(self, dnskey_rrset: list[DnskeyRecord]) -> list[DnskeyRecord]:
        """Keys the resolver keeps from a response, under any buffer cap."""
        cap = self.options.max_keys_per_response
        keys = _dedupe(dnskey_rrset, key=lambda k: self._meta(k)[3])
        if cap is not None:
            keys = keys[:cap]
        return keys

    def _scan_keys(self, owner_labels, algorithm: int, key_tag: int,
                   dnskey_rrset: list[DnskeyRecord],
                   count_traversal: bool) -> list[DnskeyRecord]:
        """One pass over the key list, counting each tag examination.

        `keys_scanned` tracks signature key-selection traversal only; the
        DS matching loop is accounted through tag and digest counters.
        """
        counters = self.counters
        if count_traversal:
            counters.keys_scanned += len(dnskey_rrset)
        candidates = []
        examined = 0
        for key in dnskey_rrset:
            meta = self._key_meta.get(id(key))
            if meta is None:
                meta = self._meta(key)
            if meta[0] != owner_labels or meta[1] != algorithm:
                continue
            examined += 1
            if meta[2] == key_tag:
                candidates.append(key)
        counters.keytag_computations += examined
        return candidates

    def candidate_keys(self, rrsig: RrsigRecord,
                       dnskey_rrset: list[DnskeyRecord]) -> list[DnskeyRecord]:
        """Keys matching the signature's association triple, in rrset order."""
        return self._scan_keys(rrsig.signer_name.canonical().labels,
                               rrsig.algorithm, rrsig.key_tag, dnskey_rrset,
                               count_traversal=True)

    # -- signature verification --------------------------------------------

    def verify_signature(self, rrsig: RrsigRecord, key: DnskeyRecord,
                         rrset: list[ResourceRecord]) -> bool:
        self._guard.before_validation()
        counters = self.counters
        counters.signature_attempts += 1
        if self.options.null_crypto:
            if rrsig.valid is None:
                raise ValueError(
                    "null-crypto mode needs generator ground truth on signatures"
                )
            ok = rrsig.valid and rrsig.signed_by == self._meta(key)[3]
        else:
            ok = verify_with_key(key, signed_data(rrsig, rrset), rrsig.signature)
        if ok:
            counters.signature_successes += 1
        else:
            counters.signature_failures += 1
            limit = self._limit_failures
            if limit is not None and counters.signature_failures >= limit:
                raise _PolicyLimit(Reason.FAILURE_LIMIT)
        return ok

    # -- rrset validation ----------------------------------------------------

    def validate_rrset(self, rrset: list[ResourceRecord],
                       rrsigs: list[RrsigRecord],
                       authenticated_keys: list[DnskeyRecord]) -> tuple[Status, Reason]:
        """Try signatures in order, each against all its candidate keys."""
        rrset = _dedupe(rrset, key=lambda r: r.rdata)
        rrsigs = _dedupe(rrsigs, key=lambda s: s.rdata())
        if not rrsigs:
            return Status.BOGUS, Reason.MISSING_RRSIG
        rescan = self.options.rescan_key_selection
        for rrsig in rrsigs:
            candidates = self.candidate_keys(rrsig, authenticated_keys)
            self._guard.check_candidates(len(candidates))
            for key in candidates:
                if rescan:
                    self.counters.keys_scanned += len(authenticated_keys)
                if self.verify_signature(rrsig, key, rrset):
                    return Status.SECURE, Reason.VALIDATED
        return Status.BOGUS, Reason.ALL_SIGNATURES_FAILED

    # -- DNSKEY set authentication --------------------------------------------

    def authenticate_dnskey_set(self, dnskey_rrset: list[DnskeyRecord],
                                ds_set: list[DsRecord],
                                dnskey_rrsigs: list[RrsigRecord],
                                ) -> tuple[list[DnskeyRecord], Status, Reason]:
        """DS-match a KSK by exhaustive digest comparison, then verify the set.

        Every DS scans its triple-matching candidates, one digest per
        candidate, until a digest matches; without any match the zone's
        chain is broken and the set's signatures are never even tried.
        """
        retained = self.retained_keys(dnskey_rrset)
        ds_set = _dedupe(ds_set, key=lambda d: d.rdata())
        counters = self.counters
        guard = self._guard
        trusted: DnskeyRecord | None = None
        for ds in ds_set:
            candidates = self._scan_keys(ds.owner.canonical().labels, ds.algorithm,
                                         ds.key_tag, retained, count_traversal=False)
            guard.check_candidates(len(candidates))
            digest = ds.digest
            for key in candidates:
                guard.before_validation(is_digest=True)
                counters.digest_computations += 1
                meta = self._meta(key)
                if _raw_ds_digest(meta[4], meta[3]) == digest:
                    trusted = key
                    break
            if trusted is not None:
                break
        if trusted is None:
            return [], Status.CHAIN_BROKEN, Reason.NO_DS_MATCH
        rrset_rrs = [k.to_rr() for k in dnskey_rrset]
        status, reason = self.validate_rrset(rrset_rrs, dnskey_rrsigs, [trusted])
        if status is not Status.SECURE:
            return [], Status.CHAIN_BROKEN, Reason.DNSKEY_BOGUS
        return retained, Status.SECURE, Reason.VALIDATED

    def authenticate_with_anchor(self, zone: Zone, anchor: TrustAnchor,
                                 ) -> tuple[list[DnskeyRecord], Status, Reason]:
        if anchor.ds is not None:
            return self.authenticate_dnskey_set(zone.dnskey_rrset, anchor.ds,
                                                zone.dnskey_rrsigs())
        anchored = [k for k in self.retained_keys(zone.dnskey_rrset)
                    if k.rdata() == anchor.dnskey.rdata()]
        if not anchored:
            return [], Status.CHAIN_BROKEN, Reason.NO_TRUST_ANCHOR
        rrset_rrs = [k.to_rr() for k in zone.dnskey_rrset]
        status, _ = self.validate_rrset(rrset_rrs, zone.dnskey_rrsigs(), anchored)
        if status is not Status.SECURE:
            return [], Status.CHAIN_BROKEN, Reason.DNSKEY_BOGUS
        return self.retained_keys(zone.dnskey_rrset), Status.SECURE, Reason.VALIDATED


def _dedupe(items, key):
    seen = set()
    out = []
    for item in items:
        k = key(item)
        if k in seen:
            continue
        seen.add(k)
        out.append(item)
    return out


# --- module-level operation surface ----------------------------------------

def candidate_keys(rrsig: RrsigRecord, dnskey_rrset: list[DnskeyRecord],
                   counters: CostCounters | None = None) -> list[DnskeyRecord]:
    engine = ValidationEngine()
    if counters is not None:
        engine.counters = counters
        engine._guard.counters = counters
    return engine.candidate_keys(rrsig, dnskey_rrset)


def validate_rrset(rrset: list[ResourceRecord], rrsigs: list[RrsigRecord],
                   authenticated_keys: list[DnskeyRecord],
                   policy: MitigationPolicy | None = None,
                   options: ValidatorOptions | None = None) -> ValidationOutcome:
    engine = ValidationEngine(policy, options)
    try:
        status, reason = engine.validate_rrset(rrset, rrsigs, authenticated_keys)
    except _PolicyLimit as limit:
        status, reason = Status.POLICY_SERVFAIL, limit.reason
    return ValidationOutcome(status, reason, engine.counters)


def authenticate_dnskey_set(dnskey_rrset: list[DnskeyRecord], ds_set: list[DsRecord],
                            dnskey_rrsigs: list[RrsigRecord],
                            policy: MitigationPolicy | None = None,
                            options: ValidatorOptions | None = None,
                            ) -> tuple[list[DnskeyRecord], ValidationOutcome]:
    engine = ValidationEngine(policy, options)
    try:
        keys, status, reason = engine.authenticate_dnskey_set(
            dnskey_rrset, ds_set, dnskey_rrsigs)
    except _PolicyLimit as limit:
        keys, status, reason = [], Status.POLICY_SERVFAIL, limit.reason
    return keys, ValidationOutcome(status, reason, engine.counters)


def resolve_and_validate(graph: ZoneGraph, qname: DnsName | None = None,
                         qtype: int | None = None,
                         policy: MitigationPolicy | None = None,
                         options: ValidatorOptions | None = None) -> ValidationOutcome:
    """Walk the chain of trust top down and validate the answer.

    Counters are aggregated across the whole resolution and also reported
    per stage: ``auth:<apex>`` for each zone's DNSKEY authentication,
    ``ds:<apex>`` for each delegation's DS rrset, and ``answer`` for the
    final answer validation.  A resolver profile's re-query behavior
    repeats the stage that failed, multiplying its cost.
    """
    qname = qname if qname is not None else graph.query_name
    qtype = qtype if qtype is not None else graph.query_type
    options = options or ValidatorOptions()
    engine = ValidationEngine(policy, options)
    stages: dict[str, CostCounters] = {}

    def run_stage(label: str, fn):
        before = engine.counters.snapshot()
        try:
            return fn()
        finally:
            delta = engine.counters.delta(before)
            stages[label] = stages[label].add(delta) if label in stages else delta

    def requery(label: str, fn) -> None:
        # A failed stage is repeated in full on every re-query.
        for _ in range(options.requery_count):
            engine.counters.requery_count += 1
            run_stage(label, fn)

    def outcome(status: Status, reason: Reason) -> ValidationOutcome:
        return ValidationOutcome(status, reason, engine.counters, stages)

    path = graph.zone_path(qname)
    if not path:
        return outcome(Status.CHAIN_BROKEN, Reason.NAME_ERROR)

    try:
        ds_set: list[DsRecord] | None = None  # anchor authenticates the root
        authenticated: list[DnskeyRecord] = []
        for depth, zone in enumerate(path):
            label = f"auth:{zone.apex.to_text()}"
            if ds_set is None:
                auth = lambda z=zone: engine.authenticate_with_anchor(
                    z, graph.trust_anchor)
            else:
                auth = lambda z=zone, d=ds_set: engine.authenticate_dnskey_set(
                    z.dnskey_rrset, d, z.dnskey_rrsigs())
            keys, status, reason = run_stage(label, auth)
            if status is not Status.SECURE:
                requery(label, auth)
                return outcome(status, reason)
            authenticated = keys
            if depth + 1 < len(path):
                child = path[depth + 1]
                ds_set = zone.ds_for_children.get(child.apex)
                if not ds_set:
                    return outcome(Status.CHAIN_BROKEN, Reason.NAME_ERROR)
                ds_rrs = [d.to_rr(zone.ttl) for d in ds_set]
                ds_sigs = zone.rrsigs.get((child.apex, TYPE_DS), [])
                status, reason = run_stage(
                    f"ds:{child.apex.to_text()}",
                    lambda r=ds_rrs, s=ds_sigs, a=authenticated:
                        engine.validate_rrset(r, s, a))
                if status is not Status.SECURE:
                    return outcome(Status.CHAIN_BROKEN, Reason.DS_BOGUS)

        answer_sets = _answer_rrsets(path[-1], qname, qtype)
        if not answer_sets:
            return outcome(Status.CHAIN_BROKEN, Reason.NAME_ERROR)

        def validate_answer():
            for rrs, sigs in answer_sets:
                status, reason = engine.validate_rrset(rrs, sigs, authenticated)
                if status is not Status.SECURE:
                    return status, reason
            return Status.SECURE, Reason.VALIDATED

        status, reason = run_stage("answer", validate_answer)
        if status is not Status.SECURE:
            requery("answer", validate_answer)
        return outcome(status, reason)
    except _PolicyLimit as limit:
        return outcome(Status.POLICY_SERVFAIL, limit.reason)


def _answer_rrsets(zone: Zone, qname: DnsName, qtype: int):
    """The (rrset, rrsigs) pairs a query selects; ANY selects all of them."""
    out = []
    for (name, rtype), rrs in sorted(zone.rrsets.items(),
                                     key=lambda kv: (kv[0][0], kv[0][1])):
        if name.canonical() != qname.canonical():
            continue
        if qtype != TYPE_ANY and rtype != qtype:
            continue
        out.append((rrs, zone.rrsigs.get((name, rtype), [])))
    return out
