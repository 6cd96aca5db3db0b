"""Zone construction, fit checking, linting, and presentation round-trips."""

import json

import pytest

from dnsseclab.keyforge import keytag_of
from dnsseclab.validator import Status, ValidatorOptions, resolve_and_validate
from dnsseclab.wire import (
    DnsName,
    MAX_STREAM_PAYLOAD,
    TYPE_A,
    compressed_message_size,
)
from dnsseclab.zonegen import (
    AttackVectorSpec,
    FitError,
    ZoneBuildError,
    build_zone_graph,
    emit_zonefile,
    fit_report,
    graph_from_dict,
    graph_to_dict,
    lint_graph,
    load_zonefile,
    response_messages,
    unallocated_type_codes,
    zones_equal,
)

NULL = ValidatorOptions(null_crypto=True)


def attack_zone(graph):
    return graph.zones[DnsName.from_text("attack.er.")]


class TestVectorSpec:
    def test_unknown_vector(self):
        with pytest.raises(ZoneBuildError):
            AttackVectorSpec(vector="amplify")

    def test_zero_count(self):
        with pytest.raises(ZoneBuildError):
            AttackVectorSpec(vector="sigjam", sig_count=0)

    def test_dict_round_trip(self):
        spec = AttackVectorSpec(vector="keysigtrap", key_count=5, sig_count=6, seed=3)
        assert AttackVectorSpec.from_dict(spec.to_dict()) == spec

    def test_unknown_field(self):
        with pytest.raises(ZoneBuildError):
            AttackVectorSpec.from_dict({"vector": "benign", "keys": 5})

    def test_default_apexes(self):
        assert AttackVectorSpec(vector="benign").apex_name().to_text() == "benign.er."
        assert AttackVectorSpec(vector="sigjam").apex_name().to_text() == "attack.er."


class TestBenign:
    def test_validates_secure(self):
        graph = build_zone_graph(AttackVectorSpec(vector="benign"))
        outcome = resolve_and_validate(graph, options=NULL)
        assert outcome.status is Status.SECURE
        # regression constants: one digest per delegation step, one
        # verification per signed rrset on the path
        assert outcome.counters.signature_attempts == 4
        assert outcome.counters.digest_computations == 2

    def test_tampered_rdata_goes_bogus(self):
        from dnsseclab.records import a_record

        graph = build_zone_graph(AttackVectorSpec(vector="benign"))
        zone = graph.zones[DnsName.from_text("benign.er.")]
        qname = graph.query_name
        zone.rrsets[(qname, TYPE_A)] = [a_record(qname, "10.9.9.9", zone.ttl)]
        # real-crypto mode: the signature must fail over the altered bytes
        outcome = resolve_and_validate(graph)
        assert outcome.status is Status.BOGUS

    def test_missing_ds_breaks_chain(self):
        graph = build_zone_graph(AttackVectorSpec(vector="benign"))
        parent = graph.zones[DnsName.from_text("er.")]
        parent.ds_for_children.clear()
        outcome = resolve_and_validate(graph, options=NULL)
        assert outcome.status is Status.CHAIN_BROKEN


class TestStructure:
    @pytest.mark.parametrize("spec_kwargs", [
        {"vector": "benign"},
        {"vector": "sigjam", "sig_count": 7},
        {"vector": "lockcram", "key_count": 6},
        {"vector": "keysigtrap", "key_count": 4, "sig_count": 5},
        {"vector": "hashtrap", "ds_count": 4, "key_count": 5, "algorithm": 15},
        {"vector": "anytype", "rrset_count": 6},
    ])
    def test_lint_clean_and_deterministic(self, spec_kwargs):
        graph = build_zone_graph(AttackVectorSpec(**spec_kwargs))
        assert lint_graph(graph) == []
        again = build_zone_graph(AttackVectorSpec(**spec_kwargs))
        assert graph_to_dict(graph) == graph_to_dict(again)

    def test_ksk_first_in_attack_rrsets(self):
        graph = build_zone_graph(AttackVectorSpec(vector="lockcram", key_count=4))
        keys = attack_zone(graph).dnskey_rrset
        assert keys[0].flags == 257
        assert all(k.flags == 256 for k in keys[1:])
        assert len({keytag_of(k) for k in keys[1:]}) == 1

    def test_keysigtrap_zonefile_line_counts(self):
        graph = build_zone_graph(
            AttackVectorSpec(vector="keysigtrap", key_count=3, sig_count=3))
        text = emit_zonefile(attack_zone(graph))
        lines = text.splitlines()
        dnskey_lines = [l for l in lines if l.split()[3:4] == ["DNSKEY"]]
        a_sig_lines = [l for l in lines
                       if l.split()[3:5] == ["RRSIG", "A"]]
        assert len(dnskey_lines) == 4  # KSK + 3 colliding
        assert len(a_sig_lines) == 3

    def test_hashtrap_multiple_subzones(self):
        graph = build_zone_graph(AttackVectorSpec(
            vector="hashtrap", ds_count=3, key_count=3, sub_count=2, algorithm=15))
        assert len(graph.zones) == 3
        root = graph.zones[DnsName.from_text("attack.er.")]
        assert len(root.ds_for_children) == 2

    def test_anytype_distinct_unallocated_types(self):
        graph = build_zone_graph(AttackVectorSpec(vector="anytype", rrset_count=9))
        zone = attack_zone(graph)
        codes = {rtype for (_, rtype) in zone.rrsets}
        assert len(codes) == 9
        assert all(c >= 32770 for c in codes)


class TestFitChecks:
    def test_flagship_fits(self):
        graph = build_zone_graph(
            AttackVectorSpec(vector="keysigtrap", key_count=582, sig_count=340))
        for entry in fit_report(graph):
            assert entry["compressed_size"] <= entry["limit"]

    def test_sigjam_beyond_packing_bound(self):
        with pytest.raises(FitError) as exc:
            build_zone_graph(AttackVectorSpec(vector="sigjam", sig_count=520))
        assert exc.value.theoretical_max == 519
        assert "519" in str(exc.value)

    def test_lockcram_beyond_packing_bound(self):
        with pytest.raises(FitError) as exc:
            build_zone_graph(AttackVectorSpec(vector="lockcram", key_count=590))
        assert exc.value.theoretical_max == 589
        assert "589" in str(exc.value)

    def test_lockcram_beyond_real_name_fit(self):
        # 583 colliding keys plus the KSK pass the packing bound but not
        # the message built with actual names
        with pytest.raises(FitError) as exc:
            build_zone_graph(AttackVectorSpec(vector="lockcram", key_count=583))
        assert exc.value.max_fitting == 583  # records total, KSK included
        assert exc.value.theoretical_max == 589

    def test_hashtrap_flagship_fits(self):
        graph = build_zone_graph(AttackVectorSpec(
            vector="hashtrap", ds_count=1357, key_count=1357, algorithm=15))
        for msg in response_messages(graph).values():
            assert compressed_message_size(msg) <= MAX_STREAM_PAYLOAD


class TestUnallocatedTypes:
    def test_private_range_first(self):
        codes = unallocated_type_codes(10)
        assert codes == list(range(65280, 65290))

    def test_wraps_below_private_range(self):
        codes = unallocated_type_codes(300)
        assert len(codes) == len(set(codes)) == 300
        assert 32768 not in codes and 32769 not in codes
        assert codes[255] == 65279


class TestPresentation:
    @pytest.mark.parametrize("spec_kwargs", [
        {"vector": "benign"},
        {"vector": "keysigtrap", "key_count": 3, "sig_count": 3},
        {"vector": "hashtrap", "ds_count": 3, "key_count": 4, "algorithm": 15},
        {"vector": "anytype", "rrset_count": 4},
    ])
    def test_zonefile_round_trip(self, spec_kwargs):
        graph = build_zone_graph(AttackVectorSpec(**spec_kwargs))
        for zone in graph.zones.values():
            text = emit_zonefile(zone)
            back = load_zonefile(text)
            assert zones_equal(zone, back)
            assert emit_zonefile(back) == text

    def test_zonefile_of_bare_keys(self):
        graph = build_zone_graph(AttackVectorSpec(vector="benign"))
        zone = graph.zones[DnsName.from_text("benign.er.")]
        zone.rrsets.clear()
        text = emit_zonefile(zone)
        types = {line.split()[3] for line in text.splitlines() if not line.startswith(";")}
        assert types == {"DNSKEY", "RRSIG"}

    def test_graph_json_round_trip_preserves_validation(self):
        graph = build_zone_graph(
            AttackVectorSpec(vector="keysigtrap", key_count=4, sig_count=3))
        data = json.loads(json.dumps(graph_to_dict(graph)))
        back = graph_from_dict(data)
        a = resolve_and_validate(graph, options=NULL)
        b = resolve_and_validate(back, options=NULL)
        assert a.status == b.status
        assert a.counters == b.counters
        # reloaded graphs also carry enough for real cryptography
        c = resolve_and_validate(back)
        assert c.counters == a.counters

    def test_graph_format_guard(self):
        with pytest.raises(ZoneBuildError):
            graph_from_dict({"format": "something-else"})
