"""Resolver profiles, stall estimation, amplification, calibration stability."""

import pytest

from dnsseclab.ciphers import UnsupportedAlgorithm
from dnsseclab.costmodel import (
    BIND9_RESCAN_UNIT_COST_US,
    DIGEST_COST_US,
    KNOT_PER_ATTEMPT_OVERHEAD_US,
    ResolverProfile,
    amplification_ratio,
    builtin_profiles,
    calibrate_bind9_rescan_cost,
    calibrate_knot_overhead,
    estimate_stall,
    get_profile,
    profile_from_json,
    profile_to_json,
    validator_options_for,
)
from dnsseclab.validator import CostCounters, resolve_and_validate
from dnsseclab.zonegen import AttackVectorSpec, build_zone_graph


class TestBuiltinProfiles:
    def test_all_six_present(self):
        assert set(builtin_profiles()) == {
            "Unbound", "Bind9", "Knot", "Akamai", "PowerDNS", "Stubby"}

    @pytest.mark.parametrize("name,alg14_cost", [
        ("Unbound", 996.0), ("Bind9", 2448.0), ("Knot", 496.0),
        ("Akamai", 976.0), ("PowerDNS", 924.0), ("Stubby", 976.0),
    ])
    def test_alg14_verify_costs(self, name, alg14_cost):
        assert get_profile(name).per_algorithm_verify_cost[14] == alg14_cost

    def test_full_cost_rows(self):
        assert get_profile("Unbound").per_algorithm_verify_cost == {
            13: 172.0, 14: 996.0, 15: 880.0, 16: 364.0}
        assert get_profile("Bind9").per_algorithm_verify_cost == {
            13: 888.0, 14: 2448.0, 15: 460.0, 16: 628.0}
        assert get_profile("Knot").per_algorithm_verify_cost == {
            13: 232.0, 14: 496.0, 15: 164.0, 16: 456.0}
        assert get_profile("PowerDNS").per_algorithm_verify_cost == {
            13: 153.0, 14: 924.0, 15: 840.0, 16: 628.0}

    def test_behavioral_fields(self):
        profiles = builtin_profiles()
        assert profiles["Unbound"].requery_count == 5
        assert profiles["Bind9"].key_selection == "rescan"
        assert profiles["Bind9"].rescan_unit_cost_us == BIND9_RESCAN_UNIT_COST_US
        assert profiles["Knot"].max_keys_per_response == 126
        assert profiles["PowerDNS"].discard_older_than_s == 2.0
        assert profiles["Akamai"].scheduling == "load-aware"
        assert profiles["Akamai"].cached_answer_thread is True
        assert profiles["Akamai"].os_buffer_capacity is None
        assert profiles["Stubby"].scheduling == "random"
        for p in profiles.values():
            assert p.digest_cost_us == DIGEST_COST_US

    def test_unknown_profile(self):
        with pytest.raises(KeyError):
            get_profile("CoreDNS")

    def test_json_round_trip(self):
        p = get_profile("Knot")
        assert profile_from_json(profile_to_json(p)) == p


class TestEstimateStall:
    def test_zero_counters(self):
        assert estimate_stall(CostCounters(), get_profile("Unbound"), 14) == 0.0

    def test_linear_in_attempts(self):
        p = get_profile("Akamai")
        one = estimate_stall(CostCounters(signature_attempts=1000), p, 14)
        two = estimate_stall(CostCounters(signature_attempts=2000), p, 14)
        assert two == pytest.approx(2 * one)

    def test_linear_in_digests(self):
        p = get_profile("Bind9")
        one = estimate_stall(CostCounters(digest_computations=10_000), p, 15)
        two = estimate_stall(CostCounters(digest_computations=20_000), p, 15)
        assert two == pytest.approx(2 * one)

    def test_linear_in_keys_scanned(self):
        p = get_profile("Bind9")
        one = estimate_stall(CostCounters(keys_scanned=1_000_000), p, 14)
        two = estimate_stall(CostCounters(keys_scanned=2_000_000), p, 14)
        assert two == pytest.approx(2 * one)

    def test_missing_algorithm(self):
        with pytest.raises(UnsupportedAlgorithm):
            estimate_stall(CostCounters(signature_attempts=1), get_profile("Unbound"),
                           "RSA-2048")

    def test_flagship_stalls_in_published_bands(self):
        graph = build_zone_graph(
            AttackVectorSpec(vector="keysigtrap", key_count=582, sig_count=340))
        for name, low, high in (("Unbound", 760.5, 1267.5),
                                ("Knot", 25.5, 76.5),
                                ("Bind9", 52768.8, 64495.2)):
            profile = get_profile(name)
            outcome = resolve_and_validate(graph,
                                           options=validator_options_for(profile))
            stall = estimate_stall(outcome.counters, profile, 14)
            assert low <= stall <= high, (name, stall)


class TestAmplification:
    def _answer_counters(self, spec, profile):
        graph = build_zone_graph(spec)
        outcome = resolve_and_validate(graph, options=validator_options_for(profile))
        return outcome.answer_counters

    def test_benign_over_benign_is_one(self):
        p = get_profile("Unbound")
        benign = self._answer_counters(AttackVectorSpec(vector="benign"), p)
        assert amplification_ratio(benign, benign, p, 14) == 1.0

    def test_sigjam_in_the_hundreds(self):
        p = get_profile("Unbound")
        benign = self._answer_counters(AttackVectorSpec(vector="benign"), p)
        sigjam = self._answer_counters(
            AttackVectorSpec(vector="sigjam", sig_count=340), p)
        ratio = amplification_ratio(sigjam, benign, p, 14)
        # published displacement is 773x; the counter model lands within 3x
        assert 773 / 3 <= ratio <= 773 * 3

    def test_zero_benign_cost_guarded(self):
        p = get_profile("Unbound")
        with pytest.raises(ValueError):
            amplification_ratio(CostCounters(signature_attempts=5),
                                CostCounters(), p, 14)


class TestCalibration:
    def test_bind9_constant_is_stable(self):
        assert calibrate_bind9_rescan_cost() == pytest.approx(
            BIND9_RESCAN_UNIT_COST_US, rel=1e-9)

    def test_knot_constant_is_stable(self):
        assert calibrate_knot_overhead() == pytest.approx(
            KNOT_PER_ATTEMPT_OVERHEAD_US, rel=1e-9)

    def test_digest_cost_derivation(self):
        # one flooded request displaces 1254 benign requests of 500 us each
        assert DIGEST_COST_US == pytest.approx(1254 * 500.0 / 1_841_449)


def test_profile_validation():
    with pytest.raises(ValueError):
        ResolverProfile("x", {14: -1.0})
    with pytest.raises(ValueError):
        ResolverProfile("x", {14: 1.0}, thread_count=0)
