"""Deterministic resolver-under-attack simulation.

A scenario pairs a resolver profile with an attack vector and a request
schedule.  The attack zone is built and validated once (null-crypto) to
obtain its exact work counters; the cost model turns those into the
per-request stall time; the event kernel then plays benign and attack
arrivals against the modeled worker threads, OS buffers, and scheduling
policy.  Everything is a pure function of (config, seed): simulated time
is decoupled from wall-clock, so a sixteen-hour stall replays in
milliseconds.

Benign traffic models a client requesting unique entries at a fixed rate
with a fixed timeout; a request answered after its timeout counts as
lost, as do buffer drops and stale discards.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._simkernel import (
    DISCARDED,
    DROPPED,
    active_backend,
    hashed_assignment,
    hashed_uniform,
    run_event_loop,
)
from .costmodel import (
    ResolverProfile,
    SCHEDULING_LOAD_AWARE,
    SCHEDULING_ROUND_ROBIN,
    estimate_stall,
    get_profile,
    validator_options_for,
)
from .validator import MitigationPolicy, resolve_and_validate
from .zonegen import AttackVectorSpec, build_zone_graph

KIND_ATTACK = 0
KIND_BENIGN = 1


class ScenarioError(ValueError):
    """The scenario description is structurally or semantically invalid."""


@dataclass
class ScenarioConfig:
    profile: ResolverProfile
    vector: AttackVectorSpec | None = None
    attack_schedule: list[dict] = field(default_factory=list)
    policy: MitigationPolicy | None = None
    benign_rate: float = 10.0
    benign_timeout: float = 5.0
    benign_cache_fraction: float = 0.0
    duration: float = 60.0
    seed: int = 0
    attack_io_gap_s: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.duration <= 0:
            raise ScenarioError("duration must be > 0")
        if self.benign_rate < 0:
            raise ScenarioError("benign_rate must be >= 0")
        if not 0.0 <= self.benign_cache_fraction <= 1.0:
            raise ScenarioError("benign_cache_fraction must be in [0, 1]")


@dataclass
class SimulationReport:
    name: str
    seed: int
    duration: float
    backend: str
    benign_sent: int
    benign_answered: int
    benign_lost: int
    benign_dropped: int
    benign_discarded: int
    benign_late: int
    attack_requests: int
    attack_served: int
    attack_service_s: float
    max_attack_stall_s: float
    full_dos_intervals: list[tuple[float, float]]
    per_thread_attack_intervals: list[list[tuple[float, float]]]
    attack_outcome: dict | None
    # raw per-request data, for analysis and tests; omitted from JSON
    benign_times: np.ndarray = field(repr=False, default=None)
    benign_finish: np.ndarray = field(repr=False, default=None)

    @property
    def loss_fraction(self) -> float:
        return self.benign_lost / self.benign_sent if self.benign_sent else 0.0

    def loss_between(self, t0: float, t1: float) -> float:
        """Loss fraction among benign requests arriving in [t0, t1)."""
        sel = (self.benign_times >= t0) & (self.benign_times < t1)
        if not sel.any():
            return 0.0
        finish = self.benign_finish[sel]
        arrivals = self.benign_times[sel]
        answered = (finish >= 0) & (finish - arrivals <= self._timeout)
        return 1.0 - answered.sum() / sel.sum()

    _timeout: float = field(default=5.0, repr=False)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "duration": self.duration,
            "backend": self.backend,
            "benign_sent": self.benign_sent,
            "benign_answered": self.benign_answered,
            "benign_lost": self.benign_lost,
            "benign_dropped": self.benign_dropped,
            "benign_discarded": self.benign_discarded,
            "benign_late": self.benign_late,
            "loss_fraction": self.loss_fraction,
            "attack_requests": self.attack_requests,
            "attack_served": self.attack_served,
            "attack_service_s": self.attack_service_s,
            "max_attack_stall_s": self.max_attack_stall_s,
            "full_dos_intervals": [list(iv) for iv in self.full_dos_intervals],
            "per_thread_attack_intervals": [
                [list(iv) for iv in ivs] for ivs in self.per_thread_attack_intervals
            ],
            "attack_outcome": self.attack_outcome,
        }

    TIMESERIES_VERSION = "dnsseclab-timeseries/1"
    TIMESERIES_COLUMNS = ("time", "benign_sent", "benign_answered", "benign_lost",
                          "attack_busy_threads")

    def timeseries_rows(self, step: float = 1.0) -> list[tuple]:
        """Cumulative per-bucket counts plus attack-busy thread count."""
        edges = np.arange(0.0, self.duration + step, step)
        arrivals = self.benign_times
        finish = self.benign_finish
        answered_mask = (finish >= 0) & (finish - arrivals <= self._timeout)
        sent_cum = np.searchsorted(arrivals, edges, side="right")
        answered_at = np.sort(finish[answered_mask])
        answered_cum = np.searchsorted(answered_at, edges, side="right")
        # A request is counted lost once its fate is sealed: drop/discard at
        # its arrival, a late answer at arrival + timeout.
        lost_at = np.sort(np.concatenate([
            arrivals[finish < 0],
            arrivals[(finish >= 0) & ~answered_mask] + self._timeout,
        ]))
        lost_cum = np.searchsorted(lost_at, edges, side="right")
        rows = []
        for i, t in enumerate(edges):
            busy = sum(1 for ivs in self.per_thread_attack_intervals
                       for (s, e) in ivs if s <= t < e)
            rows.append((float(t), int(sent_cum[i]), int(answered_cum[i]),
                         int(lost_cum[i]), busy))
        return rows

    def timeseries_csv(self, step: float = 1.0) -> str:
        lines = [f"# {self.TIMESERIES_VERSION}", ",".join(self.TIMESERIES_COLUMNS)]
        for row in self.timeseries_rows(step):
            lines.append(",".join(f"{v:.3f}" if isinstance(v, float) else str(v)
                                  for v in row))
        return "\n".join(lines) + "\n"


def expand_schedule(schedule: list[dict], duration: float) -> np.ndarray:
    """Flatten batch and rate entries into sorted arrival times."""
    times: list[np.ndarray] = []
    for entry in schedule:
        if "time" in entry:
            times.append(np.full(int(entry.get("count", 1)), float(entry["time"])))
        elif "rate" in entry:
            rate = float(entry["rate"])
            start = float(entry.get("start", 0.0))
            end = min(float(entry.get("end", duration)), duration)
            if rate > 0 and end > start:
                n = int(np.floor((end - start) * rate))
                times.append(start + np.arange(n) / rate)
        else:
            raise ScenarioError(f"schedule entry needs 'time' or 'rate': {entry!r}")
    if not times:
        return np.empty(0, dtype=np.float64)
    out = np.concatenate(times)
    out = out[out <= duration]
    return np.sort(out, kind="stable")


_service_cache: dict[str, tuple[float, dict]] = {}


def attack_service_time(config: ScenarioConfig) -> tuple[float, dict | None]:
    """Stall seconds one attack request costs under the profile and policy.

    Zone construction and validation are deterministic in the vector,
    profile, and policy, so results are memoized on those inputs; the
    scenario seed only drives scheduling.
    """
    if config.vector is None:
        return 0.0, None
    cache_key = json.dumps(
        [config.vector.to_dict(), config.profile.as_dict(),
         config.policy.as_dict() if config.policy else None],
        sort_keys=True)
    if cache_key not in _service_cache:
        graph = build_zone_graph(config.vector)
        outcome = resolve_and_validate(
            graph, policy=config.policy,
            options=validator_options_for(config.profile))
        stall = estimate_stall(outcome.counters, config.profile,
                               config.vector.algorithm)
        _service_cache[cache_key] = (stall, outcome.as_dict())
    stall, outcome_dict = _service_cache[cache_key]
    return stall + config.attack_io_gap_s, outcome_dict


def run_scenario(config: ScenarioConfig, backend: str | None = None) -> SimulationReport:
    """Event-driven simulation of the scenario; deterministic given seed."""
    profile = config.profile
    n_threads = profile.thread_count
    attack_times = expand_schedule(config.attack_schedule, config.duration)
    if config.attack_io_gap_s > 0:
        # The response download is I/O; the thread stays free during it.
        attack_times = attack_times + config.attack_io_gap_s
    attack_service, attack_outcome = (attack_service_time(config)
                                      if len(attack_times) else (0.0, None))

    n_benign = int(np.floor(config.duration * config.benign_rate))
    benign_times = np.arange(n_benign, dtype=np.float64) / config.benign_rate \
        if n_benign else np.empty(0, dtype=np.float64)
    benign_service = profile.benign_cost_us / 1e6

    # Cache hits go to the dedicated cache thread when the profile has one;
    # otherwise they are ordinary requests with the same service time.
    cache_mask = np.zeros(n_benign, dtype=bool)
    if config.benign_cache_fraction > 0 and profile.cached_answer_thread:
        u = hashed_uniform(n_benign, config.seed, stream=2)
        cache_mask = u < config.benign_cache_fraction
    main_benign = benign_times[~cache_mask]
    cache_benign = benign_times[cache_mask]

    n_att = len(attack_times)
    n_main = len(main_benign)
    times = np.concatenate([attack_times, main_benign])
    kinds = np.concatenate([np.full(n_att, KIND_ATTACK, dtype=np.int8),
                            np.full(n_main, KIND_BENIGN, dtype=np.int8)])
    services = np.concatenate([np.full(n_att, attack_service - config.attack_io_gap_s),
                               np.full(n_main, benign_service)])

    if profile.scheduling == SCHEDULING_LOAD_AWARE:
        assign = np.zeros(len(times), dtype=np.int32)
        load_aware = True
    elif profile.scheduling == SCHEDULING_ROUND_ROBIN:
        assign = np.concatenate([
            np.arange(n_att, dtype=np.int32) % n_threads,
            np.arange(n_main, dtype=np.int32) % n_threads,
        ])
        load_aware = False
    else:
        assign = np.concatenate([
            hashed_assignment(n_att, n_threads, config.seed, stream=1),
            hashed_assignment(n_main, n_threads, config.seed, stream=0),
        ])
        load_aware = False

    order = np.lexsort((kinds, times))  # attacks first on arrival-time ties
    capacity = -1 if profile.os_buffer_capacity is None else profile.os_buffer_capacity
    discard = -1.0 if profile.discard_older_than_s is None else profile.discard_older_than_s
    start, finish, thread = run_event_loop(
        times[order], services[order], assign[order], n_threads,
        capacity, discard, load_aware, backend=backend)

    # Un-permute back to stream order.
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    start, finish, thread = start[inv], finish[inv], thread[inv]

    att_start, att_finish, att_thread = start[:n_att], finish[:n_att], thread[:n_att]
    ben_times = np.concatenate([main_benign, cache_benign])
    ben_finish = np.concatenate([finish[n_att:], np.empty(len(cache_benign))])

    if len(cache_benign):
        c_start, c_finish, _ = run_event_loop(
            cache_benign, np.full(len(cache_benign), benign_service),
            np.zeros(len(cache_benign), dtype=np.int32), 1, -1, -1.0, False,
            backend=backend)
        ben_finish[len(main_benign):] = c_finish

    reorder = np.argsort(ben_times, kind="stable")
    ben_times = ben_times[reorder]
    ben_finish = ben_finish[reorder]

    answered = (ben_finish >= 0) & (ben_finish - ben_times <= config.benign_timeout)
    dropped = int((ben_finish == DROPPED).sum())
    discarded = int((ben_finish == DISCARDED).sum())
    late = int(((ben_finish >= 0) & ~answered).sum())

    served = att_start >= 0
    per_thread: list[list[tuple[float, float]]] = [[] for _ in range(n_threads)]
    for s, e, t in zip(att_start[served], att_finish[served], att_thread[served]):
        per_thread[int(t)].append((float(s), float(e)))
    for ivs in per_thread:
        ivs.sort()

    report = SimulationReport(
        name=config.name,
        seed=config.seed,
        duration=config.duration,
        backend=backend or active_backend(),
        benign_sent=int(len(ben_times)),
        benign_answered=int(answered.sum()),
        benign_lost=int(len(ben_times) - answered.sum()),
        benign_dropped=dropped,
        benign_discarded=discarded,
        benign_late=late,
        attack_requests=n_att,
        attack_served=int(served.sum()),
        attack_service_s=float(attack_service),
        max_attack_stall_s=float((att_finish[served] - att_start[served]).max())
        if served.any() else 0.0,
        full_dos_intervals=_full_dos_intervals(per_thread, n_threads),
        per_thread_attack_intervals=per_thread,
        attack_outcome=attack_outcome,
        benign_times=ben_times,
        benign_finish=ben_finish,
        _timeout=config.benign_timeout,
    )
    assert report.benign_sent == report.benign_answered + report.benign_lost
    return report


def _full_dos_intervals(per_thread: list[list[tuple[float, float]]],
                        n_threads: int) -> list[tuple[float, float]]:
    """Windows during which every resolution thread is attack-busy."""
    events = []
    for ivs in per_thread:
        for s, e in _merge_intervals(ivs):
            events.append((s, 1))
            events.append((e, -1))
    if not events:
        return []
    events.sort()
    out = []
    busy = 0
    window_start = None
    for t, delta in events:
        busy += delta
        if busy == n_threads and window_start is None:
            window_start = t
        elif busy < n_threads and window_start is not None:
            if t > window_start:
                out.append((window_start, t))
            window_start = None
    return out


def _merge_intervals(ivs: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for s, e in sorted(ivs):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


# --- schedule helpers -----------------------------------------------------

def expected_requests_to_fill(n_threads: int) -> Fraction:
    """Coupon-collector expectation n * H(n) for random thread scheduling."""
    if n_threads < 1:
        raise ValueError("n_threads must be >= 1")
    return n_threads * sum((Fraction(1, i) for i in range(1, n_threads + 1)),
                           Fraction(0))


def continuous_attack_schedule(n_threads: int, stall_estimate_s: float,
                               duration_s: float,
                               interval_s: float | None = None) -> list[dict]:
    """Sustained attack schedule: saturate every thread, then keep refilling.

    An initial batch of three requests per thread, a one-second pause so
    the batch is read, then repeated batches of the same size plus one
    buffer-filler request, spaced half the single-request stall apart
    (snapped to a 5-second grid, which makes a 176 s stall refresh
    every 90 s).
    """
    if stall_estimate_s <= 0:
        raise ValueError("stall_estimate_s must be > 0")
    batch = 3 * n_threads
    if interval_s is None:
        half = stall_estimate_s / 2.0
        interval_s = max(5.0 * round(half / 5.0), 1.0) if half >= 5.0 else half
    schedule = [{"time": 0.0, "count": batch}]
    t = 1.0
    while t < duration_s:
        schedule.append({"time": t, "count": batch + 1})
        t += interval_s
    return schedule


def mitigation_bypass_scenarios() -> list[tuple[ScenarioConfig, dict]]:
    """The three canonical patch-break-fix regression scenarios.

    (a) a failure cap alone is defeated by spreading the colliding-key
    validations across many queries; (b) a zero-failure cap never fires on
    the digest-flood vector, which performs no signature validations at
    all; (c) the combined policy (failures, collisions, and total
    validations capped) withstands the valid-signature flood that defeats
    any failures-only policy.
    """
    scenarios = []
    scenarios.append((
        ScenarioConfig(
            name="bypass-failure32-spread",
            profile=get_profile("Akamai"),
            policy=MitigationPolicy(max_validation_failures=32),
            vector=AttackVectorSpec(vector="keysigtrap", key_count=32, sig_count=1),
            attack_schedule=[{"rate": 150.0, "start": 0.0, "end": 60.0}],
            duration=60.0,
            seed=7,
        ),
        {"loss_at_least": 0.5},
    ))
    scenarios.append((
        ScenarioConfig(
            name="bypass-failure0-hashtrap",
            profile=get_profile("Bind9"),
            policy=MitigationPolicy(max_validation_failures=0),
            vector=AttackVectorSpec(vector="hashtrap", ds_count=1357,
                                    key_count=1357, algorithm=15),
            attack_schedule=[{"rate": 10.0, "start": 0.0, "end": 60.0}],
            duration=60.0,
            seed=7,
        ),
        {"loss_at_least": 0.6},
    ))
    scenarios.append((
        ScenarioConfig(
            name="combined-policy-anytype",
            profile=get_profile("Akamai"),
            policy=MitigationPolicy.combined(failures=16, collisions=4, total=8),
            vector=AttackVectorSpec(vector="anytype", rrset_count=313),
            attack_schedule=[{"rate": 10.0, "start": 0.0, "end": 60.0}],
            duration=60.0,
            seed=7,
        ),
        {"loss_at_most": 0.01},
    ))
    return scenarios


# --- scenario JSON ---------------------------------------------------------

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "profile": {"oneOf": [{"type": "string"}, {"type": "object"}]},
        "policy": {"oneOf": [{"type": "object"}, {"type": "null"}]},
        "vector": {"oneOf": [{"type": "object"}, {"type": "null"}]},
        "attack_schedule": {
            "type": "array",
            "items": {
                "type": "object",
                "oneOf": [
                    {"required": ["time"]},
                    {"required": ["rate"]},
                ],
                "properties": {
                    "time": {"type": "number", "minimum": 0},
                    "count": {"type": "integer", "minimum": 1},
                    "rate": {"type": "number", "exclusiveMinimum": 0},
                    "start": {"type": "number", "minimum": 0},
                    "end": {"type": "number", "minimum": 0},
                },
            },
        },
        "benign_rate": {"type": "number", "minimum": 0},
        "benign_timeout": {"type": "number", "exclusiveMinimum": 0},
        "benign_cache_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "attack_io_gap_s": {"type": "number", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
    },
    "required": ["profile", "duration"],
    "additionalProperties": False,
}


def scenario_from_dict(data: dict) -> ScenarioConfig:
    import jsonschema

    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ScenarioError(f"scenario field {path}: {err.message}") from None
    profile_data = data["profile"]
    profile = (get_profile(profile_data) if isinstance(profile_data, str)
               else ResolverProfile.from_dict(profile_data))
    if "threads" in data:
        profile = profile.with_threads(data["threads"])
    vector = (AttackVectorSpec.from_dict(data["vector"])
              if data.get("vector") else None)
    policy = MitigationPolicy.from_dict(data.get("policy")) \
        if data.get("policy") else None
    return ScenarioConfig(
        profile=profile,
        vector=vector,
        attack_schedule=data.get("attack_schedule", []),
        policy=policy,
        benign_rate=data.get("benign_rate", 10.0),
        benign_timeout=data.get("benign_timeout", 5.0),
        benign_cache_fraction=data.get("benign_cache_fraction", 0.0),
        duration=data["duration"],
        seed=data.get("seed", 0),
        attack_io_gap_s=data.get("attack_io_gap_s", 0.0),
        name=data.get("name", ""),
    )


def scenario_from_json(text: str) -> ScenarioConfig:
    return scenario_from_dict(json.loads(text))
