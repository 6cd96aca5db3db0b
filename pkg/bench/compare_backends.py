#!/usr/bin/env python3
"""Benchmark the simulation event kernel: numba njit vs pure numpy path.

Runs the same long scenario through both backends, times them, and checks
the reports are identical.  The first jitted call is untimed (compilation).
"""

import time

import numpy as np

from dnsseclab._simkernel import run_event_loop
from dnsseclab.costmodel import get_profile
from dnsseclab.simharness import ScenarioConfig, run_scenario
from dnsseclab.zonegen import AttackVectorSpec

N_REPEAT = 5


def bench_kernel():
    n = 500_000
    times = np.arange(n) / 10.0
    services = np.full(n, 0.0005)
    services[::50_000] = 900.0
    assign = (np.arange(n) % 4).astype(np.int32)

    # warm up the jit; first call compiles
    run_event_loop(times[:10], services[:10], assign[:10], 4, 2080, -1.0, False,
                   backend="numba")

    results = {}
    for backend in ("numba", "numpy"):
        elapsed = np.zeros(N_REPEAT)
        for i in range(N_REPEAT):
            t0 = time.perf_counter()
            out = run_event_loop(times, services, assign, 4, 2080, -1.0, False,
                                 backend=backend)
            elapsed[i] = time.perf_counter() - t0
        results[backend] = out
        print(f"kernel [{backend}]  {n} arrivals: "
              f"{elapsed.mean()*1e3:8.2f} ms +/- {elapsed.std()*1e3:.2f}")
    for a, b in zip(results["numba"], results["numpy"]):
        assert np.array_equal(a, b), "backends diverged"
    print("kernel outputs identical across backends")


def bench_scenario():
    cfg = ScenarioConfig(
        name="bench",
        profile=get_profile("Unbound").with_threads(4),
        vector=AttackVectorSpec(vector="keysigtrap", key_count=64, sig_count=64),
        attack_schedule=[{"rate": 1.0, "start": 0.0, "end": 3600.0}],
        duration=3600.0,
        seed=3,
    )
    run_scenario(cfg, backend="numba")  # warm: zone build + jit
    reports = {}
    for backend in ("numba", "numpy"):
        t0 = time.perf_counter()
        reports[backend] = run_scenario(cfg, backend=backend)
        print(f"scenario [{backend}]  wall {time.perf_counter()-t0:6.3f} s  "
              f"loss {reports[backend].loss_fraction:.4f}")
    a, b = reports["numba"].as_dict(), reports["numpy"].as_dict()
    a.pop("backend"), b.pop("backend")
    assert a == b, "scenario reports diverged"
    print("scenario reports identical across backends")


if __name__ == "__main__":
    bench_kernel()
    bench_scenario()
