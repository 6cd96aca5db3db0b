"""Event-loop kernel for the resolver simulation.

One pass over the time-sorted arrival stream drives per-thread FIFO
queues with bounded capacity, optional stale-packet discard at dequeue,
and either pre-drawn thread assignment (random / round-robin, modeling
load-independent packet-to-worker distribution) or load-aware assignment
computed in the loop.

The loop is the simulation's hot path: long scenarios push half a million
arrivals through it.  It is compiled with numba by default; setting
``DNSSECLAB_NO_NUMBA=1`` selects the identical pure-Python/numpy path,
which produces bit-identical results (same arithmetic, same order).
"""

from __future__ import annotations

import os

import numpy as np

# Disposition codes written into the finish array.
DROPPED = -1.0     # buffer full on arrival
DISCARDED = -2.0   # stale at dequeue


def _event_loop(times, services, assign, n_threads, capacity,
                discard_older, load_aware, start_out, finish_out, thread_out):
    """Simulate the per-thread queues over one sorted arrival stream.

    assign is ignored when load_aware is true.  capacity < 0 means
    unbounded; discard_older < 0 disables stale discard.  Outputs are
    written in place: service start time, completion time (or a negative
    disposition code), and the serving thread index.
    """
    n = times.shape[0]
    qcap = n if capacity < 0 else capacity
    qbuf = np.empty((n_threads, max(qcap, 1)), dtype=np.int64)
    qhead = np.zeros(n_threads, dtype=np.int64)
    qlen = np.zeros(n_threads, dtype=np.int64)
    free_at = np.zeros(n_threads, dtype=np.float64)
    qwork = np.zeros(n_threads, dtype=np.float64)

    def drain(thread, now):
        # Serve the queue head for as long as the thread is free before now.
        while qlen[thread] > 0 and free_at[thread] <= now:
            idx = qbuf[thread, qhead[thread] % qcap]
            qhead[thread] += 1
            qlen[thread] -= 1
            qwork[thread] -= services[idx]
            dequeue_at = free_at[thread]
            if dequeue_at < times[idx]:
                dequeue_at = times[idx]
            if discard_older >= 0.0 and dequeue_at - times[idx] > discard_older:
                finish_out[idx] = DISCARDED
                continue
            start_out[idx] = dequeue_at
            finish_out[idx] = dequeue_at + services[idx]
            free_at[thread] = finish_out[idx]

    for i in range(n):
        now = times[i]
        if load_aware:
            # Settle every queue up to now, then pick the least-loaded thread.
            for t in range(n_threads):
                drain(t, now)
            best = 0
            best_load = -1.0
            for t in range(n_threads):
                pending = free_at[t] - now
                if pending < 0.0:
                    pending = 0.0
                load = pending + qwork[t]
                if best_load < 0.0 or load < best_load:
                    best_load = load
                    best = t
            thread = best
        else:
            thread = assign[i]
            drain(thread, now)

        thread_out[i] = thread
        if qlen[thread] == 0 and free_at[thread] <= now:
            start_out[i] = now
            finish_out[i] = now + services[i]
            free_at[thread] = finish_out[i]
        elif qlen[thread] < qcap:
            slot = (qhead[thread] + qlen[thread]) % qcap
            qbuf[thread, slot] = i
            qlen[thread] += 1
            qwork[thread] += services[i]
        else:
            finish_out[i] = DROPPED

    for t in range(n_threads):
        drain(t, np.inf)


_JIT_LOOP = None


def use_numba() -> bool:
    return os.environ.get("DNSSECLAB_NO_NUMBA", "") not in ("1", "true", "yes")


def active_backend() -> str:
    return "numba" if use_numba() else "numpy"


def run_event_loop(times, services, assign, n_threads, capacity,
                   discard_older, load_aware, backend: str | None = None):
    """Dispatch to the compiled or pure kernel; returns (start, finish, thread)."""
    n = times.shape[0]
    start = np.full(n, -1.0, dtype=np.float64)
    finish = np.full(n, -1.0, dtype=np.float64)
    thread = np.full(n, -1, dtype=np.int32)
    if backend is None:
        backend = active_backend()
    if backend == "numba":
        global _JIT_LOOP
        if _JIT_LOOP is None:
            from numba import njit
            _JIT_LOOP = njit(cache=True)(_event_loop)
        loop = _JIT_LOOP
    elif backend == "numpy":
        loop = _event_loop
    else:
        raise ValueError(f"unknown backend {backend!r}")
    loop(times, services, assign, np.int64(n_threads),
         np.int64(capacity), np.float64(discard_older), load_aware,
         start, finish, thread)
    return start, finish, thread


def _mix(idx: np.ndarray, seed: int, stream: int) -> np.ndarray:
    """splitmix64 over (seed, stream, index); streams never interact."""
    z = idx + np.uint64((seed * 0x9E3779B97F4A7C15 + stream * 0xD1B54A32D192ED03)
                        & 0xFFFFFFFFFFFFFFFF)
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def hashed_assignment(count: int, n_threads: int, seed: int, stream: int) -> np.ndarray:
    """Stable per-request thread draw; adding requests to one stream
    never changes another stream's draws."""
    z = _mix(np.arange(count, dtype=np.uint64), seed, stream)
    return (z % np.uint64(n_threads)).astype(np.int32)


def hashed_uniform(count: int, seed: int, stream: int) -> np.ndarray:
    """Stable per-request uniforms in [0, 1), same construction as above."""
    z = _mix(np.arange(count, dtype=np.uint64), seed, stream)
    return (z >> np.uint64(11)).astype(np.float64) / float(1 << 53)
