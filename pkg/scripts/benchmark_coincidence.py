#!/usr/bin/env python3
"""Throughput benchmark for the windowed coincidence matcher.

Generates two synthetic Poisson-like event streams, runs the production
matcher over them repeatedly and reports events matched per second per
core (the sweep is single-threaded).  The soft target for the fast path
is 10^7 events/second; the naive reference engine is timed on a smaller
slice for comparison only.

The benchmark is informational — it is deliberately not a test, so a slow
container never turns into a red suite.

Usage:
    python scripts/benchmark_coincidence.py --events 4000000
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from fairsample.coincidence import (
    CoincidenceWindow,
    count_coincidences,
    count_coincidences_naive,
)
from fairsample.quantum import Station
from fairsample.timetags import make_stream


def synth_stream(rng: np.random.Generator, station: Station, n: int, mean_gap: float):
    gaps = rng.exponential(mean_gap, size=n)
    t = np.cumsum(gaps).astype(np.uint64)
    sign = rng.integers(0, 2, size=n).astype(np.uint8)
    setting = rng.integers(0, 4, size=n).astype(np.uint8)
    return make_stream(station, 1000, t, sign, setting)


def best_time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--events", type=int, default=4_000_000, help="events per side")
    parser.add_argument("--mean-gap", type=float, default=1000.0, help="mean gap between events, ticks")
    parser.add_argument("--window", type=int, default=500, help="coincidence window half-width, ticks")
    parser.add_argument("--repeats", type=int, default=5, help="timing repetitions (best is reported)")
    parser.add_argument("--naive-events", type=int, default=20_000, help="events per side for the reference engine")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        import numba  # noqa: F401

        backend = f"numba {numba.__version__} (JIT)"
    except ImportError:
        backend = "pure numpy/python fallback"

    rng = np.random.default_rng(args.seed)
    a = synth_stream(rng, Station.ALICE, args.events, args.mean_gap)
    b = synth_stream(rng, Station.BOB, args.events, args.mean_gap)
    window = CoincidenceWindow(args.window)

    # First call includes JIT compilation; do it on a small slice.
    warm_a = synth_stream(rng, Station.ALICE, 1000, args.mean_gap)
    warm_b = synth_stream(rng, Station.BOB, 1000, args.mean_gap)
    count_coincidences(warm_a, warm_b, window)

    counts = count_coincidences(a, b, window)
    dt = best_time(lambda: count_coincidences(a, b, window), args.repeats)
    total = 2 * args.events
    rate = total / dt

    n = args.naive_events
    a_small = synth_stream(rng, Station.ALICE, n, args.mean_gap)
    b_small = synth_stream(rng, Station.BOB, n, args.mean_gap)
    dt_naive = best_time(
        lambda: count_coincidences_naive(a_small, b_small, window), max(1, args.repeats // 2)
    )
    rate_naive = 2 * n / dt_naive

    print(f"fast path backend : {backend}")
    print(f"stream size       : {args.events:,} events/side, mean gap {args.mean_gap:g} ticks")
    print(f"window            : +/- {args.window} ticks")
    print(f"coincidences      : {counts.total_coincidences:,}")
    print(f"fast engine       : {dt * 1e3:8.1f} ms  ->  {rate:,.0f} events/s/core")
    print(f"reference engine  : {dt_naive * 1e3:8.1f} ms on {n:,}/side  ->  {rate_naive:,.0f} events/s/core")
    print(f"soft target       : 10,000,000 events/s/core -> {'met' if rate >= 1e7 else 'NOT met'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
