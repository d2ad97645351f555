"""Windowed coincidence matching between two time-tagged streams.

Policy, applied identically by both engines:

* a pair (a, b) is a coincidence candidate when |t_a - t_b| <= window
  (inclusive);
* matching is one-to-one and greedy in chronological order: each event
  is paired with the earliest unmatched partner inside its window, not
  the nearest one (A = [100] with B = [95, 104] and window 10 matches
  100 <-> 95);
* equal timestamps are resolved Plus before Minus, which the stream
  container already guarantees by its sort order.

``count_coincidences`` runs an O(n) two-pointer sweep (optionally
accelerated with numba when installed); ``count_coincidences_naive``
re-implements the policy by explicit per-event enumeration and exists
as an independent oracle for tests and verification.  Both reduce to
the same counts structure, where singles count every event on a channel
whether or not it was matched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detection import BlockCounts
from .timetags import EventStream


class UnsortedInput(ValueError):
    """Raw timestamp arrays handed to the matcher were not sorted."""


class TickResolutionMismatch(ValueError):
    """The two streams use different tick resolutions."""


@dataclass(frozen=True)
class CoincidenceWindow:
    """Half-width of the matching window, in ticks (inclusive)."""

    width_ticks: int

    def __post_init__(self) -> None:
        if self.width_ticks < 0:
            raise ValueError(f"width_ticks must be >= 0, got {self.width_ticks}")


def _match_core(t_a: np.ndarray, t_b: np.ndarray, width: np.uint64,
                out_a: np.ndarray, out_b: np.ndarray) -> int:
    """Two-pointer sweep over sorted uint64 timestamps; returns match count.

    Comparisons are arranged so the unsigned difference is always taken
    larger-minus-smaller, which keeps uint64 arithmetic overflow-free.
    """
    i = 0
    j = 0
    k = 0
    na = t_a.shape[0]
    nb = t_b.shape[0]
    while i < na and j < nb:
        ta = t_a[i]
        tb = t_b[j]
        if ta >= tb:
            if ta - tb <= width:
                out_a[k] = i
                out_b[k] = j
                k += 1
                i += 1
                j += 1
            else:
                j += 1
        else:
            if tb - ta <= width:
                out_a[k] = i
                out_b[k] = j
                k += 1
                i += 1
                j += 1
            else:
                i += 1
    return k


try:  # pragma: no cover - exercised only when numba is installed
    from numba import njit

    _match_core = njit(cache=True)(_match_core)
except ImportError:  # pragma: no cover
    pass


def match_events(
    t_a: np.ndarray, t_b: np.ndarray, window: CoincidenceWindow
) -> tuple[np.ndarray, np.ndarray]:
    """Match two sorted uint64 timestamp arrays; returns paired indices."""
    t_a = np.ascontiguousarray(t_a, dtype=np.uint64)
    t_b = np.ascontiguousarray(t_b, dtype=np.uint64)
    for name, t in (("t_a", t_a), ("t_b", t_b)):
        if t.shape[0] > 1 and np.any(t[1:] < t[:-1]):
            raise UnsortedInput(f"{name} is not sorted by timestamp")
    cap = min(t_a.shape[0], t_b.shape[0])
    out_a = np.empty(cap, dtype=np.int64)
    out_b = np.empty(cap, dtype=np.int64)
    k = _match_core(t_a, t_b, np.uint64(window.width_ticks), out_a, out_b)
    return out_a[:k].copy(), out_b[:k].copy()


def _check_streams(stream_a: EventStream, stream_b: EventStream) -> None:
    if stream_a.tick_resolution_ps != stream_b.tick_resolution_ps:
        raise TickResolutionMismatch(
            f"stream A has {stream_a.tick_resolution_ps} ps/tick, "
            f"stream B has {stream_b.tick_resolution_ps} ps/tick"
        )


def _select(
    stream: EventStream, wanted_setting: "int | None"
) -> tuple[np.ndarray, np.ndarray]:
    """Timestamps and signs of the events under consideration."""
    if wanted_setting is None:
        return stream.t, stream.sign
    keep = stream.setting_index == wanted_setting
    return stream.t[keep], stream.sign[keep]


def _reduce(
    sign_a: np.ndarray,
    sign_b: np.ndarray,
    idx_a: np.ndarray,
    idx_b: np.ndarray,
    alpha: float,
    beta: float,
) -> BlockCounts:
    cells = (sign_a[idx_a].astype(np.intp) << 1) | sign_b[idx_b]
    coinc = np.bincount(cells, minlength=4)
    return BlockCounts(
        n_pp=int(coinc[0]),
        n_pm=int(coinc[1]),
        n_mp=int(coinc[2]),
        n_mm=int(coinc[3]),
        s_a_plus=int(np.count_nonzero(sign_a == 0)),
        s_a_minus=int(np.count_nonzero(sign_a == 1)),
        s_b_plus=int(np.count_nonzero(sign_b == 0)),
        s_b_minus=int(np.count_nonzero(sign_b == 1)),
        alpha=alpha,
        beta=beta,
    )


def count_coincidences(
    stream_a: EventStream,
    stream_b: EventStream,
    window: CoincidenceWindow,
    settings_filter: "tuple[int, int] | None" = None,
    alpha: float = math.nan,
    beta: float = math.nan,
) -> BlockCounts:
    """Match two streams and reduce to coincidence and singles counts.

    With ``settings_filter = (setting_a, setting_b)`` only events carrying
    those setting indices take part, in matching and in the singles totals.
    """
    _check_streams(stream_a, stream_b)
    want_a = None if settings_filter is None else settings_filter[0]
    want_b = None if settings_filter is None else settings_filter[1]
    t_a, sign_a = _select(stream_a, want_a)
    t_b, sign_b = _select(stream_b, want_b)
    idx_a, idx_b = match_events(t_a, t_b, window)
    return _reduce(sign_a, sign_b, idx_a, idx_b, alpha, beta)


def match_events_naive(
    t_a: np.ndarray, t_b: np.ndarray, window: CoincidenceWindow
) -> tuple[np.ndarray, np.ndarray]:
    """Oracle matcher: explicit enumeration, one A event at a time.

    For each A event in order, every B event inside the window is
    enumerated and the earliest unmatched one is taken.  Quadratic in
    the worst case; use only for verification.
    """
    t_a = np.ascontiguousarray(t_a, dtype=np.uint64)
    t_b = np.ascontiguousarray(t_b, dtype=np.uint64)
    for name, t in (("t_a", t_a), ("t_b", t_b)):
        if t.shape[0] > 1 and np.any(t[1:] < t[:-1]):
            raise UnsortedInput(f"{name} is not sorted by timestamp")
    w = int(window.width_ticks)
    u64_max = np.iinfo(np.uint64).max
    taken = np.zeros(t_b.shape[0], dtype=bool)
    pairs_a = []
    pairs_b = []
    for i in range(t_a.shape[0]):
        ta = int(t_a[i])
        lo = int(np.searchsorted(t_b, max(ta - w, 0), side="left"))
        hi = int(np.searchsorted(t_b, min(ta + w, u64_max), side="right"))
        for j in range(lo, hi):
            if not taken[j]:
                taken[j] = True
                pairs_a.append(i)
                pairs_b.append(j)
                break
    return (
        np.asarray(pairs_a, dtype=np.int64),
        np.asarray(pairs_b, dtype=np.int64),
    )


def count_coincidences_naive(
    stream_a: EventStream,
    stream_b: EventStream,
    window: CoincidenceWindow,
    settings_filter: "tuple[int, int] | None" = None,
    alpha: float = math.nan,
    beta: float = math.nan,
) -> BlockCounts:
    """Reference implementation of :func:`count_coincidences`."""
    _check_streams(stream_a, stream_b)
    want_a = None if settings_filter is None else settings_filter[0]
    want_b = None if settings_filter is None else settings_filter[1]
    t_a, sign_a = _select(stream_a, want_a)
    t_b, sign_b = _select(stream_b, want_b)
    idx_a, idx_b = match_events_naive(t_a, t_b, window)
    return _reduce(sign_a, sign_b, idx_a, idx_b, alpha, beta)
