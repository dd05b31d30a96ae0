"""Histogram-based threshold searches.

The input vector is summarized as a b-bin histogram; candidate clip ranges are
windows of consecutive bins. A window of n bins is scored by the L2 error of
approximating the (piecewise-uniform) histogram density with the 16 grid
points a 4-bit codec would place across that window; the brute-force search
scores every (start, n) window, the approximate search greedily peels one bin
at a time from whichever end scores better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clipping import WorkCounters
from .table import ClipRange

__all__ = [
    "Histogram",
    "build_histogram",
    "bin_l2_norm",
    "HistWindow",
    "hist_brute_search",
    "hist_apprx_search",
    "clip_range_hist_brute",
    "clip_range_hist_apprx",
]

DST_NBINS = 16


@dataclass(frozen=True)
class Histogram:
    """Counts over b equal bins spanning [lo, hi]; the last bin is closed."""

    nbins: int
    lo: float
    hi: float
    counts: np.ndarray

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.nbins

    def centers(self) -> np.ndarray:
        w = self.bin_width
        return self.lo + w * (np.arange(self.nbins) + 0.5)


def build_histogram(x, b: int) -> Histogram:
    """Histogram of x over [min(x), max(x)] with b half-open bins (last closed)."""
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("input vector is empty")
    lo, hi = float(np.min(x)), float(np.max(x))
    counts = np.zeros(b, dtype=np.int64)
    if lo == hi:
        counts[0] = x.size
        return Histogram(b, lo, hi, counts)
    w = (hi - lo) / b
    idx = np.clip(np.floor((x - lo) / w).astype(np.int64), 0, b - 1)
    counts = np.bincount(idx, minlength=b).astype(np.int64)
    return Histogram(b, lo, hi, counts)


def bin_l2_norm(delta_begin, delta_end, density):
    """Integral of x^2 * density over the offset interval [delta_begin, delta_end].

    This is the squared reconstruction error of mass spread uniformly at
    ``density`` across an interval whose endpoints sit delta_begin/delta_end
    away from the reconstruction point. Accepts scalars or arrays.
    """
    delta_begin = np.asarray(delta_begin, dtype=np.float64)
    delta_end = np.asarray(delta_end, dtype=np.float64)
    out = density * (delta_end**3 - delta_begin**3) / 3.0
    if out.ndim == 0:
        return float(out)
    return out


def _offset_unit_norms(k: np.ndarray, bin_width: float, dst_bin_width: float) -> np.ndarray:
    """Window-error contribution of a unit-density source bin k bins right of the window start.

    The 16 reconstruction points sit at multiples of dst_bin_width from the
    window start; a source bin spans [k*w, (k+1)*w). Its mass maps to the
    nearest points (clamped to the outermost ones for bins outside the
    window), splitting across up to three regimes when the bin straddles
    several reconstruction cells.
    """
    begin = k * bin_width
    end = begin + bin_width
    half = 0.5 * dst_bin_width
    dst_of_begin = np.clip(np.floor((begin + half) / dst_bin_width), 0, DST_NBINS - 1)
    dst_of_end = np.clip(np.floor((end + half) / dst_bin_width), 0, DST_NBINS - 1)
    begin_center = dst_of_begin * dst_bin_width
    end_center = dst_of_end * dst_bin_width
    delta_begin = begin - begin_center

    same = bin_l2_norm(delta_begin, end - begin_center, 1.0)
    split = (
        bin_l2_norm(delta_begin, half, 1.0)
        + (dst_of_end - dst_of_begin - 1) * bin_l2_norm(-half, half, 1.0)
        + bin_l2_norm(-half, end - end_center, 1.0)
    )
    return np.where(dst_of_begin == dst_of_end, same, split)


def window_norm(hist: Histogram, start_bin: int, nbins_selected: int, counters: WorkCounters | None = None) -> float:
    """Accumulated L2 error of approximating the whole histogram with the window's 16 points."""
    if counters is not None:
        counters.candidate_evals += 1
        counters.bin_visits += hist.nbins
    w = hist.bin_width
    if w == 0.0:
        return 0.0
    dst_w = w * nbins_selected / (DST_NBINS - 1)
    k = np.arange(hist.nbins, dtype=np.float64) - start_bin
    density = hist.counts.astype(np.float64) / w
    return float(np.sum(density * _offset_unit_norms(k, w, dst_w)))


@dataclass(frozen=True)
class HistWindow:
    """A selected bin window and its range/score."""

    clip_range: ClipRange
    start_bin: int
    nbins_selected: int
    norm: float


def hist_brute_search(x, b: int = 200, counters: WorkCounters | None = None) -> HistWindow:
    """Exhaustive window search: every (start_bin, nbins_selected) candidate.

    Scores all b*(b+1)/2 windows and returns the first one attaining the
    minimum norm in (nbins ascending, start ascending) order. The inner
    per-window accumulation visits every source bin, so the total work grows
    as b^3; the actual evaluation batches all start positions of one window
    width through a correlation, which changes only the wall clock, not the
    scores or counters.
    """
    hist = build_histogram(x, b)
    if hist.lo == hist.hi:
        if counters is not None:
            counters.candidate_evals += 1
            counters.bin_visits += b
        return HistWindow(ClipRange(hist.lo, hist.hi), 0, 1, 0.0)
    w = hist.bin_width
    density = hist.counts.astype(np.float64) / w
    offsets = np.arange(-(b - 1), b, dtype=np.float64)
    best_norm = np.inf
    best_start, best_n = 0, 1
    for n in range(1, b + 1):
        dst_w = w * n / (DST_NBINS - 1)
        contrib = _offset_unit_norms(offsets, w, dst_w)
        # norms[s] = sum_j density[j] * contrib[j - s], for s = 0..b-1
        norms = np.convolve(density, contrib[::-1], mode="valid")[: b - n + 1]
        if counters is not None:
            counters.candidate_evals += norms.size
            counters.bin_visits += norms.size * b
        s = int(np.argmin(norms))
        if norms[s] < best_norm:
            best_norm = float(norms[s])
            best_start, best_n = s, n
    return HistWindow(
        ClipRange(hist.lo + w * best_start, hist.lo + w * (best_start + best_n)),
        best_start,
        best_n,
        best_norm,
    )


def clip_range_hist_brute(x, b: int = 200, counters: WorkCounters | None = None) -> ClipRange:
    return hist_brute_search(x, b, counters).clip_range


def hist_apprx_search(x, b: int = 200, counters: WorkCounters | None = None) -> HistWindow:
    """Greedy linear-time restriction of the exhaustive window search.

    Starts from the full window and repeatedly drops one bin from whichever
    end scores the lower norm (ties drop from the right), tracking the best
    window seen. Total norm evaluations are O(b), each an O(b) accumulation,
    and every window visited is also a brute-search candidate, so the result
    can never score below the exhaustive minimum.
    """
    hist = build_histogram(x, b)
    if hist.lo == hist.hi:
        if counters is not None:
            counters.candidate_evals += 1
            counters.bin_visits += b
        return HistWindow(ClipRange(hist.lo, hist.hi), 0, 1, 0.0)
    w = hist.bin_width
    start, end = 0, b
    best_norm = window_norm(hist, start, end - start, counters)
    best_start, best_end = start, end
    while end - start > 1:
        norm_left = window_norm(hist, start + 1, end - start - 1, counters)
        norm_right = window_norm(hist, start, end - start - 1, counters)
        if norm_left < norm_right:
            start += 1
            current = norm_left
        else:
            end -= 1
            current = norm_right
        if current < best_norm:
            best_norm = current
            best_start, best_end = start, end
    return HistWindow(
        ClipRange(hist.lo + w * best_start, hist.lo + w * best_end),
        best_start,
        best_end - best_start,
        best_norm,
    )


def clip_range_hist_apprx(x, b: int = 200, counters: WorkCounters | None = None) -> ClipRange:
    return hist_apprx_search(x, b, counters).clip_range
