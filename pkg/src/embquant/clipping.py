"""Clipping-threshold searches over the uniform-codec error objective.

Every strategy maps a vector (or whole table) to a ClipRange. All of them are
pure functions; the optional WorkCounters argument collects objective-call
counts for hardware-independent complexity measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .table import ClipRange, EmbeddingTable, quant_mse

__all__ = [
    "WorkCounters",
    "clip_range_sym",
    "clip_range_asym",
    "clip_range_table",
    "clip_range_gss",
    "clip_range_aciq",
    "clip_range_greedy",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class WorkCounters:
    """Instrumented work totals: objective evaluations and histogram bin visits."""

    loss_evals: int = 0
    candidate_evals: int = 0
    bin_visits: int = 0

    def merge(self, other: "WorkCounters") -> None:
        self.loss_evals += other.loss_evals
        self.candidate_evals += other.candidate_evals
        self.bin_visits += other.bin_visits


def _require_nonempty(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("input vector is empty")
    return x


def clip_range_sym(x) -> ClipRange:
    """Symmetric full range: xmax = max|x|, xmin = -xmax."""
    x = _require_nonempty(x)
    xmax = float(np.max(np.abs(x)))
    return ClipRange(-xmax, xmax)


def clip_range_asym(x) -> ClipRange:
    """Full data range (min, max); no clipping, sensitive to outliers."""
    x = _require_nonempty(x)
    return ClipRange(float(np.min(x)), float(np.max(x)))


def clip_range_table(table: EmbeddingTable) -> ClipRange:
    """One range over the entire table, shared by every row."""
    values = table.values
    return ClipRange(float(np.min(values)), float(np.max(values)))


def clip_range_gss(x, nbits: int = 4, tol: float = 1e-4, counters: WorkCounters | None = None) -> ClipRange:
    """Best symmetric threshold found by golden-section search.

    Minimizes the quantization error of the symmetric range (-t, t) for t in
    (0, max|x|], shrinking the bracket by the golden ratio until its width
    falls below tol * max|x|. The objective is not guaranteed unimodal, so the
    returned t is the best point ever evaluated, including the unclipped
    endpoint -- the result can never lose to the plain symmetric range.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    x = _require_nonempty(x)
    tmax = float(np.max(np.abs(x)))
    if tmax == 0.0:
        return ClipRange(0.0, 0.0)

    def f(t: float) -> float:
        if counters is not None:
            counters.loss_evals += 1
        return quant_mse(x, ClipRange(-t, t), nbits)

    best_t, best_f = tmax, f(tmax)
    lo, hi = 0.0, tmax
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    for t, ft in ((c, fc), (d, fd)):
        if ft < best_f:
            best_t, best_f = t, ft
    while hi - lo > tol * tmax:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
            if fc < best_f:
                best_t, best_f = c, fc
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
            if fd < best_f:
                best_t, best_f = d, fd
    return ClipRange(-best_t, best_t)


def clip_range_aciq(x, distribution: str = "laplacian", gaussian_constant: float | None = None) -> ClipRange:
    """Analytic clip threshold assuming a known input distribution.

    For the laplacian assumption the half-width is alpha = 5.03 * E|x - mean|,
    giving (mean - alpha, mean + alpha). The gaussian branch has no constant
    here: callers must supply one explicitly. alpha = 0 (constant input) falls
    back to the plain data range.
    """
    x = _require_nonempty(x)
    if distribution == "laplacian":
        constant = 5.03
    elif distribution == "gaussian":
        if gaussian_constant is None:
            raise ValueError(
                "gaussian clipping requires an explicit gaussian_constant; "
                "only the laplacian constant is built in"
            )
        constant = float(gaussian_constant)
    else:
        raise ValueError(f"distribution must be 'laplacian' or 'gaussian', got {distribution!r}")
    mean = float(np.mean(x))
    alpha = constant * float(np.mean(np.abs(x - mean)))
    if alpha == 0.0:
        return clip_range_asym(x)
    return ClipRange(mean - alpha, mean + alpha)


def clip_range_greedy(
    x,
    nbits: int = 4,
    b: int = 200,
    r: float = 0.16,
    counters: WorkCounters | None = None,
) -> ClipRange:
    """Greedy one-end-at-a-time shrink search for asymmetric thresholds.

    Starting from the full data range split into b steps, each iteration
    evaluates shrinking one step from the left versus the right and walks in
    the cheaper direction, until the range has shrunk to (1 - r) of the
    original width (about b*r steps, two objective calls each). The best
    evaluated (xmin, xmax) pair -- including the unshrunk starting range -- is
    returned, so the result never loses to the plain data range.
    """
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must be in (0, 1], got {r}")
    x = _require_nonempty(x)
    x0, x1 = float(np.min(x)), float(np.max(x))
    if x0 == x1:
        return ClipRange(x0, x1)

    def loss(xmin: float, xmax: float) -> float:
        if counters is not None:
            counters.loss_evals += 1
        return quant_mse(x, ClipRange(xmin, xmax), nbits)

    stepsize = (x1 - x0) / b
    min_steps = b * (1.0 - r) * stepsize
    best_loss = loss(x0, x1)
    best_min, best_max = x0, x1
    # Positions are tracked as step counts so every candidate lies exactly on
    # the grid x0 + i*stepsize / x1 - j*stepsize.
    nl = 0
    nr = 0
    while (x0 + nl * stepsize) + min_steps < (x1 - nr * stepsize):
        lmin, lmax = x0 + (nl + 1) * stepsize, x1 - nr * stepsize
        rmin, rmax = x0 + nl * stepsize, x1 - (nr + 1) * stepsize
        loss_l = loss(lmin, lmax)
        loss_r = loss(rmin, rmax)
        if loss_l < loss_r:
            nl += 1
            if loss_l < best_loss:
                best_loss, best_min, best_max = loss_l, lmin, lmax
        else:
            nr += 1
            if loss_r < best_loss:
                best_loss, best_min, best_max = loss_r, rmin, rmax
    return ClipRange(best_min, best_max)
