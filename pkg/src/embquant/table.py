"""Core containers: embedding tables, clip ranges, and the quantization-error objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EmbeddingTable", "ClipRange", "quant_mse"]


class EmbeddingTable:
    """Dense N x d matrix of float32 embedding weights.

    Row i is the contiguous slice ``data[i*d : (i+1)*d]`` of the flat payload.
    Values must be finite; NaN/Inf are rejected at construction rather than
    silently clamped.
    """

    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.ascontiguousarray(values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"table must be at least 1x1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("table contains non-finite values (NaN/Inf)")
        arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        """Read-only (N, d) float32 view of the table."""
        return self._values

    @property
    def rows(self) -> int:
        return self._values.shape[0]

    @property
    def dim(self) -> int:
        return self._values.shape[1]

    def row(self, i: int) -> np.ndarray:
        """Read-only view of row i. Raises IndexError outside [0, N)."""
        if not 0 <= i < self.rows:
            raise IndexError(f"row index {i} out of range for table with {self.rows} rows")
        return self._values[i]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return self._values.shape == other._values.shape and np.array_equal(
            self._values, other._values
        )

    def __repr__(self):
        return f"EmbeddingTable(rows={self.rows}, dim={self.dim})"


@dataclass(frozen=True)
class ClipRange:
    """Clamp interval [xmin, xmax] selected by a threshold-search strategy."""

    xmin: float
    xmax: float

    def __post_init__(self):
        if not (np.isfinite(self.xmin) and np.isfinite(self.xmax)):
            raise ValueError(f"clip range must be finite, got ({self.xmin}, {self.xmax})")
        if self.xmin > self.xmax:
            raise ValueError(f"xmin {self.xmin} exceeds xmax {self.xmax}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin


def quant_mse(x, clip_range: ClipRange, nbits: int) -> float:
    """Sum of squared reconstruction errors of x under uniform n-bit quantization.

    Values are clamped to the range, mapped to the nearest of the 2^n evenly
    spaced grid points (ties round away from zero), and reconstructed; the
    return value is sum((x - reconstructed)^2), evaluated in float64. This is
    the objective minimized by every threshold search; the mean-normalized
    variants live in the metrics module.

    A degenerate range (xmax == xmin) reconstructs every value as xmin.
    """
    if nbits not in (4, 8):
        raise ValueError(f"nbits must be 4 or 8, got {nbits}")
    x = np.asarray(x, dtype=np.float64)
    xmin, xmax = clip_range.xmin, clip_range.xmax
    if xmax == xmin:
        return float(np.sum((x - xmin) ** 2))
    qmax = (1 << nbits) - 1
    scale = (xmax - xmin) / qmax
    clamped = np.clip(x, xmin, xmax)
    codes = np.clip(np.floor((clamped - xmin) / scale + 0.5), 0, qmax)
    recon = scale * codes + xmin
    return float(np.sum((x - recon) ** 2))
