"""Loss metrics, storage-size accounting, and report assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .uniform import aux_bytes

__all__ = [
    "normalized_l2",
    "table_normalized_l2",
    "quantized_size_bytes",
    "QuantReport",
    "REPORT_COLUMNS",
]

AGG_MODES = ("flattened", "row-mean")

REPORT_COLUMNS = ("method", "d", "loss", "bytes", "percent")


def _as_2d(values) -> np.ndarray:
    arr = getattr(values, "values", values)
    return np.asarray(arr, dtype=np.float64)


def normalized_l2(x, xq) -> float:
    """||x - xq||_2 / ||x||_2, the scale-invariant relative reconstruction error.

    An all-zero x scores 0 when xq is also all-zero and +inf otherwise (the
    degenerate case has no meaningful relative error).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    xq = np.asarray(xq, dtype=np.float64).ravel()
    if x.shape != xq.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {xq.shape}")
    ref = float(np.linalg.norm(x))
    err = float(np.linalg.norm(x - xq))
    if ref == 0.0:
        return 0.0 if err == 0.0 else math.inf
    return err / ref


def table_normalized_l2(table, recon, mode: str = "flattened") -> float:
    """Table-level relative error, either flattened or averaged per row.

    flattened: one global ratio sqrt(sum of squared errors) / sqrt(sum of
    squares). row-mean: arithmetic mean of per-row ratios, where an all-zero
    row counts as 0 if reconstructed exactly.
    """
    t = _as_2d(table)
    r = _as_2d(recon)
    if t.shape != r.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {r.shape}")
    if mode == "flattened":
        return normalized_l2(t.ravel(), r.ravel())
    if mode == "row-mean":
        return float(np.mean([normalized_l2(t[i], r[i]) for i in range(t.shape[0])]))
    raise ValueError(f"mode must be one of {AGG_MODES}, got {mode!r}")


def quantized_size_bytes(scheme: str, rows: int, dim: int, nbits: int = 4,
                         aux_precision: str = "fp32", k: int | None = None):
    """Storage bytes of a quantized table and its percentage of the fp32 baseline.

    uniform     per row: ceil(d * nbits / 8) payload + scale + bias
    kmeans      per row: ceil(d / 2) packed indices + 16 codebook values
    kmeans-cls  N * ceil(d / 2) indices + N * log2(k)/8 assignment bits
                + k * 16 codebook values (fractional for small k; this is the
                accounting formula, not a container size)

    Counts payload plus per-row auxiliaries only; file-container headers are
    excluded from ratios. Returns (bytes, percent_of_fp32).
    """
    if rows < 1 or dim < 1:
        raise ValueError(f"rows and dim must be >= 1, got {rows}x{dim}")
    aux = aux_bytes(aux_precision)
    baseline = 4.0 * rows * dim
    if scheme == "uniform":
        if nbits not in (4, 8):
            raise ValueError(f"nbits must be 4 or 8, got {nbits}")
        per_row = math.ceil(dim * nbits / 8) + 2 * aux
        total = float(rows * per_row)
    elif scheme == "kmeans":
        per_row = math.ceil(dim / 2) + 16 * aux
        total = float(rows * per_row)
    elif scheme == "kmeans-cls":
        if k is None:
            raise ValueError("kmeans-cls sizing requires k")
        if k < 1 or (k & (k - 1)) != 0:
            raise ValueError(f"k must be a power of two, got {k}")
        total = rows * math.ceil(dim / 2) + rows * math.log2(k) / 8 + k * 16 * aux
    else:
        raise ValueError(f"scheme must be uniform, kmeans, or kmeans-cls, got {scheme!r}")
    return total, 100.0 * total / baseline


@dataclass
class QuantReport:
    """Per-method loss and size summary for one quantized table."""

    method: str
    per_row_loss: np.ndarray
    table_loss: float
    bytes_fp32: float
    bytes_quant: float
    percent_of_fp32: float

    def csv_row(self, dim: int) -> list[str]:
        """Values in REPORT_COLUMNS order."""
        return [
            self.method,
            str(dim),
            format(self.table_loss, ".6g"),
            format(self.bytes_quant, ".10g"),
            format(self.percent_of_fp32, ".2f"),
        ]


def build_report(method: str, table, recon, scheme: str, nbits: int,
                 aux_precision: str, k: int | None = None) -> QuantReport:
    t = _as_2d(table)
    r = _as_2d(recon)
    per_row = np.array([normalized_l2(t[i], r[i]) for i in range(t.shape[0])])
    total = table_normalized_l2(t, r, "flattened")
    rows, dim = t.shape
    bytes_quant, percent = quantized_size_bytes(scheme, rows, dim, nbits, aux_precision, k)
    return QuantReport(method, per_row, total, 4.0 * rows * dim, bytes_quant, percent)
