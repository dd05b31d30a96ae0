"""Affine uniform codec: codes = round((clamp(x) - bias) / scale), recon = scale*code + bias."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .table import ClipRange, EmbeddingTable

__all__ = [
    "AUX_PRECISIONS",
    "UniformRowQuant",
    "UniformQuantTable",
    "quantize_uniform",
    "dequantize_uniform",
]

AUX_PRECISIONS = ("fp32", "fp16")

_AUX_DTYPE = {"fp32": np.float32, "fp16": np.float16}
_AUX_BYTES = {"fp32": 4, "fp16": 2}


def aux_dtype(aux_precision: str):
    try:
        return _AUX_DTYPE[aux_precision]
    except KeyError:
        raise ValueError(f"aux_precision must be one of {AUX_PRECISIONS}, got {aux_precision!r}") from None


def aux_bytes(aux_precision: str) -> int:
    """Storage bytes of a single scale or bias value."""
    aux_dtype(aux_precision)
    return _AUX_BYTES[aux_precision]


@dataclass
class UniformRowQuant:
    """One quantized row: integer codes plus its stored scale/bias.

    ``scale`` and ``bias`` are numpy scalars at the configured auxiliary width
    (float32 or float16); the degenerate constant-row case stores scale = 0 and
    all-zero codes so reconstruction returns the bias.
    """

    codes: np.ndarray
    scale: np.floating
    bias: np.floating
    nbits: int

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.uint8)
        if self.nbits not in (4, 8):
            raise ValueError(f"nbits must be 4 or 8, got {self.nbits}")
        if self.codes.size and int(self.codes.max()) > (1 << self.nbits) - 1:
            raise ValueError(f"codes exceed {self.nbits}-bit range")


def quantize_uniform(x, clip_range: ClipRange, nbits: int, aux_precision: str = "fp32") -> UniformRowQuant:
    """Quantize one vector against a clip range.

    scale = (xmax - xmin) / (2^n - 1) and bias = xmin. Codes are computed from
    the exact float64 scale/bias with half-away-from-zero rounding; only the
    *stored* scale/bias are rounded (once, to nearest-even) to the auxiliary
    width. A degenerate range yields scale 0 and all-zero codes.
    """
    if nbits not in (4, 8):
        raise ValueError(f"nbits must be 4 or 8, got {nbits}")
    dtype = aux_dtype(aux_precision)
    x = np.asarray(x, dtype=np.float64)
    xmin, xmax = clip_range.xmin, clip_range.xmax
    qmax = (1 << nbits) - 1
    if xmax == xmin:
        codes = np.zeros(x.shape, dtype=np.uint8)
        return UniformRowQuant(codes, dtype(0.0), dtype(xmin), nbits)
    scale = (xmax - xmin) / qmax
    clamped = np.clip(x, xmin, xmax)
    codes = np.clip(np.floor((clamped - xmin) / scale + 0.5), 0, qmax).astype(np.uint8)
    return UniformRowQuant(codes, dtype(scale), dtype(xmin), nbits)


def dequantize_uniform(q: UniformRowQuant) -> np.ndarray:
    """Reconstruct scale*code + bias in float32 arithmetic.

    fp16-stored scale/bias are widened to float32 first; the multiply/add runs
    entirely in float32, matching what the packed lookup kernel computes.
    """
    scale = np.float32(q.scale)
    bias = np.float32(q.bias)
    return scale * q.codes.astype(np.float32) + bias


@dataclass
class UniformQuantTable:
    """Uniformly quantized table: per-row codes with per-row scale/bias.

    Stored column-free: ``codes`` is the (N, d) uint8 code matrix and
    ``scales``/``biases`` are length-N arrays at the auxiliary width. All rows
    share ``nbits``; ``scheme`` records which threshold strategy produced the
    ranges.
    """

    codes: np.ndarray
    scales: np.ndarray
    biases: np.ndarray
    nbits: int
    aux_precision: str = "fp32"
    scheme: str = "asym"

    def __post_init__(self):
        dtype = aux_dtype(self.aux_precision)
        self.codes = np.asarray(self.codes, dtype=np.uint8)
        self.scales = np.asarray(self.scales, dtype=dtype)
        self.biases = np.asarray(self.biases, dtype=dtype)
        if self.codes.ndim != 2:
            raise ValueError("codes must be a 2-D (rows, dim) array")
        n = self.codes.shape[0]
        if self.scales.shape != (n,) or self.biases.shape != (n,):
            raise ValueError("scales/biases must be length-N vectors")

    @property
    def rows(self) -> int:
        return self.codes.shape[0]

    @property
    def dim(self) -> int:
        return self.codes.shape[1]

    def row(self, i: int) -> UniformRowQuant:
        if not 0 <= i < self.rows:
            raise IndexError(f"row index {i} out of range for {self.rows} rows")
        return UniformRowQuant(self.codes[i], self.scales[i], self.biases[i], self.nbits)

    def dequantize(self) -> np.ndarray:
        """(N, d) float32 reconstruction of the whole table."""
        scales = self.scales.astype(np.float32)[:, None]
        biases = self.biases.astype(np.float32)[:, None]
        return scales * self.codes.astype(np.float32) + biases


def quantize_table_uniform(
    table: EmbeddingTable,
    ranges,
    nbits: int,
    aux_precision: str = "fp32",
    scheme: str = "asym",
) -> UniformQuantTable:
    """Quantize every row of a table against its (per-row) clip range.

    ``ranges`` is either one ClipRange applied to all rows or a sequence of N
    per-row ranges.
    """
    if isinstance(ranges, ClipRange):
        ranges = [ranges] * table.rows
    if len(ranges) != table.rows:
        raise ValueError(f"expected {table.rows} ranges, got {len(ranges)}")
    dtype = aux_dtype(aux_precision)
    codes = np.empty((table.rows, table.dim), dtype=np.uint8)
    scales = np.empty(table.rows, dtype=dtype)
    biases = np.empty(table.rows, dtype=dtype)
    for i in range(table.rows):
        rq = quantize_uniform(table.row(i), ranges[i], nbits, aux_precision)
        codes[i] = rq.codes
        scales[i] = rq.scale
        biases[i] = rq.bias
    return UniformQuantTable(codes, scales, biases, nbits, aux_precision, scheme)
