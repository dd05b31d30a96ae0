"""Packed 4-bit row storage and the pooled-lookup (segment-sum) kernel.

Row layout: ceil(d/2) bytes of nibbles (value j in the low nibble of byte
j//2 for even j, high nibble for odd j; odd d pads the final nibble with 0),
followed by the row's scale then bias at the auxiliary width, little-endian.
This byte layout is stable and reused verbatim as the on-disk payload of
4-bit container files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .table import EmbeddingTable
from .uniform import UniformQuantTable, aux_bytes, aux_dtype

__all__ = [
    "PackedTable4",
    "PooledQuery",
    "pack_table4",
    "unpack_row",
    "unpack_row_codes",
    "sparse_lengths_sum_4bit",
    "sparse_lengths_sum_ref",
]

_AUX_NP = {"fp32": "<f4", "fp16": "<f2"}


def packed_row_stride(dim: int, aux_precision: str) -> int:
    return (dim + 1) // 2 + 2 * aux_bytes(aux_precision)


@dataclass
class PackedTable4:
    """N fused rows of packed nibbles plus trailing scale/bias."""

    rows: int
    dim: int
    aux_precision: str
    buffer: np.ndarray  # uint8, length rows * row_stride

    def __post_init__(self):
        self.buffer = np.asarray(self.buffer, dtype=np.uint8)
        expected = self.rows * self.row_stride
        if self.buffer.size != expected:
            raise ValueError(f"buffer has {self.buffer.size} bytes, expected {expected}")

    @property
    def row_stride(self) -> int:
        return packed_row_stride(self.dim, self.aux_precision)

    @property
    def nbytes(self) -> int:
        return self.buffer.size

    def tobytes(self) -> bytes:
        return self.buffer.tobytes()

    def dequantize(self) -> np.ndarray:
        """(N, d) float32 reconstruction of all rows."""
        codes, scales, biases = _decode_rows(self, np.arange(self.rows))
        return scales[:, None] * codes.astype(np.float32) + biases[:, None]


def pack_table4(q: UniformQuantTable) -> PackedTable4:
    """Pack a 4-bit quantized table into the fused-row byte layout."""
    if q.nbits != 4:
        raise ValueError(f"packing requires 4-bit codes, got nbits={q.nbits}")
    n, d = q.rows, q.dim
    half = (d + 1) // 2
    codes = q.codes
    if d % 2:
        codes = np.concatenate([codes, np.zeros((n, 1), dtype=np.uint8)], axis=1)
    nibbles = (codes[:, 0::2] | (codes[:, 1::2] << 4)).astype(np.uint8)

    aux_np = _AUX_NP[q.aux_precision]
    scale_bytes = np.ascontiguousarray(q.scales.astype(aux_np)).view(np.uint8).reshape(n, -1)
    bias_bytes = np.ascontiguousarray(q.biases.astype(aux_np)).view(np.uint8).reshape(n, -1)
    rows_bytes = np.concatenate([nibbles.reshape(n, half), scale_bytes, bias_bytes], axis=1)
    return PackedTable4(n, d, q.aux_precision, rows_bytes.reshape(-1).copy())


def _decode_rows(p: PackedTable4, row_idx: np.ndarray):
    """(codes, scales, biases) for the given row indices; scales/biases as float32."""
    half = (p.dim + 1) // 2
    ab = aux_bytes(p.aux_precision)
    rows_bytes = p.buffer.reshape(p.rows, p.row_stride)[row_idx]
    nibbles = rows_bytes[:, :half]
    codes = np.empty((row_idx.size, 2 * half), dtype=np.uint8)
    codes[:, 0::2] = nibbles & 0x0F
    codes[:, 1::2] = nibbles >> 4
    codes = codes[:, : p.dim]
    aux_np = _AUX_NP[p.aux_precision]
    scales = np.ascontiguousarray(rows_bytes[:, half : half + ab]).view(aux_np).ravel()
    biases = np.ascontiguousarray(rows_bytes[:, half + ab : half + 2 * ab]).view(aux_np).ravel()
    return codes, scales.astype(np.float32), biases.astype(np.float32)


def unpack_row_codes(p: PackedTable4, i: int):
    """(codes, scale, bias) of row i, with scale/bias at the stored width."""
    if not 0 <= i < p.rows:
        raise IndexError(f"row index {i} out of range for {p.rows} rows")
    half = (p.dim + 1) // 2
    ab = aux_bytes(p.aux_precision)
    row = p.buffer.reshape(p.rows, p.row_stride)[i]
    codes = np.empty(2 * half, dtype=np.uint8)
    codes[0::2] = row[:half] & 0x0F
    codes[1::2] = row[:half] >> 4
    aux_np = _AUX_NP[p.aux_precision]
    scale = np.ascontiguousarray(row[half : half + ab]).view(aux_np)[0]
    bias = np.ascontiguousarray(row[half + ab : half + 2 * ab]).view(aux_np)[0]
    return codes[: p.dim], scale, bias


def unpack_row(p: PackedTable4, i: int) -> np.ndarray:
    """Dequantized row i: scale*code + bias in float32."""
    codes, scale, bias = unpack_row_codes(p, i)
    return np.float32(scale) * codes.astype(np.float32) + np.float32(bias)


@dataclass
class PooledQuery:
    """A batch of pooled lookups: indices, segmented by lengths."""

    indices: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).ravel()
        self.lengths = np.asarray(self.lengths, dtype=np.int64).ravel()
        if np.any(self.lengths < 0):
            raise ValueError("lengths must be non-negative")
        if int(self.lengths.sum()) != self.indices.size:
            raise ValueError(
                f"lengths sum to {int(self.lengths.sum())} but there are {self.indices.size} indices"
            )

    @property
    def batch(self) -> int:
        return self.lengths.size


def _check_indices(indices: np.ndarray, rows: int) -> None:
    bad = np.nonzero((indices < 0) | (indices >= rows))[0]
    if bad.size:
        pos = int(bad[0])
        raise IndexError(
            f"query index {int(indices[pos])} at position {pos} out of range for {rows} rows"
        )


def _pooled_sum(deq_rows: np.ndarray, query: PooledQuery, dim: int) -> np.ndarray:
    """Sum dequantized rows per segment, strictly in query order, fp32 accumulator."""
    out = np.zeros((query.batch, dim), dtype=np.float32)
    pos = 0
    for s, length in enumerate(query.lengths):
        acc = out[s]
        for _ in range(length):
            acc += deq_rows[pos]
            pos += 1
    return out


def sparse_lengths_sum_4bit(p: PackedTable4, query: PooledQuery) -> np.ndarray:
    """Pooled lookup over packed rows: output[s] = sum of dequantized rows of segment s.

    Accumulation is float32 in strict query order (empty segments produce zero
    rows), so results are bit-reproducible and directly comparable with the
    scalar reference path.
    """
    _check_indices(query.indices, p.rows)
    codes, scales, biases = _decode_rows(p, query.indices)
    deq = scales[:, None] * codes.astype(np.float32) + biases[:, None]
    return _pooled_sum(deq, query, p.dim)


def _ref_row_value(source, i: int, j: int) -> np.float32:
    """Element (i, j) dequantized with scalar arithmetic only."""
    if isinstance(source, EmbeddingTable):
        return source.values[i, j]
    if isinstance(source, UniformQuantTable):
        scale = np.float32(source.scales[i])
        bias = np.float32(source.biases[i])
        return np.float32(scale * np.float32(source.codes[i, j]) + bias)
    # PackedTable4: decode the nibble straight from the byte buffer.
    half = (source.dim + 1) // 2
    ab = aux_bytes(source.aux_precision)
    base = i * source.row_stride
    byte = int(source.buffer[base + j // 2])
    code = (byte & 0x0F) if j % 2 == 0 else (byte >> 4)
    aux_np = _AUX_NP[source.aux_precision]
    scale_bytes = source.buffer[base + half : base + half + ab].tobytes()
    bias_bytes = source.buffer[base + half + ab : base + half + 2 * ab].tobytes()
    scale = np.float32(np.frombuffer(scale_bytes, aux_np)[0])
    bias = np.float32(np.frombuffer(bias_bytes, aux_np)[0])
    return np.float32(scale * np.float32(code) + bias)


def sparse_lengths_sum_ref(source, query: PooledQuery) -> np.ndarray:
    """Scalar reference for the pooled lookup, for fp32 / int8 / packed-int4 sources.

    Element-by-element float32 accumulation in query order; deliberately
    written as plain scalar loops (including nibble decoding) so the
    vectorized kernel has an independent path to be checked against.
    """
    if not isinstance(source, (EmbeddingTable, UniformQuantTable, PackedTable4)):
        raise TypeError(f"unsupported source type {type(source).__name__}")
    _check_indices(query.indices, source.rows)
    dim = source.dim
    out = np.zeros((query.batch, dim), dtype=np.float32)
    pos = 0
    for s in range(query.batch):
        for _ in range(int(query.lengths[s])):
            i = int(query.indices[pos])
            for j in range(dim):
                out[s, j] = np.float32(out[s, j] + _ref_row_value(source, i, j))
            pos += 1
    return out
