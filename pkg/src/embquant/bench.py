"""Throughput harness for the pooled-lookup kernel across FP32 / INT8 / INT4 rows.

Measured numbers are reported, never asserted: they are hardware-specific.
The analytic part (bytes touched per pooled row) is exact and is what the
size-oriented tests check. Benchmarks run single-threaded; the cache-flushed
mode write-sweeps a buffer larger than typical last-level caches between
repeats to approximate cold-cache lookups.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .clipping import clip_range_asym
from .packed import PackedTable4, PooledQuery, pack_table4, sparse_lengths_sum_4bit
from .rng import RngSpec, sample_table, splitmix64
from .table import EmbeddingTable
from .uniform import UniformQuantTable, aux_bytes, quantize_table_uniform

__all__ = ["BenchReport", "bytes_per_pooled_row", "bench_sls", "make_query"]

DATA_TYPES = ("fp32", "int8", "int4")
MODES = ("cache_resident", "cache_flushed")

_FLUSH_BYTES = 64 * 1024 * 1024


def bytes_per_pooled_row(data_type: str, dim: int, aux_precision: str = "fp32") -> int:
    """Bytes read to dequantize one row under this package's fused layouts."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if data_type == "fp32":
        return 4 * dim
    ab = aux_bytes(aux_precision)
    if data_type == "int8":
        return dim + 2 * ab
    if data_type == "int4":
        return (dim + 1) // 2 + 2 * ab
    raise ValueError(f"data_type must be one of {DATA_TYPES}, got {data_type!r}")


def make_query(rows: int, batch: int, pooling: int, seed: int) -> PooledQuery:
    """Deterministic query: batch segments of `pooling` indices each."""
    total = batch * pooling
    idx = (splitmix64(seed, max(total, 1)) % np.uint64(rows)).astype(np.int64)[:total]
    return PooledQuery(idx, np.full(batch, pooling, dtype=np.int64))


def _pooled_sum_fp32(values: np.ndarray, query: PooledQuery) -> np.ndarray:
    out = np.zeros((query.batch, values.shape[1]), dtype=np.float32)
    pos = 0
    for s, length in enumerate(query.lengths):
        acc = out[s]
        for _ in range(length):
            acc += values[query.indices[pos]]
            pos += 1
    return out


def _pooled_sum_int8(q: UniformQuantTable, query: PooledQuery) -> np.ndarray:
    scales = q.scales.astype(np.float32)
    biases = q.biases.astype(np.float32)
    out = np.zeros((query.batch, q.dim), dtype=np.float32)
    pos = 0
    for s, length in enumerate(query.lengths):
        acc = out[s]
        for _ in range(length):
            i = query.indices[pos]
            acc += scales[i] * q.codes[i].astype(np.float32) + biases[i]
            pos += 1
    return out


def _flush_cache(buf: np.ndarray) -> None:
    buf += 1  # write sweep evicts cached table lines


@dataclass
class BenchReport:
    data_type: str
    dim: int
    rows: int
    batch: int
    pooling: int
    mode: str
    repeats: int
    giga_sums_per_sec: float
    bytes_per_row: int
    bytes_read_per_query: int

    def csv_row(self) -> list[str]:
        return [
            self.data_type,
            str(self.dim),
            str(self.rows),
            str(self.batch),
            str(self.pooling),
            self.mode,
            format(self.giga_sums_per_sec, ".6g"),
            str(self.bytes_per_row),
            str(self.bytes_read_per_query),
        ]


def bench_sls(data_type: str, dim: int, rows: int, batch: int = 64, pooling: int = 16,
              mode: str = "cache_resident", repeats: int = 5, seed: int = 0,
              aux_precision: str = "fp32") -> BenchReport:
    """Median-of-repeats pooled-lookup throughput in billion element-sums per second."""
    if data_type not in DATA_TYPES:
        raise ValueError(f"data_type must be one of {DATA_TYPES}, got {data_type!r}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    table = sample_table(RngSpec("gaussian", 0.0, 1.0, seed), rows, dim)
    query = make_query(rows, batch, pooling, seed + 1)

    if data_type == "fp32":
        run = lambda: _pooled_sum_fp32(table.values, query)
    elif data_type == "int8":
        ranges = [clip_range_asym(table.row(i)) for i in range(rows)]
        q8 = quantize_table_uniform(table, ranges, 8, aux_precision, scheme="asym")
        run = lambda: _pooled_sum_int8(q8, query)
    else:
        ranges = [clip_range_asym(table.row(i)) for i in range(rows)]
        q4 = quantize_table_uniform(table, ranges, 4, aux_precision, scheme="asym")
        packed: PackedTable4 = pack_table4(q4)
        run = lambda: sparse_lengths_sum_4bit(packed, query)

    flush_buf = np.zeros(_FLUSH_BYTES, dtype=np.uint8) if mode == "cache_flushed" else None
    run()  # warm up code paths
    times = []
    for _ in range(repeats):
        if flush_buf is not None:
            _flush_cache(flush_buf)
        t0 = time.perf_counter()
        run()
        times.append(time.perf_counter() - t0)
    median = float(np.median(times))
    sums = batch * pooling * dim
    per_row = bytes_per_pooled_row(data_type, dim, aux_precision)
    return BenchReport(
        data_type, dim, rows, batch, pooling, mode, repeats,
        sums / median / 1e9 if median > 0 else float("inf"),
        per_row,
        per_row * batch * pooling,
    )
