"""Seeded experiment drivers: loss-vs-dimension sweeps, per-row timing sweeps,
and before/after histogram dumps. Each returns plot-ready rows; the CLI turns
them into CSV and (optionally) rendered figures.

Data is regenerated per (seed, dimension, repeat) so every dimension is an
independent draw; rerunning with the same flags reproduces every non-timing
column byte for byte.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .clipping import WorkCounters
from .histclip import build_histogram
from .methods import CODEBOOK_METHODS, UNIFORM_METHODS, quantize_table, row_clip_range
from .metrics import table_normalized_l2
from .rng import RngSpec, derive_seed, sample_table
from .table import EmbeddingTable
from .uniform import quantize_uniform, dequantize_uniform
from .codebook import quantize_row_kmeans
from .clipping import clip_range_table

__all__ = [
    "SWEEP_DIM_COLUMNS",
    "SWEEP_TIME_COLUMNS",
    "HIST_DUMP_COLUMNS",
    "sweep_dim",
    "sweep_time",
    "hist_dump",
]

SWEEP_DIM_COLUMNS = ("method", "d", "mean_normalized_l2")
SWEEP_TIME_COLUMNS = ("method", "d", "ms_per_row", "log10_ms", "loss_evals", "bin_visits")
HIST_DUMP_COLUMNS = ("method", "bin_center", "count")


def sweep_dim(dims, methods, rows: int = 10, dist: str = "gaussian", seed: int = 0,
              nbits: int = 4, aux_precision: str = "fp32", b: int = 200, r: float = 0.16,
              k: int | None = None, repeats: int = 1):
    """Mean flattened loss per (method, d) over freshly drawn tables.

    Returns rows ordered by (method in given order, d ascending).
    """
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ValueError("dims must be positive")
    tables = {}
    for d in sorted(set(dims)):
        for rep in range(repeats):
            spec = RngSpec(dist, 0.0, 1.0, derive_seed(seed, d, rep))
            tables[d, rep] = sample_table(spec, rows, d)
    out = []
    for method in methods:
        for d in sorted(set(dims)):
            losses = []
            for rep in range(repeats):
                table = tables[d, rep]
                quant = quantize_table(table, method, nbits, aux_precision, b, r,
                                       k if method == "kmeans-cls" else None, seed)
                losses.append(table_normalized_l2(table, quant.dequantize(), "flattened"))
            out.append((method, d, float(np.mean(losses))))
    return out


def sweep_dim_csv(records) -> list[list[str]]:
    return [[m, str(d), format(loss, ".6g")] for m, d, loss in records]


def sweep_time(dims, methods, rows: int = 10, dist: str = "gaussian", seed: int = 0,
               nbits: int = 4, aux_precision: str = "fp32", b: int = 200, r: float = 0.16,
               repeats: int = 3):
    """Mean per-row quantization time and instrumented work per (method, d).

    Work counters (objective evaluations, histogram bin visits) are exact and
    deterministic; the ms columns are wall-clock and vary run to run.
    """
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ValueError("dims must be positive")
    out = []
    for method in methods:
        if method in CODEBOOK_METHODS and method != "kmeans":
            raise ValueError(f"sweep-time supports row-level methods, not {method}")
        for d in sorted(set(dims)):
            spec = RngSpec(dist, 0.0, 1.0, derive_seed(seed, d))
            table = sample_table(spec, rows, d)
            counters = WorkCounters()
            _quantize_rows(table, method, nbits, aux_precision, b, r, counters)
            elapsed = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                _quantize_rows(table, method, nbits, aux_precision, b, r, None)
                elapsed.append(time.perf_counter() - t0)
            ms_per_row = float(np.mean(elapsed)) * 1e3 / rows
            out.append((method, d, ms_per_row, math.log10(max(ms_per_row, 1e-12)),
                        counters.loss_evals, counters.bin_visits))
    return out


def _quantize_rows(table: EmbeddingTable, method: str, nbits: int, aux_precision: str,
                   b: int, r: float, counters: WorkCounters | None):
    if method == "kmeans":
        for i in range(table.rows):
            quantize_row_kmeans(table.row(i), aux_precision)
        return
    if method == "table":
        rng = clip_range_table(table)
        for i in range(table.rows):
            quantize_uniform(table.row(i), rng, nbits, aux_precision)
        return
    for i in range(table.rows):
        rng = row_clip_range(method, table.row(i), nbits, b, r, counters)
        quantize_uniform(table.row(i), rng, nbits, aux_precision)


def sweep_time_csv(records) -> list[list[str]]:
    return [[m, str(d), format(ms, ".6g"), format(lg, ".4f"), str(le), str(bv)]
            for m, d, ms, lg, le, bv in records]


def hist_dump(table: EmbeddingTable, row_index: int, methods, bins: int = 40,
              nbits: int = 4, b: int = 200, r: float = 0.16):
    """Histograms of one row before and after 4-bit quantization per method.

    Emits the original row's histogram under method name "original", then one
    histogram of the reconstructed values per requested method. Supported
    methods: the uniform strategies (including "table", which uses the whole
    table's range) and "kmeans".
    """
    row = table.row(row_index)
    out = []

    def emit(name: str, values):
        hist = build_histogram(values, bins)
        for center, count in zip(hist.centers(), hist.counts):
            out.append((name, float(center), int(count)))

    emit("original", row)
    for method in methods:
        if method == "kmeans":
            recon = quantize_row_kmeans(row).dequantize()
        elif method == "table":
            recon = dequantize_uniform(quantize_uniform(row, clip_range_table(table), nbits))
        elif method in UNIFORM_METHODS:
            rng = row_clip_range(method, row, nbits, b, r)
            recon = dequantize_uniform(quantize_uniform(row, rng, nbits))
        else:
            raise ValueError(f"hist-dump supports row-level methods, not {method!r}")
        emit(method, recon)
    return out


def hist_dump_csv(records) -> list[list[str]]:
    return [[m, format(c, ".6g"), str(n)] for m, c, n in records]
