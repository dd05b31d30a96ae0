"""Method registry: one entry point mapping strategy names to quantizers.

Uniform strategies differ only in how the per-row clip range is chosen;
codebook strategies replace the affine codec entirely. Everything here is a
thin dispatcher over the strategy modules so the CLI, the sweeps, and the
tests all quantize through the same path.
"""

from __future__ import annotations

import numpy as np

from .clipping import (
    WorkCounters,
    clip_range_aciq,
    clip_range_asym,
    clip_range_greedy,
    clip_range_gss,
    clip_range_sym,
    clip_range_table,
)
from .codebook import quantize_table_kmeans, quantize_table_kmeans_cls
from .histclip import clip_range_hist_apprx, clip_range_hist_brute
from .metrics import QuantReport, build_report
from .table import ClipRange, EmbeddingTable
from .uniform import quantize_table_uniform

__all__ = [
    "UNIFORM_METHODS",
    "CODEBOOK_METHODS",
    "ALL_METHODS",
    "row_clip_range",
    "quantize_table",
    "sizing_scheme",
    "report_for",
]

UNIFORM_METHODS = ("sym", "asym", "table", "gss", "aciq", "greedy", "hist-apprx", "hist-brute")
CODEBOOK_METHODS = ("kmeans", "kmeans-cls")
ALL_METHODS = UNIFORM_METHODS + CODEBOOK_METHODS


def row_clip_range(method: str, x, nbits: int = 4, b: int = 200, r: float = 0.16,
                   counters: WorkCounters | None = None) -> ClipRange:
    """Clip range of one row under a (row-wise) uniform strategy."""
    if method == "sym":
        return clip_range_sym(x)
    if method == "asym":
        return clip_range_asym(x)
    if method == "gss":
        return clip_range_gss(x, nbits, counters=counters)
    if method == "aciq":
        return clip_range_aciq(x)
    if method == "greedy":
        return clip_range_greedy(x, nbits, b, r, counters=counters)
    if method == "hist-apprx":
        return clip_range_hist_apprx(x, b, counters=counters)
    if method == "hist-brute":
        return clip_range_hist_brute(x, b, counters=counters)
    raise ValueError(f"{method!r} is not a row-wise uniform strategy")


def quantize_table(table: EmbeddingTable, method: str, nbits: int = 4,
                   aux_precision: str = "fp32", b: int = 200, r: float = 0.16,
                   k: int | None = None, seed: int = 0,
                   counters: WorkCounters | None = None):
    """Quantize a table with any registered method.

    Codebook methods are 4-bit only; ``k`` applies only to kmeans-cls (and is
    required there).
    """
    if method not in ALL_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {ALL_METHODS}")
    if method in CODEBOOK_METHODS and nbits != 4:
        raise ValueError(f"{method} is 4-bit only, got nbits={nbits}")
    if k is not None and method != "kmeans-cls":
        raise ValueError(f"k applies only to kmeans-cls, not {method}")
    if method == "kmeans":
        return quantize_table_kmeans(table, aux_precision)
    if method == "kmeans-cls":
        if k is None:
            raise ValueError("kmeans-cls requires k")
        return quantize_table_kmeans_cls(table, k, seed, aux_precision)
    if method == "table":
        ranges: ClipRange | list[ClipRange] = clip_range_table(table)
    else:
        ranges = [row_clip_range(method, table.row(i), nbits, b, r, counters)
                  for i in range(table.rows)]
    return quantize_table_uniform(table, ranges, nbits, aux_precision, scheme=method)


def sizing_scheme(method: str) -> str:
    """Map a method name onto its storage-accounting scheme."""
    if method in UNIFORM_METHODS:
        return "uniform"
    if method == "kmeans":
        return "kmeans"
    if method == "kmeans-cls":
        return "kmeans-cls"
    raise ValueError(f"unknown method {method!r}")


def report_for(table: EmbeddingTable, quant, method: str, nbits: int,
               aux_precision: str, k: int | None = None) -> QuantReport:
    """Loss/size report for a quantized table against its source."""
    recon = quant.dequantize()
    return build_report(method, table, recon, sizing_scheme(method), nbits, aux_precision, k)


def reconstruct(quant) -> np.ndarray:
    """(N, d) float32 reconstruction of any quantized-table object."""
    return quant.dequantize()
