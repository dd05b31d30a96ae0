"""Row-wise post-training quantization of embedding tables.

4-bit (and 8-bit baseline) uniform quantization with eight clipping-threshold
strategies, 16-value codebook quantization (row-wise and two-tier), a packed
nibble storage format with a pooled-lookup kernel, loss/size metrics, binary
table containers, and seeded sweep drivers.
"""

from .table import ClipRange, EmbeddingTable, quant_mse
from .rng import RngSpec, derive_seed, sample_table
from .uniform import (
    UniformQuantTable,
    UniformRowQuant,
    dequantize_uniform,
    quantize_uniform,
)
from .clipping import (
    WorkCounters,
    clip_range_aciq,
    clip_range_asym,
    clip_range_greedy,
    clip_range_gss,
    clip_range_sym,
    clip_range_table,
)
from .histclip import (
    Histogram,
    bin_l2_norm,
    build_histogram,
    clip_range_hist_apprx,
    clip_range_hist_brute,
    hist_apprx_search,
    hist_brute_search,
)
from .codebook import (
    CodebookQuantTable,
    CodebookRowQuant,
    TwoTierQuantTable,
    cluster_rows,
    kmeans_1d,
    quantize_row_kmeans,
    quantize_table_kmeans,
    quantize_table_kmeans_cls,
)
from .metrics import QuantReport, normalized_l2, quantized_size_bytes, table_normalized_l2
from .packed import (
    PackedTable4,
    PooledQuery,
    pack_table4,
    sparse_lengths_sum_4bit,
    sparse_lengths_sum_ref,
    unpack_row,
)
from .bench import BenchReport, bench_sls, bytes_per_pooled_row
from .fileio import DataError, read_embq, read_embt, write_embq, write_embt
from .methods import ALL_METHODS, quantize_table, row_clip_range

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "BenchReport",
    "ClipRange",
    "CodebookQuantTable",
    "CodebookRowQuant",
    "DataError",
    "EmbeddingTable",
    "Histogram",
    "PackedTable4",
    "PooledQuery",
    "QuantReport",
    "RngSpec",
    "TwoTierQuantTable",
    "UniformQuantTable",
    "UniformRowQuant",
    "WorkCounters",
    "bench_sls",
    "bin_l2_norm",
    "build_histogram",
    "bytes_per_pooled_row",
    "clip_range_aciq",
    "clip_range_asym",
    "clip_range_greedy",
    "clip_range_gss",
    "clip_range_hist_apprx",
    "clip_range_hist_brute",
    "clip_range_sym",
    "clip_range_table",
    "cluster_rows",
    "dequantize_uniform",
    "derive_seed",
    "hist_apprx_search",
    "hist_brute_search",
    "kmeans_1d",
    "normalized_l2",
    "pack_table4",
    "quant_mse",
    "quantize_row_kmeans",
    "quantize_table",
    "quantize_table_kmeans",
    "quantize_table_kmeans_cls",
    "quantize_uniform",
    "quantized_size_bytes",
    "read_embq",
    "read_embt",
    "row_clip_range",
    "sample_table",
    "sparse_lengths_sum_4bit",
    "sparse_lengths_sum_ref",
    "table_normalized_l2",
    "unpack_row",
    "write_embq",
    "write_embt",
]
