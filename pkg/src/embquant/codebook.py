"""Non-uniform 4-bit quantization via 16-value codebooks.

Row-wise: one scalar k-means codebook per row, seeded from the uniform grid of
the row's full data range. Two-tier: rows are first clustered into K blocks
(vector k-means with k-means++ seeding), then each block learns one pooled
scalar codebook shared by all its rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import uniform_open01
from .table import EmbeddingTable
from .uniform import aux_dtype

__all__ = [
    "CodebookRowQuant",
    "CodebookQuantTable",
    "TwoTierQuantTable",
    "kmeans_1d",
    "quantize_row_kmeans",
    "quantize_table_kmeans",
    "cluster_rows",
    "quantize_table_kmeans_cls",
]

CODEBOOK_SIZE = 16
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-7


def kmeans_1d(values, k: int = CODEBOOK_SIZE, init=None, max_iter: int = DEFAULT_MAX_ITER,
              tol: float = DEFAULT_TOL, on_iteration=None):
    """Scalar Lloyd iterations; returns (centers, assignments).

    Each value joins its nearest center (ties to the lower index); centers move
    to their cluster means; empty clusters keep their previous center. Stops
    after max_iter rounds or when no center moves more than tol * (value
    spread). The best assignment ever scored is returned, so the result's SSE
    never exceeds the SSE of assigning directly to ``init``.

    Inputs with at most k distinct values short-circuit to an exact codebook
    (distinct values, padded with the largest one) with zero SSE.

    ``on_iteration(iteration, sse)`` is invoked with the SSE of each scored
    assignment, a non-increasing sequence.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("values is empty")
    uniq = np.unique(values)
    if uniq.size <= k:
        centers = np.full(k, uniq[-1], dtype=np.float64)
        centers[: uniq.size] = uniq
        assignments = np.searchsorted(uniq, values)
        if on_iteration is not None:
            on_iteration(0, 0.0)
        return centers, assignments

    init = np.asarray(init, dtype=np.float64)
    if init.shape != (k,):
        raise ValueError(f"init must have {k} entries, got shape {init.shape}")
    centers = init.copy()
    spread = float(uniq[-1] - uniq[0])

    best_sse = np.inf
    best = None
    iteration = 0
    for iteration in range(max_iter):
        assignments = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
        sse = float(np.sum((values - centers[assignments]) ** 2))
        if on_iteration is not None:
            on_iteration(iteration, sse)
        if sse < best_sse:
            best_sse = sse
            best = (centers.copy(), assignments)
        new_centers = centers.copy()
        for j in range(k):
            members = values[assignments == j]
            if members.size:
                new_centers[j] = members.mean()
        movement = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if movement < tol * spread:
            break
    # Score the final center update.
    assignments = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
    sse = float(np.sum((values - centers[assignments]) ** 2))
    if on_iteration is not None:
        on_iteration(iteration + 1, sse)
    if sse < best_sse:
        best = (centers, assignments)
    return best


def _uniform_grid(values: np.ndarray) -> np.ndarray:
    """The 16 reconstruction points of the full data range (the seed codebook)."""
    lo, hi = float(np.min(values)), float(np.max(values))
    scale = (hi - lo) / (CODEBOOK_SIZE - 1)
    return lo + scale * np.arange(CODEBOOK_SIZE, dtype=np.float64)


def _sorted_codebook(centers: np.ndarray, assignments: np.ndarray, dtype):
    order = np.argsort(centers, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return centers[order].astype(dtype), rank[assignments].astype(np.uint8)


@dataclass
class CodebookRowQuant:
    """One row quantized against its own 16-value codebook (sorted ascending)."""

    codebook: np.ndarray
    indices: np.ndarray

    def dequantize(self) -> np.ndarray:
        return self.codebook.astype(np.float32)[self.indices]


def quantize_row_kmeans(x, aux_precision: str = "fp32", max_iter: int = DEFAULT_MAX_ITER,
                        tol: float = DEFAULT_TOL) -> CodebookRowQuant:
    """Row-wise codebook quantization, k-means seeded at the uniform grid.

    Because the seed codebook is exactly the 16 reconstruction points of the
    row's full data range and Lloyd never accepts a worse assignment, the
    resulting MSE never exceeds that of plain asymmetric uniform quantization.
    """
    dtype = aux_dtype(aux_precision)
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("input vector is empty")
    centers, assignments = kmeans_1d(x, CODEBOOK_SIZE, _uniform_grid(x), max_iter, tol)
    codebook, indices = _sorted_codebook(centers, assignments, dtype)
    return CodebookRowQuant(codebook, indices)


@dataclass
class CodebookQuantTable:
    """Per-row codebooks for a whole table."""

    codebooks: np.ndarray  # (N, 16) at aux width
    indices: np.ndarray  # (N, d) uint8
    aux_precision: str = "fp32"

    @property
    def rows(self) -> int:
        return self.indices.shape[0]

    @property
    def dim(self) -> int:
        return self.indices.shape[1]

    def row(self, i: int) -> CodebookRowQuant:
        return CodebookRowQuant(self.codebooks[i], self.indices[i])

    def dequantize(self) -> np.ndarray:
        out = self.codebooks.astype(np.float32)
        return np.take_along_axis(out, self.indices.astype(np.int64), axis=1)


def quantize_table_kmeans(table: EmbeddingTable, aux_precision: str = "fp32") -> CodebookQuantTable:
    dtype = aux_dtype(aux_precision)
    codebooks = np.empty((table.rows, CODEBOOK_SIZE), dtype=dtype)
    indices = np.empty((table.rows, table.dim), dtype=np.uint8)
    for i in range(table.rows):
        rq = quantize_row_kmeans(table.row(i), aux_precision)
        codebooks[i] = rq.codebook
        indices[i] = rq.indices
    return CodebookQuantTable(codebooks, indices, aux_precision)


def cluster_rows(table: EmbeddingTable, k: int, seed: int, max_iter: int = DEFAULT_MAX_ITER,
                 tol: float = DEFAULT_TOL) -> np.ndarray:
    """Group rows into k blocks with Euclidean k-means (k-means++ seeding).

    Deterministic given seed: the seeding draws come from the same
    counter-based stream as the synthetic-table generator, assignment ties go
    to the lower center index, and empty clusters keep their stale centers.
    """
    if not 1 <= k <= table.rows:
        raise ValueError(f"k must be in [1, {table.rows}], got {k}")
    rows = table.values.astype(np.float64)
    n = table.rows
    draws = uniform_open01(seed, k)

    centers = np.empty((k, table.dim), dtype=np.float64)
    centers[0] = rows[int(draws[0] * n) % n]
    d2 = np.sum((rows - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = j % n  # all remaining rows coincide with a center
        else:
            cuts = np.cumsum(d2)
            idx = int(np.searchsorted(cuts, draws[j] * total, side="right"))
            idx = min(idx, n - 1)
        centers[j] = rows[idx]
        d2 = np.minimum(d2, np.sum((rows - centers[j]) ** 2, axis=1))

    spread = float(np.max(rows) - np.min(rows))
    assignments = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dists = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assignments = np.argmin(dists, axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = rows[assignments == j]
            if members.size:
                new_centers[j] = members.mean(axis=0)
        movement = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if movement < tol * max(spread, 1.0):
            break
    dists = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(dists, axis=1)


@dataclass
class TwoTierQuantTable:
    """Block-shared codebooks: tier-1 row clusters, one 16-value codebook per block."""

    k: int
    assignments: np.ndarray  # (N,) block index per row
    block_codebooks: np.ndarray  # (K, 16) at aux width
    indices: np.ndarray  # (N, d) uint8
    aux_precision: str = "fp32"

    @property
    def rows(self) -> int:
        return self.indices.shape[0]

    @property
    def dim(self) -> int:
        return self.indices.shape[1]

    def dequantize(self) -> np.ndarray:
        books = self.block_codebooks.astype(np.float32)[self.assignments]
        return np.take_along_axis(books, self.indices.astype(np.int64), axis=1)


def quantize_table_kmeans_cls(table: EmbeddingTable, k: int, seed: int,
                              aux_precision: str = "fp32") -> TwoTierQuantTable:
    """Two-tier quantization: cluster rows into k blocks, then one pooled codebook per block.

    k must be a power of two so the per-row assignment costs a whole number of
    bits (log2 k / 8 bytes) in the storage accounting.
    """
    if k < 1 or (k & (k - 1)) != 0:
        raise ValueError(f"k must be a power of two, got {k}")
    if k > table.rows:
        raise ValueError(f"k ({k}) exceeds row count ({table.rows})")
    dtype = aux_dtype(aux_precision)
    assignments = cluster_rows(table, k, seed)
    values = table.values.astype(np.float64)

    block_codebooks = np.zeros((k, CODEBOOK_SIZE), dtype=dtype)
    indices = np.empty((table.rows, table.dim), dtype=np.uint8)
    for block in range(k):
        member_rows = np.nonzero(assignments == block)[0]
        if member_rows.size == 0:
            continue  # stale tier-1 center with no rows; codebook never referenced
        pooled = values[member_rows].ravel()
        centers, assign = kmeans_1d(pooled, CODEBOOK_SIZE, _uniform_grid(pooled))
        codebook, idx = _sorted_codebook(centers, assign, dtype)
        block_codebooks[block] = codebook
        indices[member_rows] = idx.reshape(member_rows.size, table.dim)
    return TwoTierQuantTable(k, assignments, block_codebooks, indices, aux_precision)
