"""Deterministic random generation for synthetic tables and seeded experiments.

The generator is a counter-based splitmix64: output i is a fixed 64-bit mix of
``seed + (i+1) * GOLDEN``. The same (spec, N, d) therefore always produces the
same byte-for-byte table, independent of platform, numpy version, or how many
values were drawn before. Gaussian variates use the Box-Muller transform,
laplacian ones the inverse CDF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .table import EmbeddingTable

__all__ = ["RngSpec", "sample_table", "splitmix64", "uniform_open01", "derive_seed"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

DISTRIBUTIONS = ("gaussian", "laplacian")


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First n outputs of the splitmix64 stream for a 64-bit seed."""
    counters = np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
    with np.errstate(over="ignore"):
        return _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + counters)


def uniform_open01(seed: int, n: int) -> np.ndarray:
    """n float64 uniforms strictly inside (0, 1)."""
    bits = splitmix64(seed, n)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def derive_seed(seed: int, *salts: int) -> int:
    """Fold integer salts into a base seed; used to give each (d, repeat) its own stream."""
    state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for salt in salts:
            state = _mix(state + _GOLDEN + np.uint64(salt & 0xFFFFFFFFFFFFFFFF) * _MIX1)
    return int(state)


@dataclass(frozen=True)
class RngSpec:
    """Distribution + seed fully determining a sample stream.

    ``loc``/``scale`` are mean/stddev for gaussian and location/scale for
    laplacian.
    """

    distribution: str
    loc: float
    scale: float
    seed: int

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"unknown distribution {self.distribution!r}; expected one of {DISTRIBUTIONS}"
            )
        if not (np.isfinite(self.loc) and np.isfinite(self.scale)):
            raise ValueError(f"distribution parameters must be finite, got loc={self.loc} scale={self.scale}")
        if self.scale < 0:
            raise ValueError(f"scale must be non-negative, got {self.scale}")


def _gaussian_stream(seed: int, n: int, loc: float, scale: float) -> np.ndarray:
    pairs = (n + 1) // 2
    u = uniform_open01(seed, 2 * pairs)
    radius = np.sqrt(-2.0 * np.log(u[0::2]))
    theta = 2.0 * np.pi * u[1::2]
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    return loc + scale * out[:n]


def _laplacian_stream(seed: int, n: int, loc: float, scale: float) -> np.ndarray:
    u = uniform_open01(seed, n) - 0.5
    return loc - scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_table(spec: RngSpec, rows: int, dim: int) -> EmbeddingTable:
    """Deterministic rows x dim table drawn from the spec's distribution."""
    if rows < 1 or dim < 1:
        raise ValueError(f"rows and dim must be >= 1, got {rows}x{dim}")
    n = rows * dim
    if spec.distribution == "gaussian":
        flat = _gaussian_stream(spec.seed, n, spec.loc, spec.scale)
    else:
        flat = _laplacian_stream(spec.seed, n, spec.loc, spec.scale)
    return EmbeddingTable(flat.astype(np.float32).reshape(rows, dim))
