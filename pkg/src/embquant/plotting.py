"""Render sweep and histogram records to figure files alongside their CSVs."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["plot_sweep_dim", "plot_sweep_time", "plot_hist_dump"]


def _by_method(records):
    grouped: dict[str, list] = {}
    for rec in records:
        grouped.setdefault(rec[0], []).append(rec[1:])
    return grouped


def plot_sweep_dim(records, path) -> None:
    """Loss vs embedding dimension, one line per method, log2 x-axis."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, points in _by_method(records).items():
        dims = [p[0] for p in points]
        losses = [p[1] for p in points]
        ax.plot(dims, losses, marker="o", markersize=3.5, linewidth=1.2, label=method)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("embedding dimension")
    ax.set_ylabel("normalized $\\ell_2$ loss")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep_time(records, path) -> None:
    """Per-row quantization time (log10 ms) vs embedding dimension."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, points in _by_method(records).items():
        dims = [p[0] for p in points]
        log_ms = [p[2] for p in points]
        ax.plot(dims, log_ms, marker="o", markersize=3.5, linewidth=1.2, label=method)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("embedding dimension")
    ax.set_ylabel("log10 ms per row")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_hist_dump(records, path) -> None:
    """One subplot per method: original value histogram behind the reconstruction's."""
    grouped = _by_method(records)
    original = grouped.pop("original", [])
    methods = list(grouped)
    ncols = 2
    nrows = max(1, math.ceil(len(methods) / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(8, 2.6 * nrows), squeeze=False)
    for ax in axes.ravel()[len(methods):]:
        ax.set_visible(False)
    for ax, method in zip(axes.ravel(), methods):
        if original:
            centers = [p[0] for p in original]
            counts = [p[1] for p in original]
            width = (max(centers) - min(centers)) / max(len(centers) - 1, 1)
            ax.bar(centers, counts, width=width, alpha=0.35, label="original", color="grey")
        centers = [p[0] for p in grouped[method]]
        counts = [p[1] for p in grouped[method]]
        width = (max(centers) - min(centers)) / max(len(centers) - 1, 1) if len(centers) > 1 else 0.1
        ax.bar(centers, counts, width=max(width, 1e-6), alpha=0.8, label=method)
        ax.set_title(method, fontsize=9)
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
