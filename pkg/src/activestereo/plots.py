"""Figure rendering for reports; everything lands in files, never a window."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import RunMetrics


def _series_plot(
    path: str | Path,
    runs: Sequence[tuple[str, RunMetrics]],
    value_of: Callable,
    ylabel: str,
    title: str,
) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, metrics in runs:
        xs = [rec.aim_index for rec in metrics.records]
        ys = [value_of(rec) for rec in metrics.records]
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    ax.set_xlabel("aims fired")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(runs) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_entropy_plot(path: str | Path, runs: Sequence[tuple[str, RunMetrics]]) -> None:
    _series_plot(
        path,
        runs,
        lambda rec: rec.total_entropy,
        "total path entropy (nats)",
        "Entropy versus number of aims",
    )


def save_error_plot(path: str | Path, runs: Sequence[tuple[str, RunMetrics]]) -> None:
    runs = [
        (label, metrics)
        for label, metrics in runs
        if all(rec.pixel_errors is not None for rec in metrics.records)
    ]
    if not runs:
        return
    _series_plot(
        path,
        runs,
        lambda rec: rec.pixel_errors,
        "pixels with error > 1",
        "Disparity errors versus number of aims",
    )


def save_map_plot(path: str | Path, values: np.ndarray, title: str, cmap: str = "viridis") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    image = ax.imshow(values, cmap=cmap, interpolation="nearest", aspect="auto")
    fig.colorbar(image, ax=ax, shrink=0.85)
    ax.set_title(title)
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_bench_plot(
    path: str | Path, points: Sequence[tuple[int, int, float]]
) -> None:
    """Runtime against lattice size with a linear reference line.

    points are (columns, disparities, seconds) triples.
    """
    nodes = np.array([n * d for n, d, _ in points], dtype=np.float64)
    secs = np.array([s for _, _, s in points], dtype=np.float64)
    order = np.argsort(nodes)
    nodes, secs = nodes[order], secs[order]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.loglog(nodes, secs, marker="o", label="measured")
    ref = secs[0] * nodes / nodes[0]
    ax.loglog(nodes, ref, linestyle="--", alpha=0.6, label="linear reference")
    ax.set_xlabel("lattice nodes (columns x disparities)")
    ax.set_ylabel("seconds per scanline sweep set")
    ax.set_title("Inference runtime scaling")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_suite_plot(
    path: str | Path, rows: Sequence[tuple[str, int, int, float]]
) -> None:
    """Grouped bars per dataset: passive, active, and random-mean errors."""
    names = [name for name, _, _, _ in rows]
    passive = [p for _, p, _, _ in rows]
    active = [a for _, _, a, _ in rows]
    random_mean = [r for _, _, _, r in rows]
    x = np.arange(len(names))
    width = 0.27
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar(x - width, passive, width, label="passive")
    ax.bar(x, active, width, label="gain-guided aims")
    ax.bar(x + width, random_mean, width, label="random aims (mean)")
    ax.set_xticks(x, names)
    ax.set_ylabel("pixels with error > 1")
    ax.set_title("Error after querying, per dataset")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
