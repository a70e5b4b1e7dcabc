"""Matplotlib renderings of run outputs, saved to files next to the CSV/JSON."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

MAX_RASTER_POINTS = 60_000


def save_phase_raster(records: Sequence, path) -> None:
    """Scatter of node phases (degrees) over time.

    With the default quarter-turn advance this produces the familiar
    diagonal-stripe raster, stripes 45 degrees apart; long traces are
    strided down to keep the figure light.
    """
    n_rows = len(records)
    stride = max(1, n_rows // MAX_RASTER_POINTS)
    sample = records[:: stride]
    ts = np.fromiter((r.t for r in sample), dtype=float, count=len(sample))
    degs = np.fromiter(
        (math.degrees(r.phase_before) for r in sample), dtype=float, count=len(sample)
    )
    nodes = np.fromiter((r.node for r in sample), dtype=float, count=len(sample))
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.scatter(ts, degs, s=1.5, c=nodes, cmap="tab10", linewidths=0)
    ax.set_xlabel("step")
    ax.set_ylabel("phase [deg]")
    ax.set_ylim(0, 360)
    ax.set_yticks(range(0, 361, 45))
    ax.set_title("node phases over time")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def save_channel_usage(per_channel_success_counts: Sequence[int], path) -> None:
    """Bar chart of successful transmissions per channel."""
    counts = list(per_channel_success_counts)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(range(1, len(counts) + 1), counts, color="tab:blue")
    ax.set_xlabel("channel")
    ax.set_ylabel("successes")
    ax.set_title("successes per channel")
    ax.set_xticks(range(1, len(counts) + 1))
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def save_sweep_overview(rows: Sequence[dict], path) -> None:
    """Bar chart of mean successes per step across the runs of a sweep."""
    done = [r for r in rows if r.get("status") == "ok"]
    labels = [r["run"] for r in done]
    values = [r["mean_success_per_step"] for r in done]
    fig, ax = plt.subplots(figsize=(max(5, 0.45 * len(done) + 2), 3.5))
    ax.bar(range(len(done)), values, color="tab:green")
    ax.set_xticks(range(len(done)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("mean successes/step")
    ax.set_title("sweep overview")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
