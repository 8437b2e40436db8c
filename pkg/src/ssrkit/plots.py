"""Figure rendering for analysis reports and sweep diagnostics.

Figures are written next to the delimited outputs when requested via the CLI;
all rendering uses the Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import DISTANCES, DistanceDistribution

_PNG_META = {"Software": "ssrkit"}


def save_histogram_figure(hist: dict[str, int], path, title: str = "Relation histogram") -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    labels = list(hist)
    ax.bar(range(len(labels)), [hist[lbl] for lbl in labels], color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), metadata=_PNG_META)
    plt.close(fig)


def save_distance_figure(dist: DistanceDistribution, path) -> None:
    labels = list(dist.counts)
    fig, axes = plt.subplots(1, len(labels), figsize=(2.6 * len(labels), 2.8), sharey=True)
    if len(labels) == 1:
        axes = [axes]
    for ax, lbl in zip(axes, labels):
        ax.bar([str(d) for d in DISTANCES], [dist.counts[lbl][d] for d in DISTANCES],
               color="#a85448")
        ax.set_title(lbl, fontsize=9)
        ax.set_xlabel("distance")
    axes[0].set_ylabel("count")
    fig.tight_layout()
    fig.savefig(Path(path), metadata=_PNG_META)
    plt.close(fig)


def save_sweep_figure(runs: list[dict], path) -> None:
    """One line per learning rate: the per-epoch dominant-class prediction fraction."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for run in runs:
        epochs = [h["epoch"] for h in run["history"]]
        frac = [h.get("dominant_fraction", 0.0) for h in run["history"]]
        ax.plot(epochs, frac, marker="o", label=f"lr={run['lr']:g}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("dominant-class prediction fraction")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), metadata=_PNG_META)
    plt.close(fig)
