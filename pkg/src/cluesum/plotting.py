"""Report figures. Everything renders off-screen to files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "cluesum",
}


def figsize(width: float = 6.0, ratio: float | None = None) -> tuple[float, float]:
    if ratio is None:
        ratio = (math.sqrt(5) - 1) / 2
    return width, width * ratio


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def plot_length_deltas(labels: list[str], deltas: list[float | None], path: str | Path, series: str = "model") -> Path:
    """Bar chart of per-bucket ROUGE-L differences against the first bucket; empty buckets are left blank."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(6.5, 0.5))
        xs = range(len(labels))
        heights = [0.0 if d is None else 100 * d for d in deltas]
        bars = ax.bar(xs, heights, color="#4c72b0", label=series)
        for bar, d in zip(bars, deltas):
            if d is None:
                bar.set_alpha(0.0)
                ax.annotate("n/a", (bar.get_x() + bar.get_width() / 2, 0), ha="center", va="bottom", fontsize=7)
        ax.axhline(0, color="black", linewidth=0.6)
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_xlabel("source length (words)")
        ax.set_ylabel(f"ROUGE-L diff vs {labels[0]}")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_method_comparison(scores: dict[str, dict[str, float]], path: str | Path,
                           metrics: tuple[str, ...] = ("RL", "METEOR", "RWMD")) -> Path:
    """Grouped bars: one group per metric, one bar per extraction method."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(5.5))
        methods = list(scores)
        width = 0.8 / max(len(methods), 1)
        for k, method in enumerate(methods):
            xs = [i + k * width for i in range(len(metrics))]
            ax.bar(xs, [100 * scores[method][m] for m in metrics], width, label=method)
        ax.set_xticks([i + width * (len(methods) - 1) / 2 for i in range(len(metrics))])
        ax.set_xticklabels(metrics)
        ax.set_ylabel("score (x100)")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_training_curve(log: list[dict], path: str | Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(5.0))
        ax.plot([r["step"] for r in log], [r["loss"] for r in log], linewidth=0.8)
        ax.set_yscale("log")
        ax.set_xlabel("step")
        ax.set_ylabel("training loss (NLL)")
        return _save(fig, path)
