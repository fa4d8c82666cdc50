"""Report figures.  Everything renders off-screen to PNG files.

PNG metadata is stripped of the matplotlib version stamp so identical data
gives byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .graph import AttributedGraph  # noqa: E402

COLOR_HEX = {"red": "#d62728", "blue": "#1f77b4", "green": "#2ca02c", "purple": "#9467bd"}
FALLBACK = "#7f7f7f"

STYLE = {
    "figure.figsize": (5.0, 3.5),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def loss_curves(trace: np.ndarray, path, title: str = "training loss") -> Path:
    """One faint line per restart plus the mean."""
    trace = np.atleast_2d(trace)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        epochs = np.arange(trace.shape[1])
        for row in trace:
            ax.plot(epochs, row, color="0.6", lw=0.5, alpha=0.5)
        ax.plot(epochs, trace.mean(axis=0), color="k", lw=1.5, label="mean")
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        return save(fig, path)


def bench_runtime(rows, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for variant in sorted({r.variant for r in rows}):
            pts = sorted((r.n, r.seconds) for r in rows if r.variant == variant)
            ax.plot(*zip(*pts), marker="o", label=variant)
        ax.set_yscale("log")
        ax.set_xlabel("input graph nodes n")
        ax.set_ylabel("seconds per call")
        ax.legend()
        fig.tight_layout()
        return save(fig, path)


def epoch_scaling(t_rows, k_rows, path) -> Path:
    with plt.rc_context({**STYLE, "figure.figsize": (8.0, 3.2)}):
        fig, axes = plt.subplots(1, 2)
        for ax, rows, label in ((axes[0], t_rows, "steps t"), (axes[1], k_rows, "hidden graphs k")):
            x, y = np.array(rows, dtype=float).T
            slope, intercept = np.polyfit(x, y, 1)
            ax.plot(x, y, "o", color="k")
            ax.plot(x, slope * x + intercept, "--", color="C0")
            ax.set_xlabel(label)
            ax.set_ylabel("seconds per epoch")
        fig.tight_layout()
        return save(fig, path)


def accuracy_bars(results: dict[str, dict[str, float]], path, title: str = "matching accuracy") -> Path:
    """``results[run][column]`` accuracies in [0, 1]."""
    runs = list(results)
    cols = list(next(iter(results.values())))
    width = 0.8 / max(len(cols), 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.arange(len(runs))
        for i, c in enumerate(cols):
            ax.bar(x + i * width, [100 * results[r][c] for r in runs], width, label=c)
        ax.set_xticks(x + width * (len(cols) - 1) / 2, runs, rotation=20, ha="right")
        ax.set_ylabel("accuracy (%)")
        ax.set_ylim(0, 105)
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        return save(fig, path)


def ged_boxes(values: dict[str, np.ndarray], path, title: str = "GED to ground truth") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        names = list(values)
        ax.boxplot([values[n] for n in names])
        ax.set_xticks(np.arange(1, len(names) + 1), names, rotation=20, ha="right")
        ax.set_ylabel("GED")
        ax.set_title(title)
        fig.tight_layout()
        return save(fig, path)


def hidden_graph(g: AttributedGraph, path, label_names=None, title: str = "") -> Path:
    """Nodes on a circle colored by label, edge width proportional to weight."""
    n = g.n
    angle = 2 * np.pi * np.arange(n) / max(n, 1)
    xy = np.c_[np.cos(angle), np.sin(angle)]
    names = label_names or g.label_names
    labels = g.labels()
    colors = [COLOR_HEX.get(names[l], FALLBACK) if names else FALLBACK for l in labels]
    W = g.adjacency
    with plt.rc_context({**STYLE, "figure.figsize": (3.0, 3.0), "axes.grid": False}):
        fig, ax = plt.subplots()
        for i, j in zip(*np.triu_indices(n, 1)):
            if W[i, j] > 0:
                ax.plot(*xy[[i, j]].T, color="k", lw=0.5 + 3.0 * W[i, j], alpha=0.8, zorder=1)
        ax.scatter(xy[:, 0], xy[:, 1], s=300, c=colors, edgecolors="k", zorder=2)
        for i, (x, y) in enumerate(xy):
            ax.text(x, y, str(i), ha="center", va="center", color="white", fontsize=8, zorder=3)
        ax.set_aspect("equal")
        ax.axis("off")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return save(fig, path)
