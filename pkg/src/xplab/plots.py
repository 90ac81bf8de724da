"""Figure rendering for cross-play matrices and objective surfaces.

Uses the non-interactive Agg backend so figures render identically on
headless machines; every writer saves straight to a file and closes the
figure. The delimited outputs are the contract; these figures are the
human-facing view of the same numbers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .version import VERSION

COLORMAP = "viridis"

_METADATA = {"Software": f"xplab {VERSION}"}

# annotating every cell stops being readable past this edge size
_MAX_ANNOTATED = 20


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata=_METADATA, bbox_inches="tight")
    plt.close(fig)
    return path


def _cell_color(norm_value: float) -> str:
    return "black" if norm_value > 0.6 else "white"


def _heatmap(ax, values, row_labels, col_labels):
    masked = np.ma.masked_invalid(values)
    cmap = plt.get_cmap(COLORMAP).copy()
    cmap.set_bad("lightgray")
    image = ax.imshow(masked, cmap=cmap)
    ax.set_xticks(range(len(col_labels)), labels=col_labels, rotation=45,
                  ha="right", fontsize=8)
    ax.set_yticks(range(len(row_labels)), labels=row_labels, fontsize=8)
    return image


def _annotate(ax, values, formatter):
    finite = values[np.isfinite(values)]
    lo = finite.min() if finite.size else 0.0
    hi = finite.max() if finite.size else 1.0
    span = hi - lo if hi > lo else 1.0
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            v = values[i, j]
            if not np.isfinite(v):
                ax.text(j, i, "n/a", ha="center", va="center", fontsize=7,
                        color="black")
                continue
            ax.text(j, i, formatter(i, j), ha="center", va="center", fontsize=7,
                    color=_cell_color((v - lo) / span))


def save_xp_heatmap(matrix, path, title: str | None = None) -> Path:
    """Heatmap of a pairwise cross-play matrix (seat 0 on rows)."""
    n = matrix.size
    side = min(12.0, 1.5 + 0.5 * n)
    fig, ax = plt.subplots(figsize=(side + 1.2, side))
    image = _heatmap(ax, matrix.values, matrix.labels, matrix.labels)
    if n <= _MAX_ANNOTATED:
        _annotate(ax, matrix.values, lambda i, j: f"{matrix.values[i, j]:.2f}")
    ax.set_xlabel("seat 1")
    ax.set_ylabel("seat 0")
    ax.set_title(title or "cross-play matrix")
    fig.colorbar(image, ax=ax, shrink=0.85)
    return _finish(fig, path)


def save_block_heatmap(xp_values, sp_values, labels, path,
                       title: str | None = None) -> Path:
    """Group-averaged cross-play heatmap.

    Diagonal cells show 'xp (sp)': the within-group cross-seed average next
    to the within-group self-play average. NaN cells (single-policy groups)
    are gray.
    """
    xp_values = np.asarray(xp_values, dtype=float)
    sp_values = np.asarray(sp_values, dtype=float)
    n = xp_values.shape[0]
    side = min(12.0, 2.0 + 0.7 * n)
    fig, ax = plt.subplots(figsize=(side + 1.2, side))
    image = _heatmap(ax, xp_values, labels, labels)

    def fmt(i, j):
        if i == j:
            return f"{xp_values[i, j]:.2f}\n({sp_values[i]:.2f})"
        return f"{xp_values[i, j]:.2f}"

    if n <= _MAX_ANNOTATED:
        _annotate(ax, xp_values, fmt)
    ax.set_title(title or "cross-play by group (diagonal: xp (sp))")
    fig.colorbar(image, ax=ax, shrink=0.85)
    return _finish(fig, path)


def save_surface_contour(grid, path, title: str | None = None) -> Path:
    """Filled contours of an objective surface with the grid argmax marked."""
    fig, ax = plt.subplots(figsize=(7.5, 6))
    contour = ax.contourf(grid.theta2, grid.theta1, grid.values, levels=41,
                          cmap=COLORMAP)
    t1, t2, _ = grid.argmax()
    ax.plot(t2, t1, marker="*", markersize=14, color="white",
            markeredgecolor="black")
    ax.axhline(0.0, color="white", linewidth=0.6, alpha=0.5)
    ax.set_xlabel("theta2")
    ax.set_ylabel("theta1")
    ax.set_title(title or f"objective surface (alpha={grid.alpha:g})")
    fig.colorbar(contour, ax=ax, shrink=0.9)
    return _finish(fig, path)


def save_sp_xp_curve(alphas, sp_means, xp_means, path,
                     title: str | None = None) -> Path:
    """Self-play vs cross-play averages across entropy coefficients."""
    fig, ax = plt.subplots(figsize=(7.5, 5))
    ax.plot(alphas, sp_means, marker="o", label="self-play")
    ax.plot(alphas, xp_means, marker="s", label="cross-play")
    ax.set_xlabel("entropy coefficient")
    ax.set_ylabel("greedy expected return")
    ax.legend()
    ax.grid(True, alpha=0.3)
    ax.set_title(title or "self-play vs cross-play")
    return _finish(fig, path)
