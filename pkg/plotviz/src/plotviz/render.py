"""Render aggregated curve series to an image file.

Pure batch rendering on the Agg backend: one line plus a shaded 95%
band per algorithm, an optional dashed horizontal reference for the
random policy, and the y-axis pinned to the environment's reward range.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

logger = logging.getLogger(__name__)

Y_LIMITS = {
    "minigrid5x5": (0.0, 1.0),
    "cartpole": (0.0, 500.0),
}

X_LABELS = {
    "evals": "evaluations",
    "wallclock": "wall clock (s)",
}

BAND_ALPHA = 0.2


def draw(series_list, env: str, x_axis: str = "evals", baseline=None):
    """Build the figure; returns (fig, ax) so callers can inspect it."""
    if not series_list:
        raise ValueError("nothing to draw: empty series list")
    if x_axis not in X_LABELS:
        raise ValueError(f"unknown x axis {x_axis!r}")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for series in series_list:
        (line,) = ax.plot(
            series.x, series.mean, linewidth=1.5, label=series.algo
        )
        ax.fill_between(
            series.x,
            series.mean - series.ci_half_width,
            series.mean + series.ci_half_width,
            color=line.get_color(),
            alpha=BAND_ALPHA,
            linewidth=0,
        )
    if baseline is not None:
        ax.axhline(
            baseline,
            color="dimgray",
            linestyle="--",
            linewidth=1.0,
            label="random policy",
        )
    limits = Y_LIMITS.get(env)
    if limits is not None:
        ax.set_ylim(*limits)
    ax.set_xlabel(X_LABELS[x_axis])
    ax.set_ylabel("best reward")
    ax.set_title(env)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    return fig, ax


def render(
    series_list, env: str, out_path, x_axis: str = "evals", baseline=None
) -> Path:
    """Draw and save; returns the written path. Write errors propagate."""
    out_path = Path(out_path)
    fig, _ = draw(series_list, env, x_axis=x_axis, baseline=baseline)
    try:
        fig.savefig(out_path, dpi=150)
    finally:
        plt.close(fig)
    logger.info("wrote %s (%d series)", out_path, len(series_list))
    return out_path
