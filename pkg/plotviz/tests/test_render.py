"""Figure construction and image output.

Covers: one line and band per algorithm plus the baseline in the
legend, environment y-limits, axis labels per x mode, and nonempty
image files for both environments.
"""

import numpy as np
import pytest

from plotviz.aggregate import CurveSeries
from plotviz.render import Y_LIMITS, draw, render

ALGOS = ("aco", "ga", "hs", "pso", "sa", "ts")


def series_for(env, n_algos=6, n_seeds=3, n_x=20):
    rng = np.random.default_rng(hash(env) % 2**32)
    high = Y_LIMITS[env][1]
    out = []
    for algo in ALGOS[:n_algos]:
        values = np.sort(
            rng.uniform(0.0, high, size=(n_seeds, n_x)), axis=1
        )
        out.append(
            CurveSeries.from_values(algo, env, np.arange(1.0, n_x + 1), values)
        )
    return out


# =====================================================================
# figure structure
# =====================================================================


def test_six_algorithms_make_six_lines_and_bands():
    import matplotlib.pyplot as plt

    fig, ax = draw(series_for("minigrid5x5"), "minigrid5x5", baseline=0.23)
    labels = [t.get_text() for t in ax.get_legend().get_texts()]
    assert labels == list(ALGOS) + ["random policy"]
    assert len(ax.collections) == 6  # one fill_between band per algorithm
    plt.close(fig)


def test_y_axis_is_pinned_to_the_env_reward_range():
    import matplotlib.pyplot as plt

    for env, limits in Y_LIMITS.items():
        fig, ax = draw(series_for(env, n_algos=2), env)
        assert ax.get_ylim() == limits
        plt.close(fig)


def test_axis_labels_follow_the_x_mode():
    import matplotlib.pyplot as plt

    fig, ax = draw(series_for("cartpole", n_algos=1), "cartpole")
    assert ax.get_xlabel() == "evaluations"
    assert ax.get_ylabel() == "best reward"
    plt.close(fig)

    fig, ax = draw(
        series_for("cartpole", n_algos=1), "cartpole", x_axis="wallclock"
    )
    assert ax.get_xlabel() == "wall clock (s)"
    plt.close(fig)


def test_empty_series_list_is_rejected():
    with pytest.raises(ValueError, match="empty"):
        draw([], "cartpole")


def test_unknown_x_axis_is_rejected():
    with pytest.raises(ValueError, match="x axis"):
        draw(series_for("cartpole", n_algos=1), "cartpole", x_axis="episodes")


# =====================================================================
# files on disk
# =====================================================================


@pytest.mark.parametrize("env", sorted(Y_LIMITS))
def test_render_writes_a_nonempty_image_per_env(tmp_path, env):
    out = render(series_for(env), env, tmp_path / f"{env}.png", baseline=1.0)
    assert out.exists()
    assert out.stat().st_size > 0


def test_render_propagates_write_failures(tmp_path):
    missing = tmp_path / "no" / "such" / "dir" / "plot.png"
    with pytest.raises(OSError):
        render(series_for("cartpole", n_algos=1), "cartpole", missing)
