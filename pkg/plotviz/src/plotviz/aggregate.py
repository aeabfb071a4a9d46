"""Read optimization run CSVs and reduce them to mean/CI curve series.

The input files follow the run-harness schema: one row per evaluation
with columns ``algo,env,seed,eval_index,episodes_used,wall_clock_s,
fitness,best_so_far``. Curves for one algorithm are averaged across
seed files; the confidence band is the normal-approximation 95% half
width 1.96*std/sqrt(n) with the population (1/n) standard deviation.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "algo",
    "env",
    "seed",
    "eval_index",
    "episodes_used",
    "wall_clock_s",
    "fitness",
    "best_so_far",
)

# runs under this algo name become the horizontal reference, not a curve
BASELINE_ALGO = "random_policy"

CI_FACTOR = 1.96


class SchemaError(ValueError):
    """A CSV file does not match the run-harness schema."""


@dataclass(frozen=True)
class SeedRun:
    """One run file: the per-evaluation log of a single (algo, env, seed)."""

    algo: str
    env: str
    seed: int
    eval_index: np.ndarray
    wall_clock_s: np.ndarray
    fitness: np.ndarray
    best_so_far: np.ndarray
    path: Path | None = None


@dataclass(frozen=True)
class CurveSeries:
    """Seed-averaged learning curve for one algorithm on one environment.

    ``values`` holds the per-seed best-so-far curves resampled onto the
    common grid ``x`` (one row per seed); ``mean`` and ``ci_half_width``
    are derived from it and validated on construction.
    """

    algo: str
    env: str
    x: np.ndarray
    values: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    ci_half_width: np.ndarray = field(repr=False)

    def __post_init__(self):
        n_seeds, n_x = self.values.shape
        if self.x.shape != (n_x,):
            raise ValueError("x grid and value columns disagree")
        if self.mean.shape != (n_x,) or self.ci_half_width.shape != (n_x,):
            raise ValueError("mean/ci shape does not match the grid")
        if n_seeds < 1:
            raise ValueError("a curve series needs at least one seed")
        if np.any(self.ci_half_width < 0.0):
            raise ValueError("negative confidence half-width")
        lo = self.values.min(axis=0) - 1e-12
        hi = self.values.max(axis=0) + 1e-12
        if np.any(self.mean < lo) or np.any(self.mean > hi):
            raise ValueError("mean escapes the per-seed value range")

    @property
    def n_seeds(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_values(cls, algo, env, x, values) -> "CurveSeries":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        x = np.asarray(x, dtype=float)
        n = values.shape[0]
        mean = values.mean(axis=0)
        ci = CI_FACTOR * values.std(axis=0) / math.sqrt(n)
        return cls(algo, env, x, values, mean, ci)


def read_run_csv(path) -> SeedRun:
    """Parse one run file; any deviation from the schema names the file."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != CSV_HEADER:
            raise SchemaError(
                f"{path}: header {header} does not match {CSV_HEADER}"
            )
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    algo, env = rows[0][0], rows[0][1]
    evals, wall, fitness, best = [], [], [], []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(CSV_HEADER):
            raise SchemaError(
                f"{path}: line {lineno} has {len(row)} columns, "
                f"expected {len(CSV_HEADER)}"
            )
        if (row[0], row[1]) != (algo, env):
            raise SchemaError(f"{path}: line {lineno} switches algo/env")
        try:
            evals.append(int(row[3]))
            wall.append(float(row[5]))
            fitness.append(float(row[6]))
            best.append(float(row[7]))
            seed = int(row[2])
        except ValueError as exc:
            raise SchemaError(f"{path}: line {lineno}: {exc}") from None
    return SeedRun(
        algo=algo,
        env=env,
        seed=seed,
        eval_index=np.array(evals, dtype=int),
        wall_clock_s=np.array(wall, dtype=float),
        fitness=np.array(fitness, dtype=float),
        best_so_far=np.array(best, dtype=float),
        path=path,
    )


def load_directory(csv_dir, env: str) -> dict:
    """Read every ``*.csv`` under ``csv_dir``; keep runs for ``env``.

    Returns ``{algo: [SeedRun, ...]}`` with seed runs sorted by seed.
    """
    csv_dir = Path(csv_dir)
    if not csv_dir.is_dir():
        raise FileNotFoundError(f"{csv_dir} is not a directory")
    runs: dict = {}
    n_files = 0
    for path in sorted(csv_dir.rglob("*.csv")):
        n_files += 1
        run = read_run_csv(path)
        if run.env != env:
            continue
        runs.setdefault(run.algo, []).append(run)
    if n_files == 0:
        raise FileNotFoundError(f"no CSV files under {csv_dir}")
    for algo in runs:
        runs[algo] = sorted(runs[algo], key=lambda r: r.seed)
    logger.info(
        "loaded %d runs of %s across %d algorithms",
        sum(len(v) for v in runs.values()),
        env,
        len(runs),
    )
    return runs


def _eval_grid(runs) -> tuple:
    """Common eval_index grid; seed files must agree exactly."""
    first = runs[0].eval_index
    for run in runs[1:]:
        if run.eval_index.shape != first.shape or np.any(
            run.eval_index != first
        ):
            raise ValueError(
                f"{run.algo}: eval grids differ between seed files "
                f"({run.path} vs {runs[0].path})"
            )
    values = np.vstack([run.best_so_far for run in runs])
    return first.astype(float), values


def _wallclock_grid(runs) -> tuple:
    """Union wall-clock grid with last-value-carried-forward resampling.

    Grid points before a run's first record take that run's first value,
    so every seed contributes everywhere and the band stays defined.
    """
    grid = np.unique(np.concatenate([run.wall_clock_s for run in runs]))
    rows = []
    for run in runs:
        idx = np.searchsorted(run.wall_clock_s, grid, side="right") - 1
        rows.append(run.best_so_far[np.clip(idx, 0, None)])
    return grid, np.vstack(rows)


def aggregate(runs, x_axis: str = "evals") -> CurveSeries:
    """Collapse one algorithm's seed runs into a mean/CI curve."""
    if not runs:
        raise ValueError("aggregate needs at least one seed run")
    algos = {run.algo for run in runs}
    envs = {run.env for run in runs}
    if len(algos) != 1 or len(envs) != 1:
        raise ValueError(
            f"aggregate got mixed runs: algos {algos}, envs {envs}"
        )
    if x_axis == "evals":
        x, values = _eval_grid(runs)
    elif x_axis == "wallclock":
        x, values = _wallclock_grid(runs)
    else:
        raise ValueError(f"unknown x axis {x_axis!r}")
    return CurveSeries.from_values(runs[0].algo, runs[0].env, x, values)


def build_series(runs_by_algo: dict, x_axis: str = "evals") -> list:
    """One CurveSeries per optimizer, alphabetical, baseline runs excluded."""
    return [
        aggregate(runs_by_algo[algo], x_axis)
        for algo in sorted(runs_by_algo)
        if algo != BASELINE_ALGO
    ]


def baseline_reward(runs_by_algo: dict):
    """Mean per-evaluation fitness of the random-policy runs, if present.

    The baseline uses the raw fitness column rather than best_so_far:
    the running maximum of repeated random evaluations creeps upward and
    would overstate what a random policy actually earns.
    """
    runs = runs_by_algo.get(BASELINE_ALGO)
    if not runs:
        return None
    return float(
        np.mean(np.concatenate([run.fitness for run in runs]))
    )
