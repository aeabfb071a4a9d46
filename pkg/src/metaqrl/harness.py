"""Experiment harness: rollouts, budgeted runs, metrics, CSV persistence.

Fitness of a genome is the mean undiscounted episodic return over K
rollouts (default 3). Rollout r of evaluation e in a run with seed s uses
an rng derived from SeedSequence([s, e, r]), so every run is exactly
reproducible and rollouts never share streams.

``run_experiment`` drives one (env, algo, seed) cell until the evaluation
budget is spent, recording every evaluation as a CSV row::

    algo,env,seed,eval_index,episodes_used,wall_clock_s,fitness,best_so_far

with floats at 10 significant digits and a flush per row (a crash loses
at most one row). ``episodes_used`` is cumulative (eval_index * K).
Re-running a config reproduces the CSV byte-identically except for the
wall_clock_s column. The metric helpers implement learning speed
v_l = E / P (E = episodes to first reach threshold P), stability (the
population standard deviation of per-seed finals) and max performance
(mean of per-seed finals, with the per-seed maximum as a secondary field).

The algorithm name "random_policy" is not an optimizer: it rolls out
uniformly random actions each evaluation and serves as the environment-
level baseline the learned policies must beat.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envs import ENV_NAMES, background_obs, make_env
from .metaheuristics import (
    OPTIMIZERS,
    BudgetExhausted,
    Objective,
    make_optimizer,
)
from .policy import (
    MINIGRID_ENV,
    ActionDistribution,
    Genome,
    Layout,
    init_genome,
    make_policy,
    save_genome,
    select_action,
)

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

ALGO_NAMES = tuple(OPTIMIZERS) + ("random_policy",)

DEFAULT_THRESHOLDS = {"minigrid5x5": 0.8, "cartpole": 195.0}


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# ---------------------------------------------------------------------------
# rollouts and fitness
# ---------------------------------------------------------------------------


class UniformRandomPolicy:
    """Action-level baseline: the same uniform distribution every step."""

    def __init__(self, n_actions: int):
        self._dist = ActionDistribution(probs=np.full(n_actions, 1.0 / n_actions))
        self._cdf = np.cumsum(self._dist.probs)

    def act(self, obs, rng: np.random.Generator) -> int:
        idx = int(np.searchsorted(self._cdf, rng.random()))
        return min(idx, self._cdf.size - 1)

    def distribution(self, obs) -> ActionDistribution:
        return self._dist


def _policy_for(genome: Genome):
    """Build the rollout policy, with the gridworld background precomputed."""
    if genome.layout.env == MINIGRID_ENV:
        return make_policy(genome, base_obs=background_obs())
    return make_policy(genome)


def rollout_rng(seed: int, eval_index: int, episode: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, eval_index, episode]))


def rollout(policy, env, rng: np.random.Generator, trace_writer=None) -> float:
    """One episode; returns the undiscounted return.

    The rng seeds the environment reset and, for stochastic policies,
    action sampling. ``trace_writer`` (csv.writer) receives one
    step,action,reward,done row per step when provided.
    """
    obs = env.reset(rng)
    act = getattr(policy, "act", None)
    total = 0.0
    done = False
    step_index = 0
    while not done:
        if act is not None:
            action = act(obs, rng)
        else:
            action = select_action(policy.distribution(obs), rng)
        obs, reward, done = env.step(action)
        total += reward
        if trace_writer is not None:
            trace_writer.writerow([step_index, action, _fmt(reward), int(done)])
        step_index += 1
    return total


def _episode_batch(policy, env, episodes: int, seed: int, eval_index: int) -> float:
    returns = [
        rollout(policy, env, rollout_rng(seed, eval_index, r))
        for r in range(episodes)
    ]
    return float(np.mean(returns))


def evaluate_fitness(
    genome: Genome, env_name: str, episodes: int = 3, seed: int = 0,
    eval_index: int = 1,
) -> float:
    """Mean return of a genome's policy over ``episodes`` seeded rollouts."""
    env = make_env(env_name)
    if genome.layout.env != env_name:
        raise ValueError(
            f"genome layout {genome.layout.env!r} does not match env {env_name!r}"
        )
    return _episode_batch(_policy_for(genome), env, episodes, seed, eval_index)


def random_policy_mean(env_name: str, episodes: int = 2000, seed: int = 0) -> float:
    """Mean return of uniformly random actions over many episodes."""
    env = make_env(env_name)
    policy = UniformRandomPolicy(env.n_actions)
    total = 0.0
    for ep in range(episodes):
        total += rollout(policy, env, rollout_rng(seed, 0, ep))
    return total / episodes


# ---------------------------------------------------------------------------
# experiment runs
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Everything one optimization run needs; mirrors the CLI/config file."""

    env: str
    algo: str
    seed: int
    budget_evals: int
    episodes_per_eval: int = 3
    wall_clock_limit_s: float | None = None
    out_dir: Path | None = None
    hyperparams: dict = field(default_factory=dict)
    bond_dim: int = 2
    freeze_mps: bool = False

    def __post_init__(self):
        if self.env not in ENV_NAMES:
            raise ValueError(f"unknown env {self.env!r}; choose from {ENV_NAMES}")
        if self.algo not in ALGO_NAMES:
            raise ValueError(f"unknown algo {self.algo!r}; choose from {ALGO_NAMES}")
        if self.budget_evals < 1:
            raise ValueError("budget_evals must be >= 1")
        if self.episodes_per_eval < 1:
            raise ValueError("episodes_per_eval must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)


@dataclass
class RunRecord:
    """Per-run result: the full evaluation log plus the best genome."""

    config: RunConfig
    rows: list  # (eval_index, wall_clock_s, fitness, best_so_far)
    best_fitness: float
    best_genome: Genome | None
    csv_path: Path | None = None
    checkpoint_path: Path | None = None

    @property
    def final_best(self) -> float:
        return self.rows[-1][3] if self.rows else -math.inf

    def best_curve(self) -> np.ndarray:
        return np.array([row[3] for row in self.rows])


def _run_paths(config: RunConfig):
    if config.out_dir is None:
        return None, None
    config.out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{config.algo}_{config.env}_seed{config.seed}"
    return config.out_dir / f"{stem}.csv", config.out_dir / f"{stem}_best.npz"


def run_experiment(config: RunConfig) -> RunRecord:
    """Run one budgeted optimization (or baseline) and persist its log."""
    env = make_env(config.env)
    csv_path, ckpt_path = _run_paths(config)
    rows: list = []
    t0 = time.perf_counter()
    deadline = (
        t0 + config.wall_clock_limit_s if config.wall_clock_limit_s else None
    )

    csv_file = open(csv_path, "w", newline="") if csv_path else None
    try:
        writer = None
        if csv_file is not None:
            writer = csv.writer(csv_file)
            writer.writerow(CSV_HEADER)
            csv_file.flush()

        def record(eval_index: int, fitness: float, best: float) -> None:
            wall = time.perf_counter() - t0
            rows.append((eval_index, wall, fitness, best))
            if writer is not None:
                writer.writerow(
                    [
                        config.algo,
                        config.env,
                        config.seed,
                        eval_index,
                        eval_index * config.episodes_per_eval,
                        _fmt(wall),
                        _fmt(fitness),
                        _fmt(best),
                    ]
                )
                csv_file.flush()

        if config.algo == "random_policy":
            best_fitness, best_genome = _run_random_policy(
                config, env, record, deadline, t0
            )
        else:
            best_fitness, best_genome = _run_optimizer(
                config, env, record, deadline
            )
    finally:
        if csv_file is not None:
            csv_file.close()

    if ckpt_path is not None and best_genome is not None:
        save_genome(best_genome, ckpt_path)
    else:
        ckpt_path = None
    return RunRecord(config, rows, best_fitness, best_genome, csv_path, ckpt_path)


def _run_random_policy(config, env, record, deadline, t0):
    policy = UniformRandomPolicy(env.n_actions)
    best = -math.inf
    for eval_index in range(1, config.budget_evals + 1):
        if deadline is not None and time.perf_counter() > deadline:
            break
        fitness = _episode_batch(
            policy, env, config.episodes_per_eval, config.seed, eval_index
        )
        best = max(best, fitness)
        record(eval_index, fitness, best)
    return best, None


def _run_optimizer(config, env, record, deadline):
    layout = Layout(config.env, bond_dim=config.bond_dim)
    frozen = init_genome(layout, config.seed).values

    if config.freeze_mps and layout.n_mps_params:
        n_mps = layout.n_mps_params
        dim = layout.n_params - n_mps

        def to_genome(x: np.ndarray) -> Genome:
            return Genome(np.concatenate([frozen[:n_mps], x]), layout)

    else:
        dim = layout.n_params

        def to_genome(x: np.ndarray) -> Genome:
            return Genome(x, layout)

    objective: Objective

    def fitness_fn(x: np.ndarray) -> float:
        policy = _policy_for(to_genome(x))
        eval_index = objective.eval_counter + 1
        return _episode_batch(
            policy, env, config.episodes_per_eval, config.seed, eval_index
        )

    objective = Objective(
        fitness_fn,
        dim,
        budget=config.budget_evals,
        on_record=record,
        deadline=deadline,
    )
    optimizer = make_optimizer(
        config.algo, dim, config.seed, env=config.env, overrides=config.hyperparams
    )
    while not objective.exhausted() and not optimizer.done:
        try:
            optimizer.step(objective)
        except BudgetExhausted:
            break

    best_genome = (
        to_genome(objective.best_genome) if objective.best_genome is not None else None
    )
    return objective.best_fitness, best_genome


def replay_best(record: RunRecord, trace_path: Path) -> float:
    """Re-run one episode of a finished run's best policy, dumping a trace."""
    env = make_env(record.config.env)
    if record.best_genome is not None:
        policy = _policy_for(record.best_genome)
    else:
        policy = UniformRandomPolicy(env.n_actions)
    rng = rollout_rng(record.config.seed, record.config.budget_evals + 1, 0)
    with open(trace_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "action", "reward", "done"])
        return rollout(policy, env, rng, trace_writer=writer)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def learning_speed_from_curve(
    best_so_far, threshold: float, episodes_per_eval: int
) -> float:
    """v_l = E / P with E the episodes consumed when P is first reached."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    for i, best in enumerate(best_so_far):
        if best >= threshold:
            return (i + 1) * episodes_per_eval / threshold
    return math.inf


def learning_speed(record: RunRecord, threshold: float) -> float:
    return learning_speed_from_curve(
        record.best_curve(), threshold, record.config.episodes_per_eval
    )


def stability(finals) -> float:
    """Population (1/N) standard deviation of per-run final performance."""
    finals = np.asarray(finals, dtype=float)
    if finals.size == 0:
        raise ValueError("stability of an empty run set is undefined")
    return float(np.std(finals))


def max_performance(finals) -> tuple:
    """(mean of per-seed finals, best single seed)."""
    finals = np.asarray(finals, dtype=float)
    if finals.size == 0:
        raise ValueError("max_performance of an empty run set is undefined")
    return float(finals.mean()), float(finals.max())


def load_run_csv(path) -> dict:
    """Parse one harness CSV into column arrays; validates the schema."""
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(
                f"{path}: unexpected CSV header {header!r}, expected {CSV_HEADER!r}"
            )
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    cols = list(zip(*rows))
    return {
        "algo": cols[0][0],
        "env": cols[1][0],
        "seed": int(cols[2][0]),
        "eval_index": np.array(cols[3], dtype=int),
        "episodes_used": np.array(cols[4], dtype=int),
        "wall_clock_s": np.array(cols[5], dtype=float),
        "fitness": np.array(cols[6], dtype=float),
        "best_so_far": np.array(cols[7], dtype=float),
    }


def _json_safe(value: float):
    return "inf" if math.isinf(value) else value


def compute_metrics(csv_dir, thresholds: dict | None = None) -> dict:
    """Aggregate all run CSVs under a directory into a metrics report.

    Groups files by (env, algo); emits per-seed finals and v_l, the
    stability sigma, and p_max (mean of finals; best seed as a secondary
    field). v_l is averaged over the seeds that reached the threshold and
    marked "inf" when none did.
    """
    thresholds = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    csv_dir = Path(csv_dir)
    paths = sorted(csv_dir.glob("*.csv"))
    groups: dict = {}
    for path in paths:
        run = load_run_csv(path)
        groups.setdefault((run["env"], run["algo"]), []).append(run)

    cells = {}
    for (env, algo), runs in sorted(groups.items()):
        runs.sort(key=lambda r: r["seed"])
        threshold = thresholds[env]
        finals = [float(r["best_so_far"][-1]) for r in runs]
        v_ls = []
        for r in runs:
            k = int(r["episodes_used"][0])
            v_ls.append(
                learning_speed_from_curve(r["best_so_far"], threshold, k)
            )
        finite = [v for v in v_ls if math.isfinite(v)]
        p_mean, p_best = max_performance(finals)
        cells[f"{env}/{algo}"] = {
            "env": env,
            "algo": algo,
            "seeds": [r["seed"] for r in runs],
            "episodes_per_eval": int(runs[0]["episodes_used"][0]),
            "threshold": threshold,
            "finals": finals,
            "v_l_per_seed": [_json_safe(v) for v in v_ls],
            "v_l": _json_safe(float(np.mean(finite)) if finite else math.inf),
            "sigma": stability(finals),
            "p_max": p_mean,
            "p_max_best_seed": p_best,
        }
    if not cells:
        raise ValueError(f"no run CSVs found under {csv_dir}")
    return {"thresholds": thresholds, "cells": cells}


def write_metrics(csv_dir, out_path, thresholds: dict | None = None) -> dict:
    report = compute_metrics(csv_dir, thresholds)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return report
