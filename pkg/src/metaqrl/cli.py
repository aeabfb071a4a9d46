"""Command-line front end.

Subcommands:

- ``run``: one (env, algo, seed) optimization; writes a CSV log and a
  best-genome checkpoint. Options come from flags and/or a YAML config
  file (flags win).
- ``suite``: the algo x env x seed grid (default 5 seeds per cell).
- ``metrics``: aggregate run CSVs into a metrics.json report.
- ``sweep``: enumerate a user-provided hyperparameter grid from a YAML
  file, one run per combination, with a JSON summary.

Exit codes: 0 on success, 1 on configuration/runtime errors (with a
message on stderr), 2 on malformed flags (argparse usage error).
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import yaml

from .envs import ENV_NAMES
from .harness import (
    ALGO_NAMES,
    RunConfig,
    replay_best,
    run_experiment,
    write_metrics,
)

METAHEURISTIC_ALGOS = ("sa", "pso", "aco", "ts", "hs", "ga")


def _parse_hyperparam(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(
            f"hyperparameter override {text!r} is not of the form key=value"
        )
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def _load_yaml(path: str) -> dict:
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return data


def _build_run_config(args) -> RunConfig:
    settings: dict = {}
    if args.config:
        settings.update(_load_yaml(args.config))
    for key in (
        "env",
        "algo",
        "seed",
        "budget_evals",
        "episodes_per_eval",
        "wall_clock_limit_s",
        "bond_dim",
    ):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if args.out is not None:
        settings["out_dir"] = args.out
    if args.freeze_mps:
        settings["freeze_mps"] = True
    overrides = dict(settings.pop("hyperparams", {}) or {})
    for key, value in args.hp or []:
        overrides[key] = value
    settings["hyperparams"] = overrides
    missing = [k for k in ("env", "algo", "seed", "budget_evals") if k not in settings]
    if missing:
        raise ValueError(f"missing required run settings: {', '.join(missing)}")
    return RunConfig(**settings)


def _cmd_run(args) -> int:
    config = _build_run_config(args)
    record = run_experiment(config)
    print(
        f"{config.algo} on {config.env} seed {config.seed}: "
        f"best fitness {record.best_fitness:.6g} "
        f"after {len(record.rows)} evaluations"
    )
    if record.csv_path:
        print(f"log: {record.csv_path}")
    if record.checkpoint_path:
        print(f"checkpoint: {record.checkpoint_path}")
    if args.trace:
        ret = replay_best(record, Path(args.trace))
        print(f"trace: {args.trace} (replay return {ret:.6g})")
    return 0


def _cmd_suite(args) -> int:
    envs = args.envs.split(",")
    algos = args.algos.split(",")
    seeds = list(range(args.seeds))
    out = Path(args.out)
    for env, algo, seed in itertools.product(envs, algos, seeds):
        config = RunConfig(
            env=env,
            algo=algo,
            seed=seed,
            budget_evals=args.budget_evals,
            episodes_per_eval=args.episodes_per_eval,
            wall_clock_limit_s=args.wall_clock_limit_s,
            out_dir=out,
        )
        record = run_experiment(config)
        print(
            f"{algo:>13} {env:<12} seed {seed}: "
            f"best {record.best_fitness:.6g}"
        )
    return 0


def _cmd_metrics(args) -> int:
    thresholds = {}
    if args.threshold_minigrid is not None:
        thresholds["minigrid5x5"] = args.threshold_minigrid
    if args.threshold_cartpole is not None:
        thresholds["cartpole"] = args.threshold_cartpole
    report = write_metrics(args.in_dir, args.out, thresholds)
    print(f"wrote {args.out} ({len(report['cells'])} env/algo cells)")
    return 0


def _cmd_sweep(args) -> int:
    spec = _load_yaml(args.config)
    base = dict(spec.get("base") or {})
    grid = dict(spec.get("grid") or {})
    if not base or not grid:
        raise ValueError(f"{args.config}: need 'base' run settings and a 'grid'")
    out = Path(args.out)
    names = sorted(grid)
    summary = []
    for values in itertools.product(*(grid[name] for name in names)):
        combo = dict(zip(names, values))
        label = "_".join(f"{k}={v}" for k, v in combo.items())
        overrides = dict(base.get("hyperparams") or {})
        overrides.update(combo)
        settings = {k: v for k, v in base.items() if k != "hyperparams"}
        config = RunConfig(
            **settings, hyperparams=overrides, out_dir=out / label
        )
        record = run_experiment(config)
        summary.append({"combo": combo, "best_fitness": record.best_fitness})
        print(f"{label}: best {record.best_fitness:.6g}")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep_summary.json", "w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metaqrl",
        description="Metaheuristic optimization of quantum circuit policies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one optimization run")
    run.add_argument("--config", help="YAML file with RunConfig fields")
    run.add_argument("--env", choices=ENV_NAMES)
    run.add_argument("--algo", choices=ALGO_NAMES)
    run.add_argument("--seed", type=int)
    run.add_argument("--budget-evals", type=int, dest="budget_evals")
    run.add_argument(
        "--episodes-per-eval", type=int, dest="episodes_per_eval", default=None
    )
    run.add_argument(
        "--wall-clock-limit", type=float, dest="wall_clock_limit_s", default=None
    )
    run.add_argument("--bond-dim", type=int, dest="bond_dim", default=None)
    run.add_argument("--freeze-mps", action="store_true", dest="freeze_mps")
    run.add_argument("--out", help="output directory for CSV + checkpoint")
    run.add_argument(
        "--hp",
        action="append",
        type=_parse_hyperparam,
        metavar="KEY=VALUE",
        help="hyperparameter override (repeatable)",
    )
    run.add_argument("--trace", help="replay the best policy, dump a step trace CSV")
    run.set_defaults(func=_cmd_run)

    suite = sub.add_parser("suite", help="algo x env x seed grid")
    suite.add_argument("--envs", default=",".join(ENV_NAMES))
    suite.add_argument("--algos", default=",".join(METAHEURISTIC_ALGOS))
    suite.add_argument("--seeds", type=int, default=5)
    suite.add_argument(
        "--budget-evals", type=int, dest="budget_evals", required=True
    )
    suite.add_argument(
        "--episodes-per-eval", type=int, dest="episodes_per_eval", default=3
    )
    suite.add_argument(
        "--wall-clock-limit", type=float, dest="wall_clock_limit_s", default=None
    )
    suite.add_argument("--out", required=True)
    suite.set_defaults(func=_cmd_suite)

    metrics = sub.add_parser("metrics", help="aggregate CSVs to metrics.json")
    metrics.add_argument("--in", dest="in_dir", required=True)
    metrics.add_argument("--out", default="metrics.json")
    metrics.add_argument(
        "--threshold-minigrid", type=float, dest="threshold_minigrid"
    )
    metrics.add_argument(
        "--threshold-cartpole", type=float, dest="threshold_cartpole"
    )
    metrics.set_defaults(func=_cmd_metrics)

    sweep = sub.add_parser("sweep", help="hyperparameter grid from YAML")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
