"""Command-line entry points: rate estimation, simulation, reporting.

``rate`` estimates the optimal average reward of a configured environment and
prints it with a fresh-sample residual estimate as JSON. ``simulate`` runs a
configured policy over seeded replications and writes ``regret.csv`` and
``run.json``; ``report`` does the same driven entirely by the config file.
Wall time goes to stderr so output files stay byte-stable.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from .config import ExperimentConfig, build_environment, build_runner, gamma_seed
from .env import validate_spec
from .harness import default_grid, emit_report, regret_curve, run_replications
from .rate import rate_residual, solve_optimal_rate


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to a YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="override the base seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armfilter",
        description="Simulate arm-filtering policies on costly, delayed arm-set streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", help="estimate the optimal average reward")
    _add_common(rate)
    rate.add_argument(
        "--iterations", type=int, default=None, help="stochastic approximation budget"
    )

    simulate = sub.add_parser("simulate", help="run replications and write reports")
    _add_common(simulate)
    simulate.add_argument("--policy", default=None, help="oaf | coaf-linear | coaf-finite")
    simulate.add_argument("--horizon", type=float, default=None)
    simulate.add_argument("--output", default=None, help="report directory")

    report = sub.add_parser("report", help="run the experiment the config describes")
    _add_common(report)
    report.add_argument("--output", default=None, help="report directory")
    return parser


def _load(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config.base_seed = args.seed
    return config


def _run_and_emit(config: ExperimentConfig, output: str | None) -> dict:
    start = time.perf_counter()
    env, model = build_environment(config.environment)
    validate_spec(env.spec, env)
    gamma = solve_optimal_rate(
        env, model, config.gamma_star_iterations, seed=gamma_seed(config.base_seed)
    )
    runner = build_runner(config.policy, model, env.spec, config.horizon)
    grid = default_grid(config.horizon, config.grid_points)
    curve = regret_curve(
        run_replications(env, runner, config.replications, config.base_seed),
        gamma,
        grid,
    )
    out_dir = output or config.output
    if out_dir is None:
        raise ValueError("an output directory is required (--output or config)")
    csv_path, json_path = emit_report(
        curve, config.to_dict(), out_dir, gamma_star=gamma
    )
    elapsed = time.perf_counter() - start
    print(f"elapsed_seconds={elapsed:.3f}", file=sys.stderr)
    return {
        "gamma_star": gamma,
        "mean_regret_at_horizon": float(curve.mean[-1]),
        "regret_csv": csv_path,
        "run_json": json_path,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = _load(args)
    if args.command == "rate":
        if args.iterations is not None:
            config.gamma_star_iterations = args.iterations
        env, model = build_environment(config.environment)
        validate_spec(env.spec, env)
        start = time.perf_counter()
        gamma = solve_optimal_rate(
            env, model, config.gamma_star_iterations, seed=gamma_seed(config.base_seed)
        )
        residual = rate_residual(
            env, model, gamma, seed=gamma_seed(config.base_seed + 1)
        )
        print(f"elapsed_seconds={time.perf_counter() - start:.3f}", file=sys.stderr)
        print(
            json.dumps(
                {
                    "gamma_star": gamma,
                    "residual": residual,
                    "iterations": config.gamma_star_iterations,
                },
                sort_keys=True,
            )
        )
        return 0
    if args.command == "simulate":
        if args.policy is not None:
            config.policy = dict(config.policy, name=args.policy)
        if args.horizon is not None:
            config.horizon = args.horizon
        summary = _run_and_emit(config, args.output)
        print(json.dumps(summary, sort_keys=True))
        return 0
    if args.command == "report":
        summary = _run_and_emit(config, args.output)
        print(json.dumps(summary, sort_keys=True))
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
