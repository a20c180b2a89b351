"""Experiment configuration: file round-trip and object construction.

Configs are plain key-value trees (YAML on disk). The environment and policy
subtrees are kept verbatim so a config survives a save/load cycle exactly;
builder functions turn them into live samplers, models, and policy runners.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

import numpy as np
import yaml

from .coaf import run_coaf
from .confidence import FiniteClassState, RidgeState
from .datasets import load_feature_dataset, load_finite_class
from .env import (
    ConstraintSet,
    EnvironmentSampler,
    FixedEnvironment,
    GaussianRewardModel,
    LinearRegressor,
    ProblemSpec,
    RewardModel,
    mortal_preset,
    reference_preset,
)
from .oaf import run_oaf
from .trace import Trace

POLICIES = ("oaf", "coaf-linear", "coaf-finite")


@dataclass
class ExperimentConfig:
    environment: dict
    policy: dict
    horizon: float
    replications: int
    base_seed: int
    grid_points: int = 200
    gamma_star_iterations: int = 1_000_000
    output: str | None = None

    @classmethod
    def from_dict(cls, tree: dict) -> "ExperimentConfig":
        run = tree.get("run", {})
        return cls(
            environment=tree["environment"],
            policy=tree["policy"],
            horizon=float(run["horizon"]),
            replications=int(run["replications"]),
            base_seed=int(run["base_seed"]),
            grid_points=int(run.get("grid_points", 200)),
            gamma_star_iterations=int(run.get("gamma_star_iterations", 1_000_000)),
            output=tree.get("output"),
        )

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def to_dict(self) -> dict:
        tree = {
            "environment": self.environment,
            "policy": self.policy,
            "run": {
                "horizon": self.horizon,
                "replications": self.replications,
                "base_seed": self.base_seed,
                "grid_points": self.grid_points,
                "gamma_star_iterations": self.gamma_star_iterations,
            },
        }
        if self.output is not None:
            tree["output"] = self.output
        return tree

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)


def parse_counts(value) -> ConstraintSet:
    if value in (None, "any"):
        return ConstraintSet.any_count()
    if value == "positive":
        return ConstraintSet.at_least_one()
    if isinstance(value, (list, tuple)):
        return ConstraintSet.explicit(value)
    raise ValueError(f"unrecognized counts declaration {value!r}")


def build_environment(tree: dict) -> tuple[EnvironmentSampler, RewardModel]:
    """Instantiate the environment and reward model a config subtree declares."""
    kind = tree.get("kind", "reference")
    seed = tree.get("seed", 0)
    if kind == "reference":
        return reference_preset(
            seed,
            catalog_size=int(tree.get("catalog_size", 3000)),
            dim=int(tree.get("dim", 5)),
            arm_counts=tuple(tree.get("arm_counts", (6, 20))),
            delays=tuple(tree.get("delays", (5.0, 10.0))),
            cost_beta=tuple(tree.get("cost_beta", (2.0, 3.0))),
            noise_sigma=float(tree.get("noise_sigma", 1.0)),
            counts=parse_counts(tree.get("counts")),
        )
    if kind == "mortal":
        return mortal_preset(
            float(tree["mean_lifetime"]),
            tree["reward_values"],
            cap=int(tree.get("cap", 64)),
            seed=seed,
        )
    if kind == "fixed":
        means = np.asarray(tree["means"], dtype=float)
        delay = float(tree["delay"])
        cost = float(tree.get("cost", 0.0))
        spec = ProblemSpec(
            max_arms=means.size,
            delay_min=float(tree.get("delay_min", delay)),
            delay_max=float(tree.get("delay_max", delay)),
            cost_bound=float(tree.get("cost_bound", max(abs(cost), 1.0))),
            counts=parse_counts(tree.get("counts")),
            dim=1,
        )
        env = FixedEnvironment(spec, means[:, None], delay, cost, seed)
        model = GaussianRewardModel(
            LinearRegressor(np.array([1.0])), float(tree.get("noise_sigma", 0.0))
        )
        return env, model
    if kind == "dataset":
        return load_feature_dataset(
            tree["features_csv"],
            tree.get("ratings_csv"),
            arm_counts=tuple(tree.get("arm_counts", (6, 20))),
            delays=tuple(tree.get("delays", (5.0, 10.0))),
            cost_beta=tuple(tree.get("cost_beta", (2.0, 3.0))),
            counts=parse_counts(tree.get("counts")),
            cost_bound=float(tree.get("cost_bound", 1.0)),
            normalize=bool(tree.get("normalize", False)),
            seed=seed,
        )
    raise ValueError(f"unrecognized environment kind {kind!r}")


def build_runner(
    policy: dict, model: RewardModel, spec: ProblemSpec, horizon: float
) -> Callable[[EnvironmentSampler, np.random.Generator], Trace]:
    """Turn a policy subtree into a replication runner.

    Confidence parameters default to the horizon-matched choice 1/T when the
    config leaves them out.
    """
    name = policy.get("name", "oaf")
    if name == "oaf":
        return lambda env, rng: run_oaf(env, model, horizon, rng)
    xi = float(policy.get("xi", 0.5))
    delta = float(policy.get("delta", 1.0 / horizon))
    if name == "coaf-linear":
        lam = float(policy.get("lam", 1.0))

        def run_linear(env, rng):
            backend = RidgeState(spec.dim, lam, delta)
            return run_coaf(env, model, backend, horizon, xi, rng)

        return run_linear
    if name == "coaf-finite":
        alpha = float(policy.get("alpha", 1.0 / horizon))
        members = load_finite_class(policy["class_csv"])

        def run_finite(env, rng):
            backend = FiniteClassState(list(members), delta, alpha)
            return run_coaf(env, model, backend, horizon, xi, rng)

        return run_finite
    raise ValueError(f"unrecognized policy {name!r}, expected one of {POLICIES}")


# Offset separating the rate-solver stream seed from replication seeds.
GAMMA_SEED_TAG = 0x5EED


def gamma_seed(base_seed: int):
    return (base_seed, GAMMA_SEED_TAG)
