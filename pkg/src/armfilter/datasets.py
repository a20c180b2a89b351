"""Dataset-backed environments from featurized arm catalogs.

The feature file carries one arm per row: ``arm_id, f1..fd, mean_reward``.
A companion ratings file (``arm_id, rating``) supplies the discrete reward
pool each draw samples from; arms without ratings fall back to their stored
mean. Catalogs can also be written back out, which is how the synthetic
reference catalog is materialized for tests.
"""
from __future__ import annotations

import csv
import os
from typing import Sequence

import numpy as np

from .env import (
    CatalogEnvironment,
    ConstraintSet,
    ProblemSpec,
    RatingRewardModel,
    ScaledBeta,
    TabulatedRegressor,
    Uniform,
    UniformInt,
)
from .errors import EmptyCatalog, SchemaError


def read_catalog_csv(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse a feature file into (arm_ids, features, means)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyCatalog(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "arm_id" or header[-1] != "mean_reward":
            raise SchemaError(1, "expected header arm_id, f1..fd, mean_reward")
        width = len(header)
        ids: list[int] = []
        rows: list[list[float]] = []
        means: list[float] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise SchemaError(line_no, f"expected {width} columns, got {len(row)}")
            try:
                ids.append(int(row[0]))
                rows.append([float(v) for v in row[1:-1]])
                means.append(float(row[-1]))
            except ValueError as exc:
                raise SchemaError(line_no, str(exc)) from None
    if not ids:
        raise EmptyCatalog(f"{path} has no arms")
    if len(set(ids)) != len(ids):
        raise SchemaError(2, "duplicate arm_id values")
    return np.array(ids), np.array(rows), np.array(means)


def read_ratings_csv(
    path: str | os.PathLike, known_ids: set[int]
) -> dict[int, np.ndarray]:
    """Parse a ratings file into per-arm rating arrays."""
    pools: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(1, "ratings file is empty") from None
        if [h.strip() for h in header] != ["arm_id", "rating"]:
            raise SchemaError(1, "expected header arm_id, rating")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(line_no, f"expected 2 columns, got {len(row)}")
            try:
                arm = int(row[0])
                rating = float(row[1])
            except ValueError as exc:
                raise SchemaError(line_no, str(exc)) from None
            if arm not in known_ids:
                raise SchemaError(line_no, f"unknown arm_id {arm}")
            pools.setdefault(arm, []).append(rating)
    return {k: np.array(v) for k, v in pools.items()}


def write_catalog_csv(
    path: str | os.PathLike,
    features: np.ndarray,
    means: np.ndarray,
    arm_ids: Sequence[int] | None = None,
) -> None:
    features = np.atleast_2d(features)
    ids = arm_ids if arm_ids is not None else range(features.shape[0])
    dim = features.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arm_id"] + [f"f{k + 1}" for k in range(dim)] + ["mean_reward"])
        for i, arm in enumerate(ids):
            writer.writerow(
                [arm] + [f"{v:.12g}" for v in features[i]] + [f"{means[i]:.12g}"]
            )


def write_ratings_csv(
    path: str | os.PathLike, ratings: dict[int, Sequence[float]]
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arm_id", "rating"])
        for arm in sorted(ratings):
            for value in ratings[arm]:
                writer.writerow([arm, f"{value:.12g}"])


def load_feature_dataset(
    features_path: str | os.PathLike,
    ratings_path: str | os.PathLike | None = None,
    *,
    arm_counts: tuple[int, int] = (6, 20),
    delays: tuple[float, float] = (5.0, 10.0),
    cost_beta: tuple[float, float] = (2.0, 3.0),
    counts: ConstraintSet | None = None,
    cost_bound: float = 1.0,
    normalize: bool = False,
    seed=0,
) -> tuple[CatalogEnvironment, RatingRewardModel]:
    """Build an environment drawing sets uniformly from a stored catalog.

    Each decision set draws its arms without replacement; the mean function
    is the stored per-arm mean and rewards are uniform draws from the arm's
    rating list. ``normalize`` affinely maps ratings and means onto [-1, 1],
    which restores the bounded-mean regime the solvers assume; raw rating
    scales are kept by default.
    """
    ids, features, means = read_catalog_csv(features_path)
    ratings = (
        read_ratings_csv(ratings_path, set(int(i) for i in ids))
        if ratings_path is not None
        else {}
    )
    if normalize:
        pool = [means]
        pool.extend(ratings.values())
        lo = min(float(np.min(p)) for p in pool)
        hi = max(float(np.max(p)) for p in pool)
        span = (hi - lo) or 1.0
        means = 2.0 * (means - lo) / span - 1.0
        ratings = {k: 2.0 * (v - lo) / span - 1.0 for k, v in ratings.items()}
    lo_count, hi_count = arm_counts
    if hi_count > len(ids):
        raise EmptyCatalog(
            f"catalog holds {len(ids)} arms, sets need up to {hi_count}"
        )
    spec = ProblemSpec(
        max_arms=hi_count,
        delay_min=delays[0],
        delay_max=delays[1],
        cost_bound=cost_bound,
        counts=counts if counts is not None else ConstraintSet.any_count(),
        dim=features.shape[1],
    )
    env = CatalogEnvironment(
        spec,
        features,
        ids,
        UniformInt(lo_count, hi_count),
        Uniform(*delays),
        ScaledBeta(*cost_beta, cost_bound),
        seed=seed,
    )
    model = RatingRewardModel(
        {int(i): float(m) for i, m in zip(ids, means)}, ratings
    )
    return env, model


def load_finite_class(path: str | os.PathLike) -> list[TabulatedRegressor]:
    """Parse a tabulated regressor class: one column of values per member."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(1, "class file is empty") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "arm_id":
            raise SchemaError(1, "expected header arm_id, <member>, ...")
        names = header[1:]
        tables: list[dict[int, float]] = [dict() for _ in names]
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    line_no, f"expected {len(header)} columns, got {len(row)}"
                )
            try:
                arm = int(row[0])
                for k, v in enumerate(row[1:]):
                    tables[k][arm] = float(v)
            except ValueError as exc:
                raise SchemaError(line_no, str(exc)) from None
    if not tables[0]:
        raise EmptyCatalog(f"{path} has no rows")
    return [TabulatedRegressor(t, name) for t, name in zip(tables, names)]
