"""Average-reward residuals, the optimal-rate solver, and the mortal oracle.

The driving quantity is the per-set residual of a candidate rate: the time
the set consumes priced at the rate, plus the request cost, minus the mean
reward collected. The optimal rate is the unique root of the expected
residual minimized over admissible selection counts, and a projected
Robbins-Monro iteration with cumulative-delay step sizes finds it from
sampled sets alone. For identical-reward geometric-lifetime streams the
optimum also has a closed threshold form, implemented here as an independent
cross-check.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .env import ConstraintSet, EnvironmentSampler, RewardModel
from .errors import EmptyActionSpace


@dataclass(frozen=True)
class RankedMeans:
    """Arm means sorted descending, keeping the original arm indices.

    Ties keep their original order, so rankings are reproducible bit for bit.
    """

    values: np.ndarray
    order: np.ndarray

    @classmethod
    def rank(cls, means: Sequence[float] | np.ndarray) -> "RankedMeans":
        arr = np.asarray(means, dtype=float)
        order = np.argsort(-arr, kind="stable")
        return cls(arr[order], order)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def top_indices(self, n: int) -> np.ndarray:
        return self.order[:n]


def selection_residual(
    gamma: float, delay: float, cost: float, selected_means: Sequence[float]
) -> float:
    """Residual of a rate against one concrete selection.

    Time consumed (delay plus one unit per selected arm) priced at ``gamma``,
    plus the request cost, minus the mean reward the selection collects.
    """
    means = np.asarray(selected_means, dtype=float)
    return (delay + means.size) * gamma + cost - float(means.sum())


def optimal_residual(
    gamma: float,
    delay: float,
    cost: float,
    ranked: RankedMeans,
    counts: ConstraintSet,
) -> tuple[float, int]:
    """Minimum residual over admissible selection counts.

    Returns the minimized value together with the minimizing count; ties go
    to the smallest admissible count, so arms whose mean exactly equals the
    rate are left unselected.
    """
    admissible = counts.admissible(ranked.size)
    if not admissible:
        raise EmptyActionSpace(ranked.size)
    prefix = np.concatenate(([0.0], np.cumsum(ranked.values)))
    best_value = np.inf
    best_count = admissible[0]
    for n in admissible:
        value = (delay + n) * gamma + cost - prefix[n]
        if value < best_value:
            best_value = value
            best_count = n
    return float(best_value), best_count


def optimal_selection(
    gamma: float,
    delay: float,
    cost: float,
    ranked: RankedMeans,
    counts: ConstraintSet,
) -> np.ndarray:
    """Arm indices of the residual-minimizing selection (the top-count arms)."""
    _, n = optimal_residual(gamma, delay, cost, ranked, counts)
    return ranked.top_indices(n)


@dataclass
class RateEstimate:
    """Projected running estimate of the optimal average reward.

    ``mass`` accumulates the step-size denominator: the request delay of each
    processed set, or one unit for zero-delay sets so the schedule stays
    finite on instant-request streams.
    """

    value: float
    mass: float
    radius: float
    history: list[float] | None = field(default=None, repr=False)

    def step(self, delay: float, residual: float, damping: float = 1.0) -> float:
        if delay < 0:
            raise ValueError("delay must be nonnegative")
        self.mass += delay if delay > 0 else 1.0
        moved = self.value - residual / (damping * self.mass)
        self.value = min(max(moved, -self.radius), self.radius)
        assert abs(self.value) <= self.radius + 1e-12
        if self.history is not None:
            self.history.append(self.value)
        return self.value


def solve_optimal_rate(
    env: EnvironmentSampler,
    model: RewardModel,
    iterations: int = 1_000_000,
    seed=0,
    *,
    chunk_size: int = 65536,
    history: list[float] | None = None,
) -> float:
    """Estimate the optimal average reward by projected stochastic approximation.

    One sampled set per iteration: the rate moves against that set's minimized
    residual, scaled by the reciprocal cumulative delay, and is projected back
    onto the admissible interval. The solver clones the stream with ``seed``
    and never draws rewards, so it is safe to run many solvers in parallel on
    clones of one environment.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    work = env.clone(seed)
    spec = work.spec
    counts = spec.counts
    radius = spec.eta
    explicit = (
        None
        if counts.kind != ConstraintSet.EXPLICIT
        else [counts.admissible(size) for size in range(spec.max_arms + 1)]
    )
    require_one = counts.kind == ConstraintSet.POSITIVE

    gamma = 0.0
    mass = 0.0
    remaining = iterations
    while remaining > 0:
        batch_n = min(chunk_size, remaining)
        batch = work.sample_mean_batch(model, batch_n)
        delays = batch.delays.tolist()
        batch_costs = batch.costs.tolist()
        asc = batch.means_ascending
        prefix = batch.top_prefix
        for i in range(batch_n):
            mu = asc[i]
            size = len(mu)
            if explicit is None:
                n = size - bisect_right(mu, gamma)
                if require_one and n == 0:
                    if size == 0:
                        raise EmptyActionSpace(0)
                    n = 1
                residual = (delays[i] + n) * gamma + batch_costs[i] - prefix[i][n]
            else:
                admissible = explicit[size]
                if not admissible:
                    raise EmptyActionSpace(size)
                residual = np.inf
                pre = prefix[i]
                for n in admissible:
                    value = (delays[i] + n) * gamma + batch_costs[i] - pre[n]
                    if value < residual:
                        residual = value
            delay = delays[i]
            mass += delay if delay > 0 else 1.0
            gamma -= residual / mass
            if gamma > radius:
                gamma = radius
            elif gamma < -radius:
                gamma = -radius
            if history is not None:
                history.append(gamma)
        remaining -= batch_n
    return gamma


def rate_residual(
    env: EnvironmentSampler,
    model: RewardModel,
    gamma: float,
    samples: int = 10_000,
    seed=0,
) -> float:
    """Monte-Carlo estimate of the expected minimized residual at a fixed rate.

    Near the optimal rate this is near zero; its sign says which side of the
    root the estimate sits on.
    """
    work = env.clone(seed)
    counts = work.spec.counts
    batch = work.sample_mean_batch(model, samples)
    total = 0.0
    for i in range(samples):
        ranked = RankedMeans(
            np.asarray(batch.means_ascending[i][::-1]),
            np.arange(len(batch.means_ascending[i])),
        )
        value, _ = optimal_residual(
            gamma, float(batch.delays[i]), float(batch.costs[i]), ranked, counts
        )
        total += value
    return total / samples


# ---------------------------------------------------------------------------
# Identical-reward geometric-lifetime (mortal) oracle.


def mortal_threshold_rate(
    threshold: float, samples: Sequence[float] | np.ndarray, mean_lifetime: float
) -> float:
    """Average reward of the threshold policy on a mortal stream.

    A set whose shared reward clears the threshold is exploited for its whole
    expected lifetime; every other set is abandoned after one mandatory pull.
    The empirical distribution of ``samples`` stands in for the reward law,
    with the right-continuous convention for the cumulative fraction. An empty
    tail above the threshold degenerates to the plain sample mean.
    """
    if mean_lifetime < 1:
        raise ValueError("mean lifetime must be at least 1")
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise ValueError("samples must be nonempty")
    mean = float(values.mean())
    tail = values[values >= threshold]
    if tail.size == 0:
        return mean
    above = float(np.mean(values > threshold))
    weight = above * (mean_lifetime - 1.0)
    return (mean + weight * float(tail.mean())) / (1.0 + weight)


def mortal_rate_grid(
    samples: Sequence[float] | np.ndarray,
    mean_lifetime: float,
    resolution: int = 1000,
) -> float:
    """Optimal mortal average reward by grid search over thresholds.

    The grid spans the sample range; the maximized threshold rate equals the
    optimal average reward of the corresponding identical-reward stream.
    """
    if resolution < 10:
        raise ValueError("resolution must be at least 10")
    values = np.asarray(samples, dtype=float)
    grid = np.linspace(values.min(), values.max(), resolution)
    return max(mortal_threshold_rate(x, values, mean_lifetime) for x in grid)
