"""Arm filtering driven by upper confidence bounds (the ``coaf`` policy).

The structure mirrors the known-mean filter, with optimistic scores standing
in for the unknown means. Arms in a set are ranked by current scores and
selected one at a time, highest score first; after each observation the
backend is updated and the scores of still-unvisited arms are recomputed and
reranked. Selection advances to the next admissible count while some larger
admissible count has a strictly smaller ranked residual (and is forced
forward while the running count is itself inadmissible). The rate update uses
the residual at the final count with each selected arm priced at the score it
had when chosen, scaled by a damping factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .confidence import (
    FiniteClassState,
    RidgeState,
    finite_class_ucb_batch,
    finite_class_update,
    linear_ucb_batch,
    ridge_update,
)
from .env import ConstraintSet, DecisionSet, EnvironmentSampler, RewardModel, validate_spec
from .errors import EmptyActionSpace
from .rate import RateEstimate
from .trace import REQUEST, SELECTION, Trace, TraceEvent, split_horizon


def ranked_residual(
    n: int,
    gamma: float,
    scores: Sequence[float] | np.ndarray,
    ranking: Sequence[int] | np.ndarray,
    delay: float,
    cost: float,
) -> float:
    """Residual of a rate against keeping the top ``n`` arms of a ranking.

    ``scores[ranking[i]]`` is the value attributed to the rank-``i`` arm:
    recorded-at-selection scores for arms already taken, current scores for
    the rest. Adjacent counts differ by exactly ``gamma`` minus the next
    ranked score.
    """
    scores = np.asarray(scores, dtype=float)
    ranking = np.asarray(ranking, dtype=int)
    top = float(scores[ranking[:n]].sum()) if n else 0.0
    return (delay + n) * gamma + cost - top


class _LinearBackend:
    """Ridge state adapter working on a set's feature matrix."""

    def __init__(self, state: RidgeState):
        self.state = state

    def scores(self, features: np.ndarray, rows: np.ndarray) -> np.ndarray:
        return linear_ucb_batch(self.state, features[rows])

    def update(self, dset: DecisionSet, arm: int, reward: float) -> None:
        ridge_update(self.state, dset.contexts[arm].features, reward)


class _FiniteBackend:
    """Finite-class state adapter working on the set's contexts."""

    def __init__(self, state: FiniteClassState):
        self.state = state

    def scores(self, dset_contexts, rows: np.ndarray) -> np.ndarray:
        return finite_class_ucb_batch(self.state, [dset_contexts[i] for i in rows])

    def update(self, dset: DecisionSet, arm: int, reward: float) -> None:
        finite_class_update(self.state, dset.contexts[arm], reward)


def _wrap_backend(backend):
    if isinstance(backend, RidgeState):
        return _LinearBackend(backend)
    if isinstance(backend, FiniteClassState):
        return _FiniteBackend(backend)
    raise TypeError("backend must be a RidgeState or FiniteClassState")


@dataclass
class CoafState:
    """Mutable per-run state: rate estimate, confidence backend, damping."""

    rate: RateEstimate
    backend: RidgeState | FiniteClassState
    counts: ConstraintSet
    xi: float
    sets_processed: int = 0
    clock: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.xi <= 1.0:
            raise ValueError("xi must lie in (0, 1]")


def coaf_step(
    state: CoafState,
    dset: DecisionSet,
    model: RewardModel,
    rng: np.random.Generator,
) -> tuple[list[int], list[TraceEvent]]:
    """Process one decision set, mutating state and backend in place."""
    backend = _wrap_backend(state.backend)
    linear = isinstance(state.backend, RidgeState)
    source = dset.feature_matrix() if linear else dset.contexts
    size = dset.size
    gamma = state.rate.value

    explicit = state.counts.kind == ConstraintSet.EXPLICIT
    unvisited = np.arange(size)
    current = backend.scores(source, unvisited) if size else np.zeros(0)
    taken: list[int] = []
    recorded: list[float] = []
    rewards: list[float] = []
    n = 0
    while True:
        admissible_above = _counts_above(state.counts, n, size)
        if n in state.counts:
            if not admissible_above:
                break
            # Strict improvement test against every larger admissible count,
            # with unvisited ranks priced at their current scores. For
            # contiguous count sets this collapses to the best unvisited
            # score beating the rate.
            if not explicit:
                if float(current.max()) <= gamma:
                    break
            else:
                ordered = -np.sort(-current)
                gains = np.concatenate(([0.0], np.cumsum(ordered)))
                if not any(
                    gains[m - n] > (m - n) * gamma for m in admissible_above
                ):
                    break
        elif not admissible_above:
            raise EmptyActionSpace(size)
        target = admissible_above[0]
        while n < target:
            pick = int(np.argmax(current))
            arm = int(unvisited[pick])
            taken.append(arm)
            recorded.append(float(current[pick]))
            reward = model.draw(dset.contexts[arm], rng)
            rewards.append(reward)
            backend.update(dset, arm, reward)
            unvisited = np.delete(unvisited, pick)
            current = backend.scores(source, unvisited)
            n += 1

    # Residual at the final count: selected arms priced at recorded scores,
    # unvisited arms ranked behind them by current score.
    scores = np.concatenate((np.asarray(recorded), -np.sort(-current)))
    ranking = np.arange(len(scores))
    residual = ranked_residual(n, gamma, scores, ranking, dset.delay, dset.cost)

    j = state.sets_processed
    arrival = state.clock + dset.delay
    means = model.means(dset)
    events = [
        TraceEvent(
            time=arrival,
            kind=REQUEST,
            set_index=j,
            delay=dset.delay,
            cost=dset.cost,
            gamma=gamma,
        )
    ]
    for k, arm in enumerate(taken):
        events.append(
            TraceEvent(
                time=arrival + k + 1,
                kind=SELECTION,
                set_index=j,
                arm=arm,
                mean=float(means[arm]),
                reward=rewards[k],
            )
        )
    state.clock = arrival + n
    state.rate.step(dset.delay, residual, damping=state.xi)
    state.sets_processed += 1
    return taken, events


def _counts_above(counts: ConstraintSet, n: int, size: int) -> list[int]:
    """Admissible counts strictly above ``n`` for a set of ``size`` arms."""
    if counts.kind == ConstraintSet.EXPLICIT:
        return sorted(v for v in counts.values if n < v <= size)
    start = max(n + 1, 1 if counts.kind == ConstraintSet.POSITIVE else 0)
    return list(range(start, size + 1))


def run_coaf(
    env: EnvironmentSampler,
    model: RewardModel,
    backend: RidgeState | FiniteClassState,
    horizon: float,
    xi: float = 0.5,
    seed=0,
) -> Trace:
    """Run the confidence-bound filter until the clock passes the horizon.

    The backend persists across sets and is mutated in place. ``xi`` damps
    the rate update; the closed boundary value 1 disables damping, which
    makes a singleton class containing the true mean function replay the
    known-mean filter exactly.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    validate_spec(env.spec, env)
    rng = np.random.default_rng(seed)
    state = CoafState(
        RateEstimate(0.0, 0.0, env.spec.eta), backend, env.spec.counts, xi
    )
    events: list[TraceEvent] = []
    while state.clock <= horizon:
        dset = env.sample_decision_set()
        _, step_events = coaf_step(state, dset, model, rng)
        events.extend(step_events)
    kept, dropped = split_horizon(events, horizon)
    return Trace(kept, horizon, state.clock, dropped)
