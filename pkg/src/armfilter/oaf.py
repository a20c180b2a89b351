"""Arm filtering with a known mean function (the ``oaf`` policy).

Each arriving set is ranked by true means; the policy keeps the top arms for
the residual-minimizing count under the running rate estimate, then moves the
estimate one projected stochastic-approximation step against that residual.
With an unconstrained count set this reduces to thresholding: exactly the
arms whose mean strictly exceeds the current rate estimate are selected.
Rewards are drawn and logged for realism but never consulted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import ConstraintSet, DecisionSet, EnvironmentSampler, RewardModel, validate_spec
from .rate import RankedMeans, RateEstimate, optimal_residual
from .trace import REQUEST, SELECTION, Trace, TraceEvent, split_horizon


@dataclass
class OafState:
    """Mutable per-run state: rate estimate, set counter, and clock."""

    rate: RateEstimate
    counts: ConstraintSet
    sets_processed: int = 0
    clock: float = 0.0


def oaf_step(
    state: OafState,
    dset: DecisionSet,
    model: RewardModel,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[TraceEvent]]:
    """Process one decision set, mutating the state in place.

    Returns the selected arm indices and the timed events: the request
    completion after the set's delay, then one selection per unit time.
    """
    means = model.means(dset)
    ranked = RankedMeans.rank(means)
    residual, n = optimal_residual(
        state.rate.value, dset.delay, dset.cost, ranked, state.counts
    )
    selected = ranked.top_indices(n)
    j = state.sets_processed
    arrival = state.clock + dset.delay
    events = [
        TraceEvent(
            time=arrival,
            kind=REQUEST,
            set_index=j,
            delay=dset.delay,
            cost=dset.cost,
            gamma=state.rate.value,
        )
    ]
    rewards = model.draw_batch([dset.contexts[i] for i in selected], rng)
    for k, i in enumerate(selected):
        events.append(
            TraceEvent(
                time=arrival + k + 1,
                kind=SELECTION,
                set_index=j,
                arm=int(i),
                mean=float(means[i]),
                reward=float(rewards[k]),
            )
        )
    state.clock = arrival + n
    state.rate.step(dset.delay, residual)
    state.sets_processed += 1
    return selected, events


def run_oaf(
    env: EnvironmentSampler,
    model: RewardModel,
    horizon: float,
    seed=0,
) -> Trace:
    """Run the policy until the clock passes the horizon.

    The environment is consumed as passed (callers clone per replication);
    ``seed`` drives only the logged reward draws. Events completing after the
    horizon land in the trace's overflow.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    validate_spec(env.spec, env)
    rng = np.random.default_rng(seed)
    state = OafState(
        RateEstimate(0.0, 0.0, env.spec.eta), env.spec.counts
    )
    events: list[TraceEvent] = []
    while state.clock <= horizon:
        dset = env.sample_decision_set()
        _, step_events = oaf_step(state, dset, model, rng)
        events.extend(step_events)
    kept, dropped = split_horizon(events, horizon)
    return Trace(kept, horizon, state.clock, dropped)
