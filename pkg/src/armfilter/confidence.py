"""Confidence-set backends producing per-context upper confidence bounds.

Two backends: a ridge-regression state over feature vectors whose index is
the classic optimistic linear score, and a finite regressor class whose
feasible members sit inside a squared-distance ball around the running
least-squares minimizer. A brute-force eluder-dimension search is included as
a test utility for small finite classes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .env import ArmContext
from .errors import EnvelopeExceeded

_NORM_TOL = 1e-9


@dataclass
class RidgeState:
    """Regularized least-squares state for a linear mean function.

    The design matrix starts at ``lam`` times the identity and is
    re-symmetrized after every rank-one update; the point estimate is
    recomputed from (V, b) by a direct solve on every query rather than by an
    incremental inverse.
    """

    dim: int
    lam: float = 1.0
    delta: float = 0.05
    V: np.ndarray = field(init=False)
    b: np.ndarray = field(init=False)
    nu: int = field(default=0, init=False)

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        self.V = self.lam * np.eye(self.dim)
        self.b = np.zeros(self.dim)

    @property
    def theta_hat(self) -> np.ndarray:
        return np.linalg.solve(self.V, self.b)

    @property
    def beta(self) -> float:
        return linear_beta(self.nu, self.lam, self.delta, self.dim)


def linear_beta(nu: int, lam: float, delta: float, dim: int) -> float:
    """Squared confidence radius for the ridge estimate after ``nu`` samples."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if lam <= 0:
        raise ValueError("lam must be positive")
    root = math.sqrt(lam) + math.sqrt(
        2.0 * math.log(1.0 / delta) + dim * math.log((dim * lam + nu) / (dim * lam))
    )
    return root * root


def _check_norm(x: np.ndarray) -> None:
    if float(x @ x) > (1.0 + _NORM_TOL) ** 2:
        raise ValueError("context norm exceeds 1")


def ridge_update(state: RidgeState, x: np.ndarray, y: float) -> RidgeState:
    """Rank-one update with one observed (feature, reward) pair."""
    x = np.asarray(x, dtype=float)
    _check_norm(x)
    state.V += np.outer(x, x)
    state.V = 0.5 * (state.V + state.V.T)
    state.b += y * x
    state.nu += 1
    return state


def linear_ucb(state: RidgeState, x: np.ndarray) -> float:
    """Optimistic score: point estimate plus width in the design norm."""
    x = np.asarray(x, dtype=float)
    _check_norm(x)
    w = np.linalg.solve(state.V, x)
    width = math.sqrt(max(float(x @ w), 0.0))
    return float(state.b @ w) + math.sqrt(state.beta) * width


def linear_ucb_batch(state: RidgeState, features: np.ndarray) -> np.ndarray:
    """Optimistic scores for several feature vectors in one solve."""
    if features.shape[0] == 0:
        return np.zeros(0)
    # One solve covers the widths and the point estimate (last column).
    rhs = np.empty((state.dim, features.shape[0] + 1))
    rhs[:, :-1] = features.T
    rhs[:, -1] = state.b
    W = np.linalg.solve(state.V, rhs)
    widths = np.sqrt(np.maximum((features * W[:, :-1].T).sum(axis=1), 0.0))
    return features @ W[:, -1] + math.sqrt(state.beta) * widths


@dataclass
class FiniteClassState:
    """Loss table over a finite regressor class.

    Tracks cumulative squared loss per member, the pairwise squared
    divergence accumulated over the observed contexts, and the last
    increment separately: the feasibility ball is measured over all but the
    most recent observation, while the loss minimizer uses the full history.
    """

    members: list[Callable[[ArmContext], float]]
    delta: float = 0.05
    alpha: float = 0.0
    nu: int = field(default=0, init=False)
    losses: np.ndarray = field(init=False)
    pair_sq: np.ndarray = field(init=False)
    last_sq: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.members:
            raise ValueError("regressor class must be nonempty")
        if not 0 < self.delta <= math.exp(-0.5):
            raise ValueError("delta must lie in (0, exp(-1/2)]")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        m = len(self.members)
        self.losses = np.zeros(m)
        self.pair_sq = np.zeros((m, m))
        self.last_sq = np.zeros((m, m))

    @property
    def covering_count(self) -> int:
        # Exact cover for a finite class at any resolution.
        return len(self.members)

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.losses))

    @property
    def beta(self) -> float:
        return finite_class_beta(self.nu, self.covering_count, self.delta, self.alpha)

    def feasible_mask(self) -> np.ndarray:
        """Members within the squared-distance ball around the loss minimizer."""
        center = self.best_index
        distances = self.pair_sq[:, center] - self.last_sq[:, center]
        return distances <= self.beta + 1e-12

    def predictions(self, x: ArmContext) -> np.ndarray:
        return np.array([psi(x) for psi in self.members], dtype=float)


def finite_class_beta(nu: int, covering_count: int, delta: float, alpha: float) -> float:
    """Feasibility-ball radius for a class with the given covering count."""
    if not 0 < delta <= math.exp(-0.5):
        raise ValueError("delta must lie in (0, exp(-1/2)]")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if covering_count < 1:
        raise ValueError("covering_count must be at least 1")
    base = 8.0 * math.log(covering_count / delta)
    if nu == 0 or alpha == 0.0:
        return base
    return base + 2.0 * alpha * nu * (
        8.0 + math.sqrt(8.0 * math.log(4.0 * nu * nu / delta))
    )


def finite_class_update(state: FiniteClassState, x: ArmContext, y: float) -> FiniteClassState:
    """Record one observed (context, reward) pair against every member."""
    values = state.predictions(x)
    state.losses += (values - y) ** 2
    diff = values[:, None] - values[None, :]
    state.last_sq = diff * diff
    state.pair_sq += state.last_sq
    state.nu += 1
    return state


def finite_class_ucb(state: FiniteClassState, x: ArmContext) -> float:
    """Largest prediction among feasible members; never below the minimizer's."""
    values = state.predictions(x)
    return float(values[state.feasible_mask()].max())


def finite_class_ucb_batch(
    state: FiniteClassState, contexts: Sequence[ArmContext]
) -> np.ndarray:
    if not contexts:
        return np.zeros(0)
    mask = state.feasible_mask()
    table = np.stack([state.predictions(c) for c in contexts])
    return table[:, mask].max(axis=1)


# ---------------------------------------------------------------------------
# Brute-force eluder dimension for small finite classes.

_MAX_CONTEXTS = 8
_MAX_MEMBERS = 16


def eluder_dimension(
    members: Sequence[Callable[[ArmContext], float]],
    contexts: Sequence[ArmContext],
    epsilon: float,
) -> int:
    """Exhaustive eluder dimension of a finite class on a finite context set.

    Searches every threshold above ``epsilon`` at which some context can
    still be distinguished: a context extends a sequence when two members
    agree within the threshold on the sequence yet differ by more than the
    threshold on the context. A class of identical members has dimension
    zero, since no pair ever differs anywhere.
    """
    if len(contexts) > _MAX_CONTEXTS or len(members) > _MAX_MEMBERS:
        raise EnvelopeExceeded(
            f"supported envelope is {_MAX_CONTEXTS} contexts and {_MAX_MEMBERS} members"
        )
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if not members or not contexts:
        return 0

    q = len(contexts)
    table = np.array([[psi(x) for x in contexts] for psi in members], dtype=float)
    m = len(members)
    pairs = [(a, b) for a in range(m) for b in range(m) if a != b]
    if not pairs:
        return 0
    # gaps[p, x]: signed prediction difference of ordered pair p at context x.
    gaps = np.array([table[a] - table[b] for a, b in pairs])
    sq = gaps * gaps

    # subset_sq[mask, p]: squared divergence of pair p over the context subset.
    subset_sq = np.zeros((1 << q, len(pairs)))
    for mask in range(1, 1 << q):
        low = mask & -mask
        subset_sq[mask] = subset_sq[mask ^ low] + sq[:, low.bit_length() - 1]

    criticals = np.unique(
        np.concatenate([np.sqrt(subset_sq).ravel(), gaps[gaps > 0].ravel()])
    )
    thresholds = [c for c in criticals.tolist() if c > epsilon]
    scan = list(thresholds)
    for a, b in zip(thresholds, thresholds[1:]):
        scan.append(0.5 * (a + b))
    if thresholds:
        scan.append(0.5 * (epsilon + thresholds[0]))
        scan.append(thresholds[-1] + 1.0)
    else:
        scan.append(epsilon + 1.0)

    best = 0
    for eps_prime in scan:
        ok_sq = eps_prime * eps_prime
        memo: dict[int, int] = {}

        def longest(mask: int) -> int:
            cached = memo.get(mask)
            if cached is not None:
                return cached
            within = subset_sq[mask] <= ok_sq
            result = 0
            for x in range(q):
                if mask & (1 << x):
                    continue
                if np.any(within & (gaps[:, x] > eps_prime)):
                    result = max(result, 1 + longest(mask | (1 << x)))
            memo[mask] = result
            return result

        best = max(best, longest(0))
        if best == q:
            break
    return best
