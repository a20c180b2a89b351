"""Problem data model and decision-set generators.

A problem instance is a stream of decision sets: batches of arms that become
available after a stochastic delay and charge a stochastic cost on arrival.
Each arm carries a feature vector; selecting an arm consumes one unit of time
and pays a noisy reward whose expectation is given by an unknown mean
function. ``ProblemSpec`` declares the bounds a stream promises to respect and
``validate_spec`` checks a generator's declared support against them before
anything consumes the stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import BoundViolation, EmptyActionSpace

_BOUND_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ArmContext:
    """Feature vector for one selectable arm, with an optional catalog id."""

    features: np.ndarray
    arm_id: int | None = None

    @property
    def dim(self) -> int:
        return int(self.features.shape[0])


class ConstraintSet:
    """Admissible selection-count set.

    Three flavors: every nonnegative count, every positive count, or an
    explicit finite set of counts. Membership is total over the nonnegative
    integers, so the symbolic flavors never need enumeration.
    """

    NONNEGATIVE = "nonnegative"
    POSITIVE = "positive"
    EXPLICIT = "explicit"

    __slots__ = ("kind", "values")

    def __init__(self, kind: str, values: Iterable[int] | None = None):
        if kind not in (self.NONNEGATIVE, self.POSITIVE, self.EXPLICIT):
            raise ValueError(f"unknown constraint-set kind {kind!r}")
        if kind == self.EXPLICIT:
            vals = frozenset(int(v) for v in (values or ()))
            if not vals:
                raise ValueError("explicit constraint set must be nonempty")
            if min(vals) < 0:
                raise ValueError("selection counts must be nonnegative")
            self.values: frozenset[int] | None = vals
        else:
            self.values = None
        self.kind = kind

    @classmethod
    def any_count(cls) -> "ConstraintSet":
        """Every count including zero is admissible."""
        return cls(cls.NONNEGATIVE)

    @classmethod
    def at_least_one(cls) -> "ConstraintSet":
        """Every positive count is admissible; empty selections are not."""
        return cls(cls.POSITIVE)

    @classmethod
    def explicit(cls, values: Iterable[int]) -> "ConstraintSet":
        return cls(cls.EXPLICIT, values)

    def __contains__(self, n: int) -> bool:
        if n < 0:
            return False
        if self.kind == self.NONNEGATIVE:
            return True
        if self.kind == self.POSITIVE:
            return n >= 1
        return n in self.values  # type: ignore[operator]

    def min_count(self) -> int:
        if self.kind == self.NONNEGATIVE:
            return 0
        if self.kind == self.POSITIVE:
            return 1
        return min(self.values)  # type: ignore[arg-type]

    def admissible(self, set_size: int) -> list[int]:
        """Sorted admissible counts for a decision set of ``set_size`` arms."""
        if self.kind == self.NONNEGATIVE:
            return list(range(set_size + 1))
        if self.kind == self.POSITIVE:
            return list(range(1, set_size + 1))
        return sorted(v for v in self.values if v <= set_size)  # type: ignore[union-attr]

    def next_admissible(self, n: int, set_size: int) -> int | None:
        """Smallest admissible count strictly above ``n``, or None."""
        if self.kind in (self.NONNEGATIVE, self.POSITIVE):
            return n + 1 if n + 1 <= set_size else None
        above = [v for v in self.values if n < v <= set_size]  # type: ignore[union-attr]
        return min(above) if above else None

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ConstraintSet)
            and self.kind == other.kind
            and self.values == other.values
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.values))

    def __repr__(self) -> str:
        if self.kind == self.EXPLICIT:
            return f"ConstraintSet.explicit({sorted(self.values)})"  # type: ignore[arg-type]
        return f"ConstraintSet({self.kind!r})"


@dataclass(frozen=True)
class ProblemSpec:
    """Declared bounds for a decision-set stream.

    ``delay_min`` may be zero only when the constraint set forces at least one
    selection per set, which keeps the clock advancing; the projection radius
    then falls back to ``1 + cost_bound`` instead of ``cost_bound/delay_min``.
    """

    max_arms: int
    delay_min: float
    delay_max: float
    cost_bound: float
    counts: ConstraintSet
    dim: int

    def __post_init__(self):
        if self.max_arms < 0:
            raise BoundViolation("max_arms", "must be nonnegative")
        if self.delay_min < 0:
            raise BoundViolation("delay_min", "must be nonnegative")
        if self.delay_max < self.delay_min:
            raise BoundViolation("delay_max", "must be at least delay_min")
        if self.cost_bound <= 0:
            raise BoundViolation("cost_bound", "must be positive")
        if self.dim < 1:
            raise BoundViolation("dim", "must be at least 1")
        if self.delay_min == 0 and self.counts.min_count() == 0:
            raise BoundViolation(
                "delay_min",
                "zero request delay requires a positive minimum selection count",
            )

    @property
    def eta(self) -> float:
        """Projection radius bounding the optimal average reward."""
        if self.delay_min > 0:
            return max(self.cost_bound / self.delay_min, 1.0)
        return 1.0 + self.cost_bound


@dataclass(eq=False)
class DecisionSet:
    """One requested batch of arms with its request delay and cost."""

    contexts: list[ArmContext]
    delay: float
    cost: float
    _features: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.contexts)

    def feature_matrix(self) -> np.ndarray:
        if self._features is None:
            if self.contexts:
                self._features = np.stack([c.features for c in self.contexts])
            else:
                self._features = np.empty((0, 0))
        return self._features


# ---------------------------------------------------------------------------
# Scalar distributions used to declare stream components.


@dataclass(frozen=True)
class Constant:
    value: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.value)

    def bounds(self) -> tuple[float, float]:
        return (self.value, self.value)


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, n)

    def bounds(self) -> tuple[float, float]:
        return (self.low, self.high)


@dataclass(frozen=True)
class UniformInt:
    """Uniform over the inclusive integer range [low, high]."""

    low: int
    high: int

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.integers(self.low, self.high + 1, n)

    def bounds(self) -> tuple[int, int]:
        return (self.low, self.high)


@dataclass(frozen=True)
class ScaledBeta:
    a: float
    b: float
    scale: float = 1.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.beta(self.a, self.b, n) * self.scale

    def bounds(self) -> tuple[float, float]:
        return (0.0, self.scale)


@dataclass(frozen=True)
class TruncatedGeometric:
    """Geometric lifetime with mean ``mean``, capped at ``cap``."""

    mean: float
    cap: int

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.minimum(rng.geometric(1.0 / self.mean, n), self.cap)

    def bounds(self) -> tuple[int, int]:
        return (1, self.cap)


# ---------------------------------------------------------------------------
# Mean functions and reward models.


class LinearRegressor:
    """Inner-product mean function over feature vectors."""

    __slots__ = ("theta",)

    def __init__(self, theta: np.ndarray):
        self.theta = np.asarray(theta, dtype=float)

    def __call__(self, x: ArmContext) -> float:
        return float(self.theta @ x.features)

    def on_matrix(self, features: np.ndarray) -> np.ndarray:
        if features.size == 0:
            return np.zeros(features.shape[0])
        return features @ self.theta


class TabulatedRegressor:
    """Mean function stored per arm id."""

    __slots__ = ("table", "name")

    def __init__(self, table: dict[int, float], name: str = ""):
        self.table = dict(table)
        self.name = name

    def __call__(self, x: ArmContext) -> float:
        if x.arm_id is None:
            raise ValueError("tabulated regressor needs contexts with arm ids")
        return self.table[x.arm_id]


class FirstFeatureRegressor:
    """Mean function reading the context's first coordinate directly."""

    __slots__ = ()

    def __call__(self, x: ArmContext) -> float:
        return float(x.features[0])


class RewardModel:
    """Mean function plus a reward-noise mechanism.

    Subclasses define ``draw``; the base class handles batched mean
    evaluation. Models are immutable; randomness comes from the generator
    passed to each draw.
    """

    def __init__(self, regressor: Callable[[ArmContext], float]):
        self.regressor = regressor

    def mean(self, x: ArmContext) -> float:
        return float(self.regressor(x))

    def means(self, dset: DecisionSet) -> np.ndarray:
        if isinstance(self.regressor, LinearRegressor):
            return self.regressor.on_matrix(dset.feature_matrix())
        return np.array([self.regressor(c) for c in dset.contexts], dtype=float)

    def catalog_means(
        self, features: np.ndarray, arm_ids: np.ndarray | None
    ) -> np.ndarray:
        """Mean of every arm in a catalog, vectorized where possible."""
        if isinstance(self.regressor, LinearRegressor):
            return self.regressor.on_matrix(features)
        if isinstance(self.regressor, TabulatedRegressor) and arm_ids is not None:
            return np.array([self.regressor.table[int(i)] for i in arm_ids])
        ids = arm_ids if arm_ids is not None else [None] * len(features)
        return np.array(
            [self.regressor(ArmContext(f, i)) for f, i in zip(features, ids)]
        )

    def draw(self, x: ArmContext, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def draw_batch(
        self, contexts: Sequence[ArmContext], rng: np.random.Generator
    ) -> np.ndarray:
        return np.array([self.draw(c, rng) for c in contexts], dtype=float)


class GaussianRewardModel(RewardModel):
    """Rewards are the mean plus centered Gaussian noise (sigma=0 allowed)."""

    def __init__(self, regressor: Callable[[ArmContext], float], noise_sigma: float = 1.0):
        super().__init__(regressor)
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        self.noise_sigma = float(noise_sigma)

    def draw(self, x: ArmContext, rng: np.random.Generator) -> float:
        value = self.mean(x)
        if self.noise_sigma:
            value += self.noise_sigma * rng.standard_normal()
        return float(value)

    def draw_batch(
        self, contexts: Sequence[ArmContext], rng: np.random.Generator
    ) -> np.ndarray:
        means = np.array([self.mean(c) for c in contexts], dtype=float)
        if self.noise_sigma and len(contexts):
            means = means + self.noise_sigma * rng.standard_normal(len(contexts))
        return means


class RatingRewardModel(RewardModel):
    """Rewards are drawn uniformly from a stored per-arm rating list.

    Arms with no stored ratings fall back to their tabulated mean, which keeps
    single-arm test catalogs usable without a ratings file.
    """

    def __init__(self, means: dict[int, float], ratings: dict[int, np.ndarray]):
        super().__init__(TabulatedRegressor(means))
        self.ratings = {k: np.asarray(v, dtype=float) for k, v in ratings.items()}

    def draw(self, x: ArmContext, rng: np.random.Generator) -> float:
        stored = self.ratings.get(x.arm_id if x.arm_id is not None else -1)
        if stored is None or stored.size == 0:
            return self.mean(x)
        return float(stored[rng.integers(stored.size)])


# ---------------------------------------------------------------------------
# Decision-set generators.


class Support(NamedTuple):
    """Declared support bounds of a stream: arm counts, delays, costs."""

    arm_counts: tuple[int, int]
    delays: tuple[float, float]
    costs: tuple[float, float]


class MeanBatch(NamedTuple):
    """Solver-facing batch: delays, costs, and per-set sorted mean summaries.

    ``means_ascending[i]`` lists the set's arm means in ascending order;
    ``top_prefix[i][n]`` is the sum of the n largest means (index 0 is 0.0).
    """

    delays: np.ndarray
    costs: np.ndarray
    means_ascending: list[list[float]]
    top_prefix: list[list[float]]


class EnvironmentSampler:
    """Seeded IID decision-set stream with declared support bounds.

    A sampler is immutable after construction except for its generator
    cursor, and is meant to be confined to a single replication; parallel
    replications clone it with derived seeds.
    """

    def __init__(self, spec: ProblemSpec, seed=0):
        self.spec = spec
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def sample_decision_set(self) -> DecisionSet:
        raise NotImplementedError

    def clone(self, seed) -> "EnvironmentSampler":
        raise NotImplementedError

    def support(self) -> Support:
        raise NotImplementedError

    def sample_mean_batch(self, model: RewardModel, count: int) -> MeanBatch:
        """Batched (delay, cost, sorted means) draws for the rate solver.

        The fallback materializes decision sets one by one; generators with
        vectorizable structure override this.
        """
        delays = np.empty(count)
        costs = np.empty(count)
        asc: list[list[float]] = []
        prefix: list[list[float]] = []
        for i in range(count):
            dset = self.sample_decision_set()
            delays[i] = dset.delay
            costs[i] = dset.cost
            mu = np.sort(model.means(dset))
            asc.append(mu.tolist())
            prefix.append(_top_prefix(mu))
        return MeanBatch(delays, costs, asc, prefix)


def _top_prefix(mu_ascending: np.ndarray) -> list[float]:
    out = [0.0]
    total = 0.0
    for v in mu_ascending[::-1]:
        total += float(v)
        out.append(total)
    return out


class FixedEnvironment(EnvironmentSampler):
    """Point-mass stream: every draw returns the same decision set."""

    def __init__(
        self,
        spec: ProblemSpec,
        features: np.ndarray,
        delay: float,
        cost: float,
        seed=0,
    ):
        super().__init__(spec, seed)
        self.features = np.atleast_2d(np.asarray(features, dtype=float))
        self.delay = float(delay)
        self.cost = float(cost)
        self._contexts = [
            ArmContext(self.features[i], i) for i in range(self.features.shape[0])
        ]

    def sample_decision_set(self) -> DecisionSet:
        return DecisionSet(list(self._contexts), self.delay, self.cost)

    def clone(self, seed) -> "FixedEnvironment":
        return FixedEnvironment(self.spec, self.features, self.delay, self.cost, seed)

    def support(self) -> Support:
        n = self.features.shape[0]
        return Support((n, n), (self.delay, self.delay), (self.cost, self.cost))


class CatalogEnvironment(EnvironmentSampler):
    """Decision sets drawn without replacement from a fixed arm catalog."""

    def __init__(
        self,
        spec: ProblemSpec,
        features: np.ndarray,
        arm_ids: np.ndarray | None,
        arm_count_dist,
        delay_dist,
        cost_dist,
        seed=0,
    ):
        super().__init__(spec, seed)
        self.features = np.asarray(features, dtype=float)
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise ValueError("catalog features must be a nonempty 2-D array")
        self.arm_ids = None if arm_ids is None else np.asarray(arm_ids)
        self.arm_count_dist = arm_count_dist
        self.delay_dist = delay_dist
        self.cost_dist = cost_dist
        if arm_count_dist.bounds()[1] > self.features.shape[0]:
            raise ValueError("arm count range exceeds catalog size")
        self._contexts = [
            ArmContext(
                self.features[i],
                int(self.arm_ids[i]) if self.arm_ids is not None else i,
            )
            for i in range(self.features.shape[0])
        ]

    @property
    def catalog_size(self) -> int:
        return self.features.shape[0]

    def sample_decision_set(self) -> DecisionSet:
        rng = self._rng
        size = int(self.arm_count_dist.sample(rng, 1)[0])
        idx = rng.choice(self.catalog_size, size=size, replace=False)
        delay = float(self.delay_dist.sample(rng, 1)[0])
        cost = float(self.cost_dist.sample(rng, 1)[0])
        return DecisionSet(
            [self._contexts[i] for i in idx], delay, cost, self.features[idx]
        )

    def clone(self, seed) -> "CatalogEnvironment":
        return CatalogEnvironment(
            self.spec,
            self.features,
            self.arm_ids,
            self.arm_count_dist,
            self.delay_dist,
            self.cost_dist,
            seed,
        )

    def support(self) -> Support:
        lo, hi = self.arm_count_dist.bounds()
        return Support(
            (int(lo), int(hi)), self.delay_dist.bounds(), self.cost_dist.bounds()
        )

    def sample_mean_batch(self, model: RewardModel, count: int) -> MeanBatch:
        rng = self._rng
        n_cat = self.catalog_size
        sizes = self.arm_count_dist.sample(rng, count).astype(int)
        max_size = int(sizes.max()) if count else 0
        # With-replacement draw, then redraw any row that collides; conditioned
        # on distinctness the first draw is already uniform without replacement.
        idx = rng.integers(0, n_cat, size=(count, max_size))
        sorted_idx = np.sort(idx, axis=1)
        dup_rows = np.nonzero((np.diff(sorted_idx, axis=1) == 0).any(axis=1))[0]
        for r in dup_rows:
            idx[r] = rng.choice(n_cat, size=max_size, replace=False)
        cat_means = model.catalog_means(self.features, self.arm_ids)
        mu = cat_means[idx]
        cols = np.arange(max_size)
        mu[cols[None, :] >= sizes[:, None]] = -np.inf
        mu_desc = -np.sort(-mu, axis=1)
        prefix = np.zeros((count, max_size + 1))
        np.cumsum(np.where(np.isfinite(mu_desc), mu_desc, 0.0), axis=1, out=prefix[:, 1:])
        delays = self.delay_dist.sample(rng, count)
        costs = self.cost_dist.sample(rng, count)
        asc = [row[size - 1 :: -1].tolist() if size else [] for row, size in zip(mu_desc, sizes)]
        pre = [row[: size + 1].tolist() for row, size in zip(prefix, sizes)]
        return MeanBatch(delays, costs, asc, pre)


class MortalEnvironment(EnvironmentSampler):
    """Identical-reward sets with geometric lifetimes and free, instant requests.

    Every arm in a set shares one reward value, drawn uniformly from
    ``reward_values``; the set size is a capped geometric lifetime. Requests
    take no time and cost nothing, so the constraint set must force at least
    one selection per set.
    """

    def __init__(
        self,
        mean_lifetime: float,
        reward_values: Sequence[float],
        cap: int = 64,
        seed=0,
    ):
        if mean_lifetime < 1:
            raise ValueError("mean lifetime must be at least 1")
        values = np.asarray(reward_values, dtype=float)
        if values.size == 0:
            raise ValueError("reward_values must be nonempty")
        spec = ProblemSpec(
            max_arms=cap,
            delay_min=0.0,
            delay_max=0.0,
            cost_bound=1e-3,
            counts=ConstraintSet.at_least_one(),
            dim=1,
        )
        super().__init__(spec, seed)
        self.mean_lifetime = float(mean_lifetime)
        self.reward_values = values
        self.lifetime_dist = TruncatedGeometric(mean_lifetime, cap)

    def sample_decision_set(self) -> DecisionSet:
        rng = self._rng
        size = int(self.lifetime_dist.sample(rng, 1)[0])
        value = float(self.reward_values[rng.integers(self.reward_values.size)])
        ctx = ArmContext(np.array([value]))
        return DecisionSet([ctx] * size, 0.0, 0.0)

    def clone(self, seed) -> "MortalEnvironment":
        env = MortalEnvironment(
            self.mean_lifetime, self.reward_values, self.spec.max_arms, seed
        )
        return env

    def support(self) -> Support:
        return Support((1, self.spec.max_arms), (0.0, 0.0), (0.0, 0.0))

    def sample_mean_batch(self, model: RewardModel, count: int) -> MeanBatch:
        rng = self._rng
        sizes = self.lifetime_dist.sample(rng, count)
        values = self.reward_values[rng.integers(self.reward_values.size, size=count)]
        delays = np.zeros(count)
        costs = np.zeros(count)
        asc: list[list[float]] = []
        prefix: list[list[float]] = []
        for size, value in zip(sizes.tolist(), values.tolist()):
            asc.append([value] * size)
            prefix.append([value * k for k in range(size + 1)])
        return MeanBatch(delays, costs, asc, prefix)


# ---------------------------------------------------------------------------
# Validation and presets.


def validate_spec(spec: ProblemSpec, env: EnvironmentSampler) -> None:
    """Check a stream's declared support against the spec bounds.

    Raises ``BoundViolation`` when a support bound escapes the declared
    envelope and ``EmptyActionSpace`` when some supported set size admits no
    selection count.
    """
    sup = env.support()
    lo, hi = sup.arm_counts
    if lo < 0:
        raise BoundViolation("arm_counts", "set sizes must be nonnegative")
    if hi > spec.max_arms:
        raise BoundViolation(
            "max_arms", f"support allows {hi} arms, spec bound is {spec.max_arms}"
        )
    dlo, dhi = sup.delays
    if dlo < spec.delay_min - _BOUND_TOL:
        raise BoundViolation(
            "delay_min", f"support delay {dlo} below declared floor {spec.delay_min}"
        )
    if dhi > spec.delay_max + _BOUND_TOL:
        raise BoundViolation(
            "delay_max", f"support delay {dhi} above declared cap {spec.delay_max}"
        )
    clo, chi = sup.costs
    if max(abs(clo), abs(chi)) > spec.cost_bound + _BOUND_TOL:
        raise BoundViolation(
            "cost_bound",
            f"support cost magnitude {max(abs(clo), abs(chi))} above bound {spec.cost_bound}",
        )
    for size in range(lo, hi + 1):
        if not spec.counts.admissible(size):
            raise EmptyActionSpace(size)


def draw_reward(model: RewardModel, x: ArmContext, rng: np.random.Generator) -> float:
    """Sample one reward for an arm; expectation equals the model mean."""
    return model.draw(x, rng)


def unit_ball(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Vectors drawn uniformly from the Euclidean unit ball."""
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = rng.random(count) ** (1.0 / dim)
    return g * radii[:, None]


def generate_catalog(
    count: int = 3000, dim: int = 5, seed=0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Synthetic linear catalog: unit-ball features, parameter, true means."""
    rng = np.random.default_rng(seed)
    features = unit_ball(count, dim, rng)
    theta = unit_ball(1, dim, rng)[0]
    return features, theta, features @ theta


def reference_preset(
    instance_seed=0,
    *,
    catalog_size: int = 3000,
    dim: int = 5,
    arm_counts: tuple[int, int] = (6, 20),
    delays: tuple[float, float] = (5.0, 10.0),
    cost_beta: tuple[float, float] = (2.0, 3.0),
    noise_sigma: float = 1.0,
    counts: ConstraintSet | None = None,
    stream_seed=None,
) -> tuple[CatalogEnvironment, GaussianRewardModel]:
    """Reference simulation setup over a synthetic linear catalog.

    Set sizes are uniform on an integer range, request delays uniform on an
    interval, request costs beta-distributed on [0, 1], and rewards are linear
    means plus unit Gaussian noise. The instance seed fixes the catalog and
    parameter; the stream seed fixes the draw sequence.
    """
    features, theta, _ = generate_catalog(catalog_size, dim, instance_seed)
    spec = ProblemSpec(
        max_arms=arm_counts[1],
        delay_min=delays[0],
        delay_max=delays[1],
        cost_bound=1.0,
        counts=counts if counts is not None else ConstraintSet.any_count(),
        dim=dim,
    )
    env = CatalogEnvironment(
        spec,
        features,
        None,
        UniformInt(*arm_counts),
        Uniform(*delays),
        ScaledBeta(*cost_beta),
        seed=instance_seed if stream_seed is None else stream_seed,
    )
    model = GaussianRewardModel(LinearRegressor(theta), noise_sigma)
    return env, model


def mortal_preset(
    mean_lifetime: float,
    reward_values: Sequence[float],
    cap: int = 64,
    seed=0,
) -> tuple[MortalEnvironment, GaussianRewardModel]:
    """Identical-reward geometric-lifetime setup with a noiseless model."""
    env = MortalEnvironment(mean_lifetime, reward_values, cap, seed)
    model = GaussianRewardModel(FirstFeatureRegressor(), 0.0)
    return env, model
