"""Contextual bandits with costly, delayed arm-set requests.

Library and CLI for simulating decision-set streams, solving for the optimal
average reward, running arm-filtering policies with known or estimated means,
and reproducing regret-curve experiments at desk scale.
"""

from .coaf import CoafState, coaf_step, ranked_residual, run_coaf
from .confidence import (
    FiniteClassState,
    RidgeState,
    eluder_dimension,
    finite_class_beta,
    finite_class_ucb,
    finite_class_update,
    linear_beta,
    linear_ucb,
    ridge_update,
)
from .env import (
    ArmContext,
    CatalogEnvironment,
    ConstraintSet,
    DecisionSet,
    EnvironmentSampler,
    FixedEnvironment,
    GaussianRewardModel,
    LinearRegressor,
    MortalEnvironment,
    ProblemSpec,
    RatingRewardModel,
    RewardModel,
    TabulatedRegressor,
    draw_reward,
    generate_catalog,
    mortal_preset,
    reference_preset,
    validate_spec,
)
from .errors import (
    BoundViolation,
    EmptyActionSpace,
    EmptyCatalog,
    EnvelopeExceeded,
    GridBeyondHorizon,
    SchemaError,
)
from .harness import (
    RegretCurve,
    accumulated_mean_reward,
    default_grid,
    emit_report,
    oaf_bound_curve,
    regret_curve,
    run_replications,
)
from .oaf import OafState, oaf_step, run_oaf
from .rate import (
    RankedMeans,
    RateEstimate,
    mortal_rate_grid,
    mortal_threshold_rate,
    optimal_residual,
    optimal_selection,
    rate_residual,
    selection_residual,
    solve_optimal_rate,
)
from .trace import Trace, TraceEvent

__version__ = "0.1.0"
