"""Lower bounds on terminal-time stochastic reach-avoid probabilities.

For a discrete-time stochastic LTI system, the probability of reaching a
target box at the end of a finite horizon while staying inside a safe box is
maximized over open-loop input sequences.  The optimum is a guaranteed lower
bound on the feedback (dynamic-programming) value, computed without any
gridding: the objective is a Gaussian rectangle probability evaluated by
randomized-lattice quadrature.  A gridded DP baseline and a Monte-Carlo
estimator are included for validation and certificates.
"""

__version__ = "0.1.0"

from .geometry import Box
from .mvn import (
    FactorizationError,
    GaussianVector,
    QuadConfig,
    QuadResult,
    cholesky_with_reorder,
    mvn_box_probability,
)
from .systems import (
    ConcatenatedDynamics,
    DisturbanceModel,
    GaussianDisturbance,
    LtiSystem,
    OpenLoopPolicy,
    ReachAvoidQuery,
    SamplerDisturbance,
    build_chain_of_integrators,
    build_concatenated,
    mean_covariance_of_X,
    simulate,
)
from .objective import (
    McEstimate,
    ReachAvoidObjective,
    StackedRegion,
    cf_X,
    pdf_via_cf_inversion,
    reach_avoid_probability,
    reach_avoid_probability_mc,
)
from .solvers import (
    SolveResult,
    SolverConfig,
    clamped_log_objective,
    initial_guess,
    maximize,
    maximize_direct_search,
    maximize_smooth_local,
)
from .dp import (
    GridMemoryError,
    GridSpec,
    ValueGrid,
    dp_solve,
    dp_value_at,
    load_value_grid,
    save_value_grid,
)

__all__ = [
    "__version__",
    "Box",
    "FactorizationError",
    "GaussianVector",
    "QuadConfig",
    "QuadResult",
    "cholesky_with_reorder",
    "mvn_box_probability",
    "ConcatenatedDynamics",
    "DisturbanceModel",
    "GaussianDisturbance",
    "LtiSystem",
    "OpenLoopPolicy",
    "ReachAvoidQuery",
    "SamplerDisturbance",
    "build_chain_of_integrators",
    "build_concatenated",
    "mean_covariance_of_X",
    "simulate",
    "McEstimate",
    "ReachAvoidObjective",
    "StackedRegion",
    "cf_X",
    "pdf_via_cf_inversion",
    "reach_avoid_probability",
    "reach_avoid_probability_mc",
    "SolveResult",
    "SolverConfig",
    "clamped_log_objective",
    "initial_guess",
    "maximize",
    "maximize_direct_search",
    "maximize_smooth_local",
    "GridMemoryError",
    "GridSpec",
    "ValueGrid",
    "dp_solve",
    "dp_value_at",
    "load_value_grid",
    "save_value_grid",
]
