"""Sequential model-based optimization for expensive black-box objectives."""

from .acquisition import (
    AcquisitionSpec,
    BetaSchedule,
    SearchStrategy,
    acq_ei,
    acq_lcb,
    acq_pi,
    acq_thompson,
    acq_ucb,
    beta_compact,
    beta_finite,
    fantasize,
    maximize_acquisition,
)
from .benchmarks import (
    BenchmarkConfig,
    CurveTable,
    estimate_optimum,
    export_curves,
    random_search,
    resolve_objective,
    run_benchmark,
    wavy2d,
    wavy2d_space,
)
from .errors import (
    ConflictError,
    InvalidInputError,
    NotFoundError,
    NumericalError,
    SeqboError,
    StateError,
)
from .gp import (
    BasisMean,
    ConstantMean,
    FitConfig,
    GPHyperparams,
    GPModel,
    LinearMean,
    PosteriorGaussian,
    ZeroMean,
    blr_predict,
    fit_hyperparams,
    gp_condition_general,
    gp_fit,
    gp_posterior,
    log_marginal_likelihood,
    sample_posterior,
)
from .kernels import (
    CategoricalOverlap,
    Kernel,
    LinearKernel,
    Matern,
    Periodic,
    Product,
    Rbf,
    Scale,
    Sum,
    kernel_eval,
    kernel_from_config,
    kernel_matrix,
)
from .simplex import SimplexBounds, simplex_feasible, simplex_forward, simplex_inverse
from .space import DesignSpace, ParamSpec
from .storage import StudyRecord, StudyStore
from .study import (
    AcquisitionFloor,
    Budget,
    MinImprovement,
    Observation,
    RegretTrace,
    Study,
    StudyConfig,
    canonical_history_json,
    default_kernel,
    init_design,
    regret_trace,
    run,
    run_gp_ucb,
    should_stop,
    study_from_dict,
    study_to_dict,
)

__version__ = "0.1.0"
