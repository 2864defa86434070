"""Bayesian optimization with per-iteration acquisition-generator policies."""

from .acquisitions import (
    DEFAULT_SEEDS,
    EI,
    LCB,
    PI,
    AcquisitionKind,
    Incumbent,
    PosteriorPrediction,
    ei_utility,
    evaluate_batch,
    lcb_utility,
    pi_utility,
)
from .benchmarks import BenchmarkSpec, benchmark_names, get_benchmark, make_objective, with_noise
from .bo import (
    Objective,
    RunConfig,
    RunError,
    Trace,
    TraceRecord,
    initial_design,
    propose_next,
    random_search,
    recommend,
    run_bo,
)
from .external import ExternalProcess, ProtocolError, external_objective
from .gp import (
    Dataset,
    FitError,
    GPModel,
    GPNumericsError,
    KernelParams,
    build_model,
    fit,
    kernel_eval,
    log_marginal_likelihood,
    predict,
    predict_batch,
)
from .harness import (
    ExperimentSpec,
    RegretReport,
    bootstrap_stats,
    regret_curve,
    run_experiment,
    verify_output,
)
from .meta import MetaConfig, meta_objective, meta_optimize, project_weights
from .policies import (
    HedgeState,
    PolicySpec,
    hedge_select,
    hedge_update,
    make_hedge_state,
    noised_utility,
    policy_name,
    random_choice,
    utilities_for_iteration,
    weighted_utility,
)

__version__ = "0.1.0"
