"""Adaptive Metropolis-Hastings samplers with ergodicity diagnostics.

The package provides two adaptive random-walk samplers (covariance
learning from the chain history, and rank-one shape adaptation with
acceptance-targeted scale control under a conserved determinant), the
affine-invariant metric on symmetric positive definite matrices that
measures shape-matrix movement, empirical checks for the boundedness and
diminishing-adaptation conditions adaptive chains must satisfy, and a
seeded multi-chain experiment harness with reproducible CSV traces.

Two interchangeable chain-loop backends exist: a compiled extension and a
pure-Python fallback that produce bit-identical traces; see
:mod:`adaptmh.backend`.
"""

from .am import (
    AmConfig,
    AmState,
    am_adaptation_gap,
    am_batch_covariance,
    am_init,
    am_update,
    default_s_d,
    default_t0,
)
from .backend import (
    active_backend,
    available_backends,
    run_chain,
)
from .config import (
    ExperimentConfig,
    config_hash,
    load_config,
    parse_config,
    serialize_config,
)
from .diagnostics import (
    ChainTrace,
    DiagnosticsParams,
    DiagnosticsReport,
    acceptance_rate,
    adaptation_decay,
    boundedness_envelope,
    build_report,
    make_windows,
    moment_check,
    moment_check_pooled,
    nearest_rank_quantile,
    pooled_adaptation_decay,
    pooled_gap_growth,
    scaled_gap_growth,
    trace_statistic,
    tv_histogram_estimate,
)
from .errors import (
    AdaptmhError,
    BackendUnavailable,
    ConfigError,
    DimensionMismatch,
    DomainError,
    EmptyWindow,
    InsufficientHistory,
    InsufficientSamples,
    InsufficientTraces,
    InvalidState,
    NotPositiveDefinite,
    NotSymmetric,
    Unavailable,
)
from .mh import (
    ProposalParams,
    StepOutcome,
    acceptance_prob,
    mh_step,
    propose,
)
from .mhcma import (
    MhCmaConfig,
    MhCmaState,
    cov_update,
    default_c1_0,
    default_c_c,
    mhcma_adapt,
    mhcma_init,
    path_update,
    sigma_update,
)
from .runner import (
    RunResult,
    chain_rng,
    load_traces,
    run_experiment,
    run_single,
)
from .spd import (
    SpdMatrix,
    factorize,
    mahalanobis_sq,
    rank_one_step_distance,
    spd_distance,
)
from .targets import (
    Banana,
    Gaussian,
    GaussianMixture,
    TargetDensity,
    make_target,
)
from .verify import SuiteResult, run_suite

__version__ = "0.1.0"

__all__ = [
    "AdaptmhError",
    "AmConfig",
    "AmState",
    "BackendUnavailable",
    "Banana",
    "ChainTrace",
    "ConfigError",
    "DiagnosticsParams",
    "DiagnosticsReport",
    "DimensionMismatch",
    "DomainError",
    "EmptyWindow",
    "ExperimentConfig",
    "Gaussian",
    "GaussianMixture",
    "InsufficientHistory",
    "InsufficientSamples",
    "InsufficientTraces",
    "InvalidState",
    "MhCmaConfig",
    "MhCmaState",
    "NotPositiveDefinite",
    "NotSymmetric",
    "ProposalParams",
    "RunResult",
    "SpdMatrix",
    "StepOutcome",
    "SuiteResult",
    "TargetDensity",
    "Unavailable",
    "acceptance_prob",
    "acceptance_rate",
    "active_backend",
    "adaptation_decay",
    "am_adaptation_gap",
    "am_batch_covariance",
    "am_init",
    "am_update",
    "available_backends",
    "boundedness_envelope",
    "build_report",
    "chain_rng",
    "config_hash",
    "cov_update",
    "default_c1_0",
    "default_c_c",
    "default_s_d",
    "default_t0",
    "factorize",
    "load_config",
    "load_traces",
    "mahalanobis_sq",
    "make_target",
    "make_windows",
    "mh_step",
    "mhcma_adapt",
    "mhcma_init",
    "moment_check",
    "moment_check_pooled",
    "nearest_rank_quantile",
    "pooled_adaptation_decay",
    "pooled_gap_growth",
    "parse_config",
    "path_update",
    "propose",
    "rank_one_step_distance",
    "run_chain",
    "run_experiment",
    "run_single",
    "run_suite",
    "scaled_gap_growth",
    "serialize_config",
    "sigma_update",
    "spd_distance",
    "trace_statistic",
    "tv_histogram_estimate",
]
