"""Polya-Gamma data-augmentation Gibbs samplers for logistic linear mixed models."""

from .diagnostics import DiagnosticsReport, acf, diagnose, diagnose_chain, ess, mess, msj
from .ergodicity import (
    GEReport,
    build_mstar,
    check_ge,
    check_positive_null_vector,
    check_rank,
)
from .errors import (
    ChainError,
    DegenerateVarianceError,
    DimensionError,
    DomainError,
    InputError,
    LLMMError,
    NumericalError,
    ParseError,
    RankError,
    SingularityError,
    UnsupportedDimensionError,
)
from .ingest import DatasetFile, ingest
from .linalg_sampling import build_eta_precision, chol_solve_mean, chol_solve_sample
from .model import ChainState, ModelSpec, PriorSpec, log_joint_unnorm, require_valid, validate
from .pg_random import pg_density, pg_mean, sample_pg1, sample_pg_int
from .rng import make_rng
from .samplers import ChainOutput, RunConfig, SamplerKind, bg_step, fg_step, run_chain

__version__ = "0.1.0"
