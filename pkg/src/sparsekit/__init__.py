"""Greedy sparse-signal recovery over synthetic sensing ensembles.

Public surface: sensing operators (Gaussian, Bernoulli, partial DCT) with
an empirical restricted-isometry probe, sparse/compressible signal
generators, the OMP / ROMP / CoSaMP recovery algorithms backed by an
iterative restricted least-squares solver, and a deterministic Monte
Carlo benchmark harness with a CLI (``sparsekit``).
"""

from .bench import (
    TrialConfig,
    TrialRecord,
    compressible_scaling,
    phase_sweep,
    run_trial,
    run_trials,
    summarize,
)
from .errors import SolverFailure, UsageError
from .linalg import (
    LsSolution,
    RestrictedSystem,
    SupportSet,
    dot,
    embed,
    largest_indices,
    restricted_least_squares,
)
from .pursuit import HaltReason, RecoveryResult, cosamp, omp, romp, romp_regularize
from .rng import SplitMix64, derive_seed
from .sensing import (
    Ensemble,
    RicEstimate,
    SenseOperator,
    empirical_ric,
    make_operator,
    operator_from_descriptor,
)
from .signals import (
    NoiseMode,
    NoiseSpec,
    Signal,
    SignalKind,
    gen_compressible,
    gen_sparse,
    head,
    measure,
    signal_from_descriptor,
    tail_l1,
)

__version__ = "0.1.0"

__all__ = [
    "Ensemble",
    "HaltReason",
    "LsSolution",
    "NoiseMode",
    "NoiseSpec",
    "RecoveryResult",
    "RestrictedSystem",
    "RicEstimate",
    "SenseOperator",
    "Signal",
    "SignalKind",
    "SolverFailure",
    "SplitMix64",
    "SupportSet",
    "TrialConfig",
    "TrialRecord",
    "UsageError",
    "compressible_scaling",
    "cosamp",
    "derive_seed",
    "dot",
    "embed",
    "empirical_ric",
    "gen_compressible",
    "gen_sparse",
    "head",
    "largest_indices",
    "make_operator",
    "measure",
    "omp",
    "operator_from_descriptor",
    "phase_sweep",
    "restricted_least_squares",
    "romp",
    "romp_regularize",
    "run_trial",
    "run_trials",
    "signal_from_descriptor",
    "summarize",
    "tail_l1",
]
