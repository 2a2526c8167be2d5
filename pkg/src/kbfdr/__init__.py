"""Boundary-FDR control for multiple hypothesis testing.

The package implements the Domino rejection procedure, which keeps the k
least significant discoveries trustworthy at level alpha under arbitrary
dependence, for both p-values and e-values; the classical BH and generalized
Holm baselines; per-run error metrics; and a reproducible Monte Carlo
harness with a CSV-emitting CLI.
"""

from .baselines import bh, external_boundary, holm_critical_values, holm_k
from .core import (
    CapExceededError,
    DimensionMismatchError,
    EmptyInputError,
    EvidenceKind,
    EvidenceVector,
    GroundTruth,
    InvalidRhoError,
    MarginalSet,
    NotMonotoneError,
    OutOfRangeError,
    RejectionSet,
    SortedView,
    SubsetTooLargeError,
    SubsetTooSmallError,
    marginal_of,
    marginal_set,
    reject_by_rank,
    significance_order,
    sort_evidence,
)
from .engine import (
    DEFAULT_BRUTE_FORCE_CAP,
    ConditionTrace,
    DominoConfig,
    Mode,
    check_condition_bruteforce,
    check_condition_rectangular,
    domino_e,
    domino_e_mean_reduction_check,
    domino_p,
    domino_p_fast_bonferroni,
    domino_p_fast_harmonic,
)
from .local_tests import (
    CombinedEvidence,
    LocalTestDescriptor,
    TestId,
    arithmetic_e_mean,
    bonferroni_k,
    e_average,
    e_closure_k,
    harmonic_mean_test,
    local_test,
    scaled_harmonic_mean,
    simes,
)
from .metrics import (
    MetricsReport,
    RunSample,
    aggregate,
    kbfdr_indicator,
    kfwer_indicator,
    run_sample,
)
from .simulate import (
    CSV_HEADER,
    ProcedureSpec,
    SimInstance,
    SimScenario,
    emit_table,
    gen_instance,
    iter_run_samples,
    make_procedure,
    run_grid,
    substream_seed,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "CapExceededError",
    "CombinedEvidence",
    "ConditionTrace",
    "DEFAULT_BRUTE_FORCE_CAP",
    "DimensionMismatchError",
    "DominoConfig",
    "EmptyInputError",
    "EvidenceKind",
    "EvidenceVector",
    "GroundTruth",
    "InvalidRhoError",
    "LocalTestDescriptor",
    "MarginalSet",
    "MetricsReport",
    "Mode",
    "NotMonotoneError",
    "OutOfRangeError",
    "ProcedureSpec",
    "RejectionSet",
    "RunSample",
    "SimInstance",
    "SimScenario",
    "SortedView",
    "SubsetTooLargeError",
    "SubsetTooSmallError",
    "TestId",
    "aggregate",
    "arithmetic_e_mean",
    "bh",
    "bonferroni_k",
    "check_condition_bruteforce",
    "check_condition_rectangular",
    "domino_e",
    "domino_e_mean_reduction_check",
    "domino_p",
    "domino_p_fast_bonferroni",
    "domino_p_fast_harmonic",
    "e_average",
    "e_closure_k",
    "emit_table",
    "external_boundary",
    "gen_instance",
    "harmonic_mean_test",
    "holm_critical_values",
    "holm_k",
    "iter_run_samples",
    "kbfdr_indicator",
    "kfwer_indicator",
    "local_test",
    "make_procedure",
    "marginal_of",
    "marginal_set",
    "reject_by_rank",
    "run_grid",
    "run_sample",
    "scaled_harmonic_mean",
    "significance_order",
    "simes",
    "sort_evidence",
    "substream_seed",
]
