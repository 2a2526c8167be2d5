"""Per-run error indicators and Monte Carlo aggregation.

The boundary indicator asks whether the k least significant rejections are
all true nulls; by convention it is 0 whenever fewer than k hypotheses are
rejected.  The k-FWER indicator asks whether at least k nulls were rejected
at all.  Pointwise, boundary <= k-FWER, with equality under a global null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionMismatchError,
    EmptyInputError,
    EvidenceVector,
    GroundTruth,
    RejectionSet,
    marginal_of,
)


@dataclass(frozen=True)
class RunSample:
    """Error indicators and rates realized by a single run."""

    kbfdr_ind: int
    kfwer_ind: int
    fdp: float
    tdr: float
    power: float
    rejections: int


@dataclass(frozen=True)
class MetricsReport:
    """Monte Carlo means and standard errors over replications.

    ``tdr`` uses the empty-set convention tdr := 1 (the complement of the
    |R| v 1 convention for the FDP); ``tdr_nonempty`` averages only runs
    with at least one rejection (NaN when there were none) and
    ``empty_runs`` counts the excluded runs so table readers can tell the
    two apart.
    """

    scenario_id: str
    procedure: str
    k: int
    alpha: float
    rho: float
    pi1: float
    mu_c: float
    reps: int
    kbfdr: float
    kbfdr_se: float
    kfwer: float
    kfwer_se: float
    fdr: float
    fdr_se: float
    tdr: float
    tdr_se: float
    power: float
    power_se: float
    empty_runs: int
    tdr_nonempty: float
    tdr_nonempty_se: float


def kbfdr_indicator(R: RejectionSet, truth: GroundTruth, k: int) -> int:
    """1 iff |R| >= k and the k least significant rejections are all null."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if R.size < k:
        return 0
    if len(R.marginal_indices) < k:
        raise ValueError(
            f"rejection set carries {len(R.marginal_indices)} marginal "
            f"indices, need {k}; rebuild it with the right order"
        )
    return int(all(truth.theta[j] == 0 for j in R.marginal_indices[:k]))


def kfwer_indicator(R: RejectionSet, truth: GroundTruth, k: int) -> int:
    """1 iff at least k true nulls were rejected."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return int(len(R.indices & truth.null_set) >= k)


def run_sample(
    R: RejectionSet, truth: GroundTruth, evidence: EvidenceVector, k: int
) -> RunSample:
    """Realized indicators and rates for one run.

    The marginal indices are recomputed from the evidence ordering, so the
    boundary indicator is valid for any k regardless of how R was built.
    """
    if evidence.m != truth.m:
        raise DimensionMismatchError(
            f"evidence has m={evidence.m}, truth has m={truth.m}"
        )
    marginal = marginal_of(evidence, R.indices, k)
    refreshed = RejectionSet(R.indices, R.boundary_rank, marginal)
    n_rej = refreshed.size
    n_false = len(refreshed.indices & truth.null_set)
    n_true = n_rej - n_false
    n_alt = len(truth.alternative_set)
    fdp = n_false / max(n_rej, 1)
    tdr = n_true / n_rej if n_rej >= 1 else 1.0
    power = n_true / max(n_alt, 1)
    return RunSample(
        kbfdr_ind=kbfdr_indicator(refreshed, truth, k),
        kfwer_ind=kfwer_indicator(refreshed, truth, k),
        fdp=fdp,
        tdr=tdr,
        power=power,
        rejections=n_rej,
    )


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    # SE convention pinned by the frozen aggregation examples: population
    # standard deviation over sqrt(n), so a single sample has SE 0.
    mean = float(values.mean())
    se = float(values.std(ddof=0) / math.sqrt(values.size))
    return mean, se


def aggregate(
    samples,
    *,
    scenario_id: str = "",
    procedure: str = "",
    k: int = 1,
    alpha: float = float("nan"),
    rho: float = float("nan"),
    pi1: float = float("nan"),
    mu_c: float = float("nan"),
) -> MetricsReport:
    """Per-metric mean and standard error over a list of run samples."""
    samples = list(samples)
    if not samples:
        raise EmptyInputError("no samples to aggregate")
    kbfdr = np.array([s.kbfdr_ind for s in samples], dtype=float)
    kfwer = np.array([s.kfwer_ind for s in samples], dtype=float)
    fdp = np.array([s.fdp for s in samples], dtype=float)
    tdr = np.array([s.tdr for s in samples], dtype=float)
    power = np.array([s.power for s in samples], dtype=float)
    nonempty = np.array([s.rejections >= 1 for s in samples], dtype=bool)
    kbfdr_m, kbfdr_s = _mean_se(kbfdr)
    kfwer_m, kfwer_s = _mean_se(kfwer)
    fdr_m, fdr_s = _mean_se(fdp)
    tdr_m, tdr_s = _mean_se(tdr)
    power_m, power_s = _mean_se(power)
    if nonempty.any():
        tdr_ne_m, tdr_ne_s = _mean_se(tdr[nonempty])
    else:
        tdr_ne_m, tdr_ne_s = float("nan"), float("nan")
    return MetricsReport(
        scenario_id=scenario_id,
        procedure=procedure,
        k=k,
        alpha=alpha,
        rho=rho,
        pi1=pi1,
        mu_c=mu_c,
        reps=len(samples),
        kbfdr=kbfdr_m,
        kbfdr_se=kbfdr_s,
        kfwer=kfwer_m,
        kfwer_se=kfwer_s,
        fdr=fdr_m,
        fdr_se=fdr_s,
        tdr=tdr_m,
        tdr_se=tdr_s,
        power=power_m,
        power_se=power_s,
        empty_runs=int((~nonempty).sum()),
        tdr_nonempty=tdr_ne_m,
        tdr_nonempty_se=tdr_ne_s,
    )
