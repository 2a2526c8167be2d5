"""Synthetic one-sided Gaussian experiments and the Monte Carlo runner.

Observations are X ~ N(mu, Sigma) with equicorrelated covariance
Sigma = sigma^2 [(1 - rho) I + rho 11'].  Truth is Bernoulli(pi1) per
hypothesis; null means are 0 and signal means are drawn from N(mu_c, sigma^2)
truncated to (0, inf).  Per hypothesis the p-value is the one-sided Z-test
Phi(-x/sigma) and the e-value is the likelihood ratio
exp((mu_c * x - 0.5 * mu_c^2) / sigma^2).

Replications are reproducible regardless of scheduling: replication i uses an
independent substream seeded by a fixed 64-bit mix of the scenario seed and
i, so instances depend only on (seed, i) and the distribution parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.special import ndtr

from .core import (
    EmptyInputError,
    EvidenceKind,
    EvidenceVector,
    GroundTruth,
    InvalidRhoError,
    RejectionSet,
)
from .engine import DominoConfig, Mode, domino_e, domino_p
from .local_tests import TestId, local_test
from .baselines import bh as bh_procedure
from .baselines import holm_k as holm_procedure
from .metrics import MetricsReport, RunSample, aggregate, run_sample

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

CSV_HEADER = (
    "scenario_id,procedure,k,alpha,rho,pi1,mu_c,reps,"
    "kbfdr,kbfdr_se,kfwer,fdr,tdr,tdr_se,power,power_se"
)


def substream_seed(base_seed: int, rep: int) -> int:
    """Fixed 64-bit mixing of (base seed, replication index).

    splitmix64 finalizer applied to base + (rep + 1) * golden-ratio odd
    constant; the full avalanche makes neighbouring replications
    statistically independent under PCG64.
    """
    z = (base_seed + (rep + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class SimScenario:
    """One synthetic-experiment configuration."""

    m: int
    pi1: float
    mu_c: float
    sigma: float
    rho: float
    alpha: float
    k: int
    reps: int
    seed: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.pi1 <= 1.0:
            raise ValueError(f"pi1 must lie in [0, 1], got {self.pi1}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        lo = -1.0 / (self.m - 1) if self.m > 1 else 0.0
        if self.rho < lo - 1e-12 or self.rho >= 1.0:
            raise InvalidRhoError(
                f"rho must lie in [{lo:.6g}, 1), got {self.rho}"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.k < 1 or self.k > self.m:
            raise ValueError(f"need 1 <= k <= m, got k={self.k}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")

    @property
    def scenario_id(self) -> str:
        return (
            f"m{self.m}_pi{self.pi1:g}_mu{self.mu_c:g}_sd{self.sigma:g}"
            f"_rho{self.rho:g}_a{self.alpha:g}_k{self.k}"
            f"_r{self.reps}_s{self.seed}"
        )


@dataclass(frozen=True)
class SimInstance:
    """One simulated dataset: observations, both evidence kinds, and truth."""

    x: np.ndarray
    pvalues: EvidenceVector
    evalues: EvidenceVector
    truth: GroundTruth


def _truncated_positive_normal(
    rng: np.random.Generator, mean: float, sd: float, size: int
) -> np.ndarray:
    """Rejection sampling from N(mean, sd^2) restricted to (0, inf)."""
    out = np.empty(size)
    filled = 0
    for _ in range(1000):
        if filled == size:
            return out
        draw = rng.normal(mean, sd, size=2 * (size - filled) + 8)
        keep = draw[draw > 0.0]
        take = min(keep.size, size - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    raise RuntimeError(
        f"truncated-normal acceptance too low at mean={mean}, sd={sd}"
    )


def _equicorrelated_noise(rng: np.random.Generator, m: int, sigma: float, rho: float) -> np.ndarray:
    """Exact draw from N(0, sigma^2[(1-rho)I + rho 11']).

    Uses the closed-form symmetric square root A = a I + b 11' of the
    covariance, valid on the whole admissible range including the singular
    boundary rho = -1/(m-1).
    """
    z = rng.standard_normal(m)
    if m == 1:
        return sigma * z
    a = sigma * math.sqrt(1.0 - rho)
    spread = 1.0 - rho + m * rho
    b = sigma * (math.sqrt(max(spread, 0.0)) - math.sqrt(1.0 - rho)) / m
    return a * z + b * z.sum()


def gen_instance(sc: SimScenario, rep: int) -> SimInstance:
    """Deterministically generate replication ``rep`` of a scenario.

    Draw order is fixed (truth, signal means, noise) so instances are
    bit-identical given (seed, rep).
    """
    rng = np.random.Generator(np.random.PCG64(substream_seed(sc.seed, rep)))
    theta = (rng.random(sc.m) < sc.pi1).astype(int)
    mu = np.zeros(sc.m)
    n_alt = int(theta.sum())
    if n_alt:
        mu[theta == 1] = _truncated_positive_normal(rng, sc.mu_c, sc.sigma, n_alt)
    x = mu + _equicorrelated_noise(rng, sc.m, sc.sigma, sc.rho)
    pvals = ndtr(-x / sc.sigma)
    with np.errstate(over="ignore"):
        evals = np.exp((sc.mu_c * x - 0.5 * sc.mu_c**2) / sc.sigma**2)
    return SimInstance(
        x=x,
        pvalues=EvidenceVector.p_values(pvals),
        evalues=EvidenceVector.e_values(evals),
        truth=GroundTruth(theta),
    )


@dataclass(frozen=True)
class ProcedureSpec:
    """A named rejection procedure to evaluate inside the harness.

    ``k`` is the boundary order used both by the procedure (where it has
    one) and by the metrics; None falls back to the scenario's k.
    """

    name: str
    evidence_kind: EvidenceKind
    k: int | None
    run: Callable[[SimInstance, SimScenario], RejectionSet]


_MODE_TOKENS = {"fast": Mode.FAST, "exact": Mode.EXACT, "brute": Mode.BRUTE_FORCE}

_DOMINO_P_TESTS = {
    "simes": TestId.SIMES,
    "harmonic": TestId.HARMONIC_MEAN,
    "bonferroni": TestId.BONFERRONI_K,
}
_DOMINO_E_TESTS = {
    "eavg": TestId.E_AVERAGE,
    "eclosure": TestId.E_CLOSURE_K,
}


def make_procedure(token: str) -> ProcedureSpec:
    """Parse a procedure token ``name[:k[:mode]]``.

    Names: simes, harmonic, bonferroni, eavg, eclosure (Domino variants),
    bh, holm (baselines).  The default mode is the fast path where one is
    defined and the exact rectangular search otherwise.
    """
    parts = [part.strip() for part in token.split(":")]
    name = parts[0].lower()
    k = int(parts[1]) if len(parts) > 1 and parts[1] else None
    mode = None
    if len(parts) > 2 and parts[2]:
        if parts[2].lower() not in _MODE_TOKENS:
            raise ValueError(f"unknown mode {parts[2]!r} in procedure {token!r}")
        mode = _MODE_TOKENS[parts[2].lower()]
    if len(parts) > 3:
        raise ValueError(f"malformed procedure token {token!r}")

    if name in _DOMINO_P_TESTS:
        kk = 1 if k is None else k
        test = local_test(_DOMINO_P_TESTS[name], kk)
        label = f"{name}_k{kk}"

        def run_p(inst: SimInstance, sc: SimScenario) -> RejectionSet:
            cfg = DominoConfig(kk, sc.alpha, test, mode=mode)
            return domino_p(inst.pvalues, cfg)

        return ProcedureSpec(label, EvidenceKind.P_VALUE, kk, run_p)
    if name in _DOMINO_E_TESTS:
        kk = 1 if k is None else k
        test = local_test(_DOMINO_E_TESTS[name], kk)
        label = f"{name}_k{kk}"

        def run_e(inst: SimInstance, sc: SimScenario) -> RejectionSet:
            cfg = DominoConfig(kk, sc.alpha, test, mode=mode)
            return domino_e(inst.evalues, cfg)

        return ProcedureSpec(label, EvidenceKind.E_VALUE, kk, run_e)
    if name == "bh":
        if mode is not None:
            raise ValueError("bh takes no mode")

        def run_bh(inst: SimInstance, sc: SimScenario) -> RejectionSet:
            return bh_procedure(inst.pvalues, sc.alpha)

        return ProcedureSpec("bh", EvidenceKind.P_VALUE, k, run_bh)
    if name == "holm":
        kk = 1 if k is None else k
        if mode is not None:
            raise ValueError("holm takes no mode")

        def run_holm(inst: SimInstance, sc: SimScenario) -> RejectionSet:
            return holm_procedure(inst.pvalues, kk, sc.alpha)

        return ProcedureSpec(f"holm_k{kk}", EvidenceKind.P_VALUE, kk, run_holm)
    raise ValueError(f"unknown procedure {name!r}")


def iter_run_samples(
    sc: SimScenario, procedures: Sequence[ProcedureSpec]
) -> Iterator[tuple[int, list[RunSample]]]:
    """Evaluate all procedures on one shared instance per replication.

    Sharing instances across procedures reduces between-procedure variance;
    samples are yielded in replication order.
    """
    for rep in range(sc.reps):
        inst = gen_instance(sc, rep)
        samples = []
        for proc in procedures:
            rejection = proc.run(inst, sc)
            evidence = (
                inst.pvalues
                if proc.evidence_kind is EvidenceKind.P_VALUE
                else inst.evalues
            )
            k_eff = proc.k if proc.k is not None else sc.k
            samples.append(run_sample(rejection, inst.truth, evidence, k_eff))
        yield rep, samples


def run_grid(
    scenarios: Sequence[SimScenario], procedures: Sequence[ProcedureSpec]
) -> list[MetricsReport]:
    """One report per (scenario, procedure), scenario-major order."""
    if not scenarios or not procedures:
        raise EmptyInputError("need at least one scenario and one procedure")
    reports: list[MetricsReport] = []
    for sc in scenarios:
        per_proc: list[list[RunSample]] = [[] for _ in procedures]
        for _, samples in iter_run_samples(sc, procedures):
            for slot, sample in zip(per_proc, samples):
                slot.append(sample)
        for proc, samples in zip(procedures, per_proc):
            reports.append(
                aggregate(
                    samples,
                    scenario_id=sc.scenario_id,
                    procedure=proc.name,
                    k=proc.k if proc.k is not None else sc.k,
                    alpha=sc.alpha,
                    rho=sc.rho,
                    pi1=sc.pi1,
                    mu_c=sc.mu_c,
                )
            )
    return reports


def _fmt(x: float) -> str:
    return format(x, ".6g")


def emit_table(reports: Iterable[MetricsReport], path) -> None:
    """Write the plot-ready CSV; byte-stable given identical inputs."""
    reports = list(reports)
    if not reports:
        raise EmptyInputError("no reports to emit")
    lines = [CSV_HEADER]
    for rep in reports:
        lines.append(
            ",".join(
                [
                    rep.scenario_id,
                    rep.procedure,
                    str(rep.k),
                    _fmt(rep.alpha),
                    _fmt(rep.rho),
                    _fmt(rep.pi1),
                    _fmt(rep.mu_c),
                    str(rep.reps),
                    _fmt(rep.kbfdr),
                    _fmt(rep.kbfdr_se),
                    _fmt(rep.kfwer),
                    _fmt(rep.fdr),
                    _fmt(rep.tdr),
                    _fmt(rep.tdr_se),
                    _fmt(rep.power),
                    _fmt(rep.power_se),
                ]
            )
        )
    payload = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(payload)
