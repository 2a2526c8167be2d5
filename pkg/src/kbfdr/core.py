"""Shared domain types for boundary-FDR procedures.

Evidence is either a vector of p-values (small = significant) or e-values
(large = significant).  All procedures work on a sorted view of the evidence:
p-values ascending, e-values descending, ties broken by ascending original
index.  Ranks are 1-based throughout the public API; hypothesis indices are
0-based.

Everything here is immutable after construction and all operations are pure,
so concurrent use needs no coordination.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class OutOfRangeError(ValueError):
    """A rank argument fell outside its valid range."""


class SubsetTooSmallError(ValueError):
    """An evidence subset was smaller than the test order requires."""


class SubsetTooLargeError(ValueError):
    """An evidence subset exceeded an enumeration cap."""


class CapExceededError(ValueError):
    """Brute-force enumeration was requested above the configured cap."""


class NotMonotoneError(ValueError):
    """An exact search reduction was requested for a non-monotone test."""


class DimensionMismatchError(ValueError):
    """Evidence and ground truth have different lengths."""


class EmptyInputError(ValueError):
    """An aggregation or emission step received no data."""


class InvalidRhoError(ValueError):
    """Equicorrelation outside [-1/(m-1), 1)."""


class EvidenceKind(enum.Enum):
    P_VALUE = "p"
    E_VALUE = "e"


@dataclass(frozen=True)
class EvidenceVector:
    """The m observed p-values or e-values with their kind tag.

    p-values must lie in [0, 1]; e-values in [0, +inf], with +inf permitted
    (an infinite e-value is perfect evidence and dominates every mean it
    enters).  p = 0 is likewise legal extreme evidence.
    """

    kind: EvidenceKind
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("evidence must be a non-empty 1-d vector")
        if np.isnan(arr).any():
            raise ValueError("evidence contains NaN")
        if self.kind is EvidenceKind.P_VALUE:
            if (arr < 0.0).any() or (arr > 1.0).any():
                raise ValueError("p-values must lie in [0, 1]")
        else:
            if (arr < 0.0).any():
                raise ValueError("e-values must be nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def m(self) -> int:
        return int(self.values.size)

    @classmethod
    def p_values(cls, values) -> "EvidenceVector":
        return cls(EvidenceKind.P_VALUE, np.asarray(values, dtype=float))

    @classmethod
    def e_values(cls, values) -> "EvidenceVector":
        return cls(EvidenceKind.E_VALUE, np.asarray(values, dtype=float))


@dataclass(frozen=True)
class SortedView:
    """A significance ordering of an evidence vector.

    ``perm[i]`` is the 0-based original index of the hypothesis at 1-based
    rank i+1.  Rank 1 is the most significant hypothesis (smallest p-value or
    largest e-value); ties are broken by ascending original index.
    """

    ev: EvidenceVector
    perm: np.ndarray

    def rank_values(self) -> np.ndarray:
        """Evidence values in rank order (monotone for the kind)."""
        return self.ev.values[self.perm]

    @property
    def m(self) -> int:
        return self.ev.m


@dataclass(frozen=True)
class MarginalSet:
    """The k rank-consecutive indices ending at rank r: {pi(r-k+1),...,pi(r)}."""

    r: int
    k: int
    indices: frozenset[int]


@dataclass(frozen=True)
class RejectionSet:
    """A rejection decision.

    ``boundary_rank`` is the effective boundary after tie absorption (the
    number of ranks at or below the rejection threshold); 0 encodes both the
    empty set and trivial fallback outcomes, so callers should read
    ``indices`` rather than the rank for set contents.  ``marginal_indices``
    lists the min(k, |R|) least significant rejected hypotheses, ordered from
    least to more significant.
    """

    indices: frozenset[int]
    boundary_rank: int
    marginal_indices: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class GroundTruth:
    """Per-hypothesis truth: theta[j] = 0 when hypothesis j is a true null."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.theta, dtype=int, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("theta must be a non-empty 1-d vector")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("theta entries must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "theta", arr)

    @property
    def m(self) -> int:
        return int(self.theta.size)

    @property
    def null_set(self) -> frozenset[int]:
        return frozenset(int(j) for j in np.flatnonzero(self.theta == 0))

    @property
    def alternative_set(self) -> frozenset[int]:
        return frozenset(int(j) for j in np.flatnonzero(self.theta == 1))


def sort_evidence(ev: EvidenceVector) -> SortedView:
    """Sort evidence by significance; stable under ties by original index."""
    if ev.kind is EvidenceKind.P_VALUE:
        perm = np.argsort(ev.values, kind="stable")
    else:
        perm = np.argsort(-ev.values, kind="stable")
    perm = perm.astype(np.intp)
    perm.flags.writeable = False
    return SortedView(ev, perm)


def marginal_set(sv: SortedView, r: int, k: int) -> MarginalSet:
    """The k rank-consecutive indices ending at rank r (no tie absorption)."""
    if k < 1:
        raise OutOfRangeError(f"k must be >= 1, got {k}")
    if r < k or r > sv.m:
        raise OutOfRangeError(f"need k <= r <= m, got r={r}, k={k}, m={sv.m}")
    return MarginalSet(r, k, frozenset(int(j) for j in sv.perm[r - k : r]))


def _tied_prefix_length(sv: SortedView, r: int) -> int:
    """Number of ranks at least as significant as the value at rank r."""
    vals = sv.ev.values
    thresh = vals[sv.perm[r - 1]]
    if sv.ev.kind is EvidenceKind.P_VALUE:
        return int(np.count_nonzero(vals <= thresh))
    return int(np.count_nonzero(vals >= thresh))


def reject_by_rank(sv: SortedView, r: int, k: int) -> RejectionSet:
    """Reject everything at least as significant as the value at rank r.

    Rejection is threshold-based, so ties at the boundary are absorbed even
    when that pushes |R| beyond r.  r = 0 yields the empty set.  Among tied
    boundary values the marginal indices are taken by descending original
    index, which is what the stable sorted order yields.
    """
    if k < 1:
        raise OutOfRangeError(f"k must be >= 1, got {k}")
    if r < 0 or r > sv.m:
        raise OutOfRangeError(f"need 0 <= r <= m, got r={r}, m={sv.m}")
    if r == 0:
        return RejectionSet(frozenset(), 0, ())
    r_eff = _tied_prefix_length(sv, r)
    indices = frozenset(int(j) for j in sv.perm[:r_eff])
    kk = min(k, r_eff)
    marginal = tuple(int(sv.perm[r_eff - 1 - t]) for t in range(kk))
    return RejectionSet(indices, r_eff, marginal)


def significance_order(ev: EvidenceVector, indices) -> tuple[int, ...]:
    """Order a set of hypothesis indices from most to least significant.

    Uses the same tie rule as :func:`sort_evidence` (ascending original
    index), so the least significant member of a tied block is the one with
    the largest original index.
    """
    idx = sorted(int(j) for j in indices)
    if ev.kind is EvidenceKind.P_VALUE:
        return tuple(sorted(idx, key=lambda j: (ev.values[j], j)))
    return tuple(sorted(idx, key=lambda j: (-ev.values[j], j)))


def marginal_of(ev: EvidenceVector, indices, k: int) -> tuple[int, ...]:
    """The min(k, |indices|) least significant members, least first."""
    if k < 1:
        raise OutOfRangeError(f"k must be >= 1, got {k}")
    order = significance_order(ev, indices)
    kk = min(k, len(order))
    return tuple(reversed(order[len(order) - kk :]))
