import math

import numpy as np
import pytest

from kbfdr import (
    DimensionMismatchError,
    EmptyInputError,
    EvidenceVector,
    GroundTruth,
    RejectionSet,
    RunSample,
    aggregate,
    kbfdr_indicator,
    kfwer_indicator,
    marginal_of,
    run_sample,
)


def rejection(ev: EvidenceVector, indices, k: int) -> RejectionSet:
    indices = frozenset(indices)
    return RejectionSet(indices, len(indices), marginal_of(ev, indices, k))


TRUTH = GroundTruth([1, 1, 0])
EV = EvidenceVector.p_values([0.01, 0.02, 0.03])


class TestKbfdrIndicator:
    def test_least_significant_null(self):
        assert kbfdr_indicator(rejection(EV, {0, 1, 2}, 1), TRUTH, 1) == 1

    def test_marginal_pair_contains_alternative(self):
        assert kbfdr_indicator(rejection(EV, {0, 1, 2}, 2), TRUTH, 2) == 0

    def test_small_sets_count_zero(self):
        empty = RejectionSet(frozenset(), 0, ())
        assert kbfdr_indicator(empty, TRUTH, 1) == 0
        assert kbfdr_indicator(rejection(EV, {0}, 2), TRUTH, 2) == 0

    def test_requires_enough_marginals(self):
        starved = RejectionSet(frozenset({0, 1, 2}), 3, (2,))
        with pytest.raises(ValueError):
            kbfdr_indicator(starved, TRUTH, 2)

    def test_k1_matches_single_boundary_event(self):
        rng = np.random.default_rng(22)
        for _ in range(300):
            m = int(rng.integers(1, 10))
            ev = EvidenceVector.p_values(rng.random(m))
            theta = GroundTruth((rng.random(m) < 0.5).astype(int))
            size = int(rng.integers(1, m + 1))
            idx = frozenset(int(j) for j in rng.choice(m, size=size, replace=False))
            rej = rejection(ev, idx, 1)
            boundary = rej.marginal_indices[0]
            assert kbfdr_indicator(rej, theta, 1) == int(theta.theta[boundary] == 0)


class TestKfwerIndicator:
    def test_one_null_rejected(self):
        assert kfwer_indicator(rejection(EV, {0, 1, 2}, 1), TRUTH, 1) == 1

    def test_not_enough_nulls(self):
        assert kfwer_indicator(rejection(EV, {0, 1, 2}, 2), TRUTH, 2) == 0

    def test_empty(self):
        assert kfwer_indicator(RejectionSet(frozenset(), 0, ()), TRUTH, 1) == 0


class TestRunSample:
    def test_counts(self):
        truth = GroundTruth([1, 0, 0])
        ev = EvidenceVector.p_values([0.01, 0.02, 0.9])
        s = run_sample(rejection(ev, {0, 1}, 1), truth, ev, 1)
        assert s.fdp == 0.5
        assert s.tdr == 0.5
        assert s.power == 1.0
        assert s.rejections == 2

    def test_empty_set_conventions(self):
        s = run_sample(RejectionSet(frozenset(), 0, ()), TRUTH, EV, 1)
        assert s.fdp == 0.0
        assert s.tdr == 1.0
        assert s.power == 0.0

    def test_all_alternatives(self):
        truth = GroundTruth([1, 1, 1])
        s = run_sample(rejection(EV, {0, 1, 2}, 1), truth, EV, 1)
        assert s.fdp == 0.0
        assert s.tdr == 1.0
        assert s.power == 1.0

    def test_fdp_tdr_complementary(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            m = int(rng.integers(1, 12))
            ev = EvidenceVector.p_values(rng.random(m))
            truth = GroundTruth((rng.random(m) < 0.4).astype(int))
            size = int(rng.integers(0, m + 1))
            idx = frozenset(int(j) for j in rng.choice(m, size=size, replace=False))
            s = run_sample(rejection(ev, idx, 1), truth, ev, 1)
            assert s.fdp + s.tdr == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            run_sample(rejection(EV, {0}, 1), GroundTruth([0, 1]), EV, 1)

    def test_recomputes_marginals_for_any_k(self):
        # a set built with k=1 bookkeeping still yields a valid order-2 sample
        rej = rejection(EV, {0, 1, 2}, 1)
        s = run_sample(rej, TRUTH, EV, 2)
        assert s.kbfdr_ind == 0  # marginal pair {1, 2} contains theta=1


class TestPointwiseOrdering:
    def test_boundary_never_exceeds_familywise(self):
        rng = np.random.default_rng(24)
        for _ in range(500):
            m = int(rng.integers(1, 12))
            ev = EvidenceVector.p_values(rng.random(m))
            truth = GroundTruth((rng.random(m) < 0.5).astype(int))
            k = int(rng.integers(1, 4))
            size = int(rng.integers(0, m + 1))
            idx = frozenset(int(j) for j in rng.choice(m, size=size, replace=False))
            rej = rejection(ev, idx, k)
            assert kbfdr_indicator(rej, truth, k) <= kfwer_indicator(rej, truth, k)

    def test_global_null_equality(self):
        rng = np.random.default_rng(25)
        for _ in range(300):
            m = int(rng.integers(1, 12))
            ev = EvidenceVector.p_values(rng.random(m))
            truth = GroundTruth(np.zeros(m, dtype=int))
            k = int(rng.integers(1, 4))
            size = int(rng.integers(0, m + 1))
            idx = frozenset(int(j) for j in rng.choice(m, size=size, replace=False))
            rej = rejection(ev, idx, k)
            assert kbfdr_indicator(rej, truth, k) == kfwer_indicator(rej, truth, k)


def sample(**kw) -> RunSample:
    base = dict(kbfdr_ind=0, kfwer_ind=0, fdp=0.0, tdr=1.0, power=0.0, rejections=0)
    base.update(kw)
    return RunSample(**base)


class TestAggregate:
    def test_identical_samples(self):
        rep = aggregate([sample()] * 100)
        assert rep.kbfdr == 0.0
        assert rep.kbfdr_se == 0.0
        assert rep.reps == 100

    def test_two_point_spread(self):
        rep = aggregate([sample(kbfdr_ind=0), sample(kbfdr_ind=1)])
        assert rep.kbfdr == 0.5
        assert rep.kbfdr_se == pytest.approx(0.5 / math.sqrt(2))

    def test_single_sample_has_zero_se(self):
        rep = aggregate([sample(power=0.7)])
        assert rep.power == 0.7
        assert rep.power_se == 0.0

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            aggregate([])

    def test_both_tdr_aggregations(self):
        rep = aggregate(
            [sample(rejections=0, tdr=1.0), sample(rejections=2, tdr=0.5)]
        )
        assert rep.tdr == pytest.approx(0.75)
        assert rep.tdr_nonempty == pytest.approx(0.5)
        assert rep.empty_runs == 1

    def test_no_nonempty_runs(self):
        rep = aggregate([sample(rejections=0)])
        assert math.isnan(rep.tdr_nonempty)
