"""Predicate, metric, recall, and selectivity behavior of the core model."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fannsbench.core import (
    ConstraintViolationError,
    DistanceMetric,
    FilterConstraint,
    FilteredQuery,
    GroundTruth,
    LabelSet,
    distance,
    ensure_fixed_length,
    recall_at_k,
    satisfies,
    selectivity,
)

C = FilterConstraint


class TestLabelSet:
    def test_normalizes_sorted_unique(self):
        assert tuple(LabelSet([2, 1, 2])) == (1, 2)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            LabelSet([-1, 3])

    def test_empty(self):
        assert tuple(LabelSet()) == ()


class TestSatisfies:
    def test_containment_exact_match(self):
        # v3 carries exactly {1,2} and passes containment for query {1,2}
        assert satisfies(LabelSet([1, 2]), LabelSet([1, 2]), C.CONTAINMENT)

    def test_overlap_disjoint(self):
        # the only excluded record under overlap has no shared label
        assert not satisfies(LabelSet([3]), LabelSet([1, 2]), C.OVERLAP)

    def test_empty_query_contained_everywhere(self):
        for base in (LabelSet(), LabelSet([5]), LabelSet([0, 9])):
            assert satisfies(base, LabelSet(), C.CONTAINMENT)

    def test_equality_needs_exact_set(self):
        assert satisfies(LabelSet([1, 2]), LabelSet([1, 2]), C.EQUALITY)
        assert not satisfies(LabelSet([1, 2, 3]), LabelSet([1, 2]), C.EQUALITY)

    def test_containment_superset_passes(self):
        assert satisfies(LabelSet([1, 2, 3]), LabelSet([1, 2]), C.CONTAINMENT)

    def test_monotone_in_query_shrinking(self):
        rng = np.random.Generator(np.random.PCG64(0))
        for _ in range(200):
            base = LabelSet(rng.choice(8, size=rng.integers(0, 5), replace=False).tolist())
            query = LabelSet(rng.choice(8, size=rng.integers(1, 5), replace=False).tolist())
            whole = satisfies(base, query, C.CONTAINMENT)
            for r in range(len(query)):
                sub = LabelSet(list(query)[: r + 1])
                if whole:
                    assert satisfies(base, sub, C.CONTAINMENT)

    def test_equality_implies_containment_and_overlap(self):
        universe = range(8)
        subsets = [
            LabelSet(c)
            for r in range(0, 4)
            for c in itertools.combinations(universe, r)
        ]
        for base in subsets:
            for query in subsets:
                if satisfies(base, query, C.EQUALITY):
                    assert satisfies(base, query, C.CONTAINMENT)
                    if len(query) > 0:
                        assert satisfies(base, query, C.OVERLAP)


class TestDistance:
    def test_identity_zero(self):
        a = np.zeros(2, dtype=np.float32)
        assert distance(DistanceMetric.SQUARED_EUCLIDEAN, a, a) == 0.0

    def test_unit_cross(self):
        a = np.array([1.0, 0.0], dtype=np.float32)
        b = np.array([0.0, 1.0], dtype=np.float32)
        assert distance(DistanceMetric.SQUARED_EUCLIDEAN, a, b) == 2.0

    def test_three_four_five(self):
        a = np.array([3.0, 4.0], dtype=np.float32)
        b = np.zeros(2, dtype=np.float32)
        assert distance(DistanceMetric.SQUARED_EUCLIDEAN, a, b) == 25.0

    def test_inner_product_is_negated(self):
        a = np.array([1.0, 2.0], dtype=np.float32)
        b = np.array([3.0, 4.0], dtype=np.float32)
        assert distance(DistanceMetric.INNER_PRODUCT_DISTANCE, a, b) == -11.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            distance(DistanceMetric.SQUARED_EUCLIDEAN, np.zeros(2), np.zeros(3))

    def test_symmetry(self):
        rng = np.random.Generator(np.random.PCG64(1))
        for _ in range(50):
            a = rng.standard_normal(8).astype(np.float32)
            b = rng.standard_normal(8).astype(np.float32)
            assert distance(DistanceMetric.SQUARED_EUCLIDEAN, a, b) == distance(
                DistanceMetric.SQUARED_EUCLIDEAN, b, a
            )


def _truth(ids, dists):
    return GroundTruth(ids=np.asarray(ids), distances=np.asarray(dists, dtype=np.float32))


class TestRecallAtK:
    def test_partial_overlap(self):
        truth = _truth(range(10), np.arange(10) * 0.1)
        result = list(range(8)) + [100, 101]
        assert recall_at_k(result, truth, 10) == pytest.approx(0.8)

    def test_identity(self):
        truth = _truth(range(10), np.arange(10) * 0.1)
        assert recall_at_k(list(range(10)), truth, 10) == 1.0

    def test_disjoint(self):
        truth = _truth(range(10), np.arange(10) * 0.1)
        assert recall_at_k(list(range(100, 110)), truth, 10) == 0.0

    def test_tie_at_kth_distance_counts(self):
        # id 10 sits at the same distance as the 10th true neighbor
        dists = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.9, 1.5]
        truth = _truth(range(12), dists)
        result = list(range(9)) + [10]  # swapped the tied neighbor in
        assert recall_at_k(result, truth, 10) == 1.0

    def test_short_truth_uses_min_denominator(self):
        truth = _truth([4, 7], [0.1, 0.2])
        assert recall_at_k([4, 7, 9], truth, 10) == 1.0

    def test_empty_truth_raises(self):
        truth = GroundTruth(ids=np.empty(0), distances=np.empty(0))
        with pytest.raises(ValueError):
            recall_at_k([1], truth, 10)

    def test_prefix_of_truth_is_perfect(self):
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(20):
            m = int(rng.integers(10, 40))
            dists = np.sort(rng.random(m))
            ids = rng.choice(10_000, size=m, replace=False)
            truth = _truth(ids, dists)
            k = int(rng.integers(1, m + 1))
            assert recall_at_k(ids[:k].tolist(), truth, k) == 1.0


class TestSelectivity:
    def test_fig_equality_two_of_seven(self, fig_dataset):
        sel = selectivity(fig_dataset.label_sets, LabelSet([1, 2]), C.EQUALITY)
        assert sel == pytest.approx(2 / 7)

    def test_empty_query_containment_full(self, fig_dataset):
        assert selectivity(fig_dataset.label_sets, LabelSet(), C.CONTAINMENT) == 1.0

    def test_empty_dataset_raises(self):
        with pytest.raises(ValueError):
            selectivity([], LabelSet([1]), C.OVERLAP)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_constraint_ordering(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        n = int(rng.integers(1, 60))
        sets = []
        for _ in range(n):
            count = int(rng.integers(0, 4))
            sets.append(LabelSet(rng.choice(6, size=count, replace=False).tolist()))
        qlen = int(rng.integers(1, 4))
        query = LabelSet(rng.choice(6, size=qlen, replace=False).tolist())
        s_over = selectivity(sets, query, C.OVERLAP)
        s_cont = selectivity(sets, query, C.CONTAINMENT)
        s_eq = selectivity(sets, query, C.EQUALITY)
        assert s_over >= s_cont >= s_eq


class TestFixedLength:
    def test_uniform_lengths_pass(self):
        assert ensure_fixed_length([LabelSet([1, 2]), LabelSet([3, 4])]) == 2

    def test_mixed_lengths_raise(self):
        with pytest.raises(ConstraintViolationError):
            ensure_fixed_length([LabelSet([1]), LabelSet([1, 2])])

    def test_query_validation(self):
        with pytest.raises(ValueError):
            FilteredQuery(
                embedding=np.zeros(2, dtype=np.float32),
                labels=LabelSet([1]),
                k=0,
                constraint=C.EQUALITY,
            )
