"""Unified filtering layer: inverted bitsets, filter maps, cost contract."""

import numpy as np
import pytest

from fannsbench.bitmap import (
    FilterBitmap,
    bitmap_ids,
    bitmap_iter,
    build_inverted_index,
    combine_passes,
    filter_map,
)
from fannsbench.core import ConstraintViolationError, FilterConstraint, LabelSet, satisfies
from fannsbench.dataset import Dataset

from conftest import random_labeled_dataset

C = FilterConstraint


def bits(bitmap: FilterBitmap) -> list[int]:
    return bitmap.to_bool_array().astype(int).tolist()


class TestInvertedIndex:
    def test_label_one_bitset(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        assert bits(index.bitset(1)) == [1, 1, 1, 0, 1, 0, 1]

    def test_label_two_bitset(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        assert bits(index.bitset(2)) == [1, 1, 1, 0, 0, 1, 1]

    def test_empty_dataset(self):
        ds = Dataset(vectors=np.empty((0, 4), dtype=np.float32), label_sets=[])
        index = build_inverted_index(ds)
        assert index.n == 0
        assert index.bitset(3).count == 0

    def test_unknown_label_is_zero_bitmap(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        assert index.bitset(99).count == 0


class TestFilterMap:
    def test_containment_and(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        out = filter_map(index, LabelSet([1, 2]), C.CONTAINMENT)
        assert bits(out) == [1, 1, 1, 0, 0, 0, 1]

    def test_overlap_or(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        out = filter_map(index, LabelSet([1, 2]), C.OVERLAP)
        assert bits(out) == [1, 1, 1, 0, 1, 1, 1]

    def test_equality_keeps_exact_sets_only(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        out = filter_map(index, LabelSet([1, 2]), C.EQUALITY)
        assert bits(out) == [0, 0, 1, 0, 0, 0, 1]  # v3 and v7

    def test_unknown_query_label_containment_empty(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        out = filter_map(index, LabelSet([1, 99]), C.CONTAINMENT)
        assert out.count == 0

    def test_empty_query(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        assert filter_map(index, LabelSet(), C.CONTAINMENT).count == 7
        assert filter_map(index, LabelSet(), C.OVERLAP).count == 0
        assert filter_map(index, LabelSet(), C.EQUALITY).count == 0

    def test_fixed_length_on_mixed_dataset_raises(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        with pytest.raises(ConstraintViolationError):
            filter_map(index, LabelSet([1, 2]), C.FIXED_LENGTH_EQUALITY)

    def test_equivalence_oracle_random_datasets(self):
        rng = np.random.Generator(np.random.PCG64(99))
        for trial in range(25):
            n = int(rng.integers(1, 300))
            ds = random_labeled_dataset(n, 2, seed=trial, universe=10, max_labels=4)
            index = build_inverted_index(ds)
            for _ in range(4):
                qlen = int(rng.integers(1, 4))
                query = LabelSet(rng.choice(12, size=qlen, replace=False).tolist())
                for constraint in (C.CONTAINMENT, C.OVERLAP, C.EQUALITY):
                    got = filter_map(index, query, constraint).to_bool_array()
                    want = np.array(
                        [satisfies(ls, query, constraint) for ls in ds.label_sets]
                    )
                    assert np.array_equal(got, want), (trial, constraint)


class TestCostContract:
    def test_combine_pass_count(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        for qlen in (1, 2, 3):
            query = LabelSet(range(1, qlen + 1))
            for constraint in (C.CONTAINMENT, C.OVERLAP):
                combine_passes.reset()
                filter_map(index, query, constraint)
                assert combine_passes.count == qlen - 1

    def test_popcount_bounds(self):
        rng = np.random.Generator(np.random.PCG64(5))
        n = 500
        for _ in range(30):
            a = FilterBitmap.from_ids(rng.choice(n, size=rng.integers(0, n), replace=False), n)
            b = FilterBitmap.from_ids(rng.choice(n, size=rng.integers(0, n), replace=False), n)
            assert (a & b).count <= min(a.count, b.count)
            assert (a | b).count >= max(a.count, b.count)


class TestBitmapIter:
    def test_and_result_positions(self, fig_dataset):
        index = build_inverted_index(fig_dataset)
        out = filter_map(index, LabelSet([1, 2]), C.CONTAINMENT)
        assert list(bitmap_iter(out)) == [0, 1, 2, 6]

    def test_all_zero(self):
        assert list(bitmap_iter(FilterBitmap.zeros(17))) == []

    def test_all_one(self):
        assert list(bitmap_iter(FilterBitmap.ones(5))) == [0, 1, 2, 3, 4]

    def test_count_matches_popcount(self):
        rng = np.random.Generator(np.random.PCG64(6))
        for _ in range(20):
            n = int(rng.integers(1, 400))
            ids = rng.choice(n, size=rng.integers(0, n), replace=False)
            bm = FilterBitmap.from_ids(ids, n)
            got = list(bitmap_iter(bm))
            assert len(got) == bm.count
            assert got == sorted(ids.tolist())
            assert np.array_equal(bitmap_ids(bm), np.array(sorted(ids), dtype=np.int64))

    def test_tail_bits_zero(self):
        bm = FilterBitmap.ones(70)
        assert bm.count == 70
        assert list(bitmap_iter(bm))[-1] == 69
