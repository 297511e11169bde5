"""Exact filtered scan: the ground-truth generator and brute-force baseline."""

import numpy as np

from fannsbench.bitmap import FilterBitmap, build_inverted_index
from fannsbench.core import FilterConstraint, FilteredQuery, LabelSet
from fannsbench.oracle import exact_filtered_knn, exact_knn_over_bitmap

from conftest import METRIC, random_labeled_dataset

C = FilterConstraint


def make_query(embedding, labels, k, constraint):
    return FilteredQuery(
        embedding=np.asarray(embedding, dtype=np.float32),
        labels=LabelSet(labels),
        k=k,
        constraint=constraint,
    )


class TestFigExamples:
    def test_containment_one_nn_is_v3(self, fig_dataset, fig_query_embedding):
        index = build_inverted_index(fig_dataset)
        q = make_query(fig_query_embedding, [1, 2], 1, C.CONTAINMENT)
        res = exact_filtered_knn(fig_dataset, index, q, METRIC)
        assert res.ids.tolist() == [2]  # v3

    def test_overlap_one_nn_is_v5(self, fig_dataset, fig_query_embedding):
        index = build_inverted_index(fig_dataset)
        q = make_query(fig_query_embedding, [1, 2], 1, C.OVERLAP)
        res = exact_filtered_knn(fig_dataset, index, q, METRIC)
        assert res.ids.tolist() == [4]  # v5

    def test_unfiltered_one_nn_is_v5(self, fig_dataset, fig_query_embedding):
        res = exact_knn_over_bitmap(
            fig_dataset, FilterBitmap.ones(7), fig_query_embedding, 1, METRIC
        )
        assert res.ids.tolist() == [4]


class TestOracleContract:
    def test_k_above_survivor_count_returns_all_sorted(self):
        ds = random_labeled_dataset(100, 4, seed=2, universe=5)
        index = build_inverted_index(ds)
        q = make_query(ds.vectors[0], [0, 1], 50, C.EQUALITY)
        res = exact_filtered_knn(ds, index, q, METRIC)
        assert len(res.ids) == min(50, res.satisfied_count)
        # independent check: sort the satisfying subset directly
        match = [
            i for i, ls in enumerate(ds.label_sets) if tuple(ls) == (0, 1)
        ]
        diff = ds.vectors[match].astype(np.float64) - ds.vectors[0].astype(np.float64)
        d = np.einsum("ij,ij->i", diff, diff)
        order = np.lexsort((match, d))
        want = np.asarray(match, dtype=np.int64)[order][:50]
        assert np.array_equal(res.ids, want)

    def test_zero_survivors_empty_result(self, fig_dataset, fig_query_embedding):
        index = build_inverted_index(fig_dataset)
        q = make_query(fig_query_embedding, [42], 5, C.OVERLAP)
        res = exact_filtered_knn(fig_dataset, index, q, METRIC)
        assert res.satisfied_count == 0
        assert res.ids.size == 0

    def test_all_ones_bitmap_equals_unfiltered_scan(self):
        ds = random_labeled_dataset(300, 8, seed=7)
        query = ds.vectors[3] + 0.05
        res = exact_knn_over_bitmap(ds, FilterBitmap.ones(ds.n), query, 10, METRIC)
        diff = ds.vectors.astype(np.float64) - query.astype(np.float64)
        d = np.einsum("ij,ij->i", diff, diff)
        want = np.lexsort((np.arange(ds.n), d))[:10]
        assert np.array_equal(res.ids, want)

    def test_tie_break_ascending_id(self):
        vectors = np.zeros((6, 3), dtype=np.float32)  # all identical: pure ties
        ds_sets = [LabelSet([1])] * 6
        from fannsbench.dataset import Dataset

        ds = Dataset(vectors=vectors, label_sets=ds_sets)
        res = exact_knn_over_bitmap(ds, FilterBitmap.ones(6), np.ones(3, np.float32), 4, METRIC)
        assert res.ids.tolist() == [0, 1, 2, 3]

    def test_determinism_across_runs(self):
        ds = random_labeled_dataset(500, 6, seed=11)
        index = build_inverted_index(ds)
        q = make_query(ds.vectors[9], [0], 10, C.OVERLAP)
        a = exact_filtered_knn(ds, index, q, METRIC)
        b = exact_filtered_knn(ds, index, q, METRIC)
        assert np.array_equal(a.ids, b.ids)
        assert np.array_equal(a.distances, b.distances)
