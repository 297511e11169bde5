"""File formats, synthetic labels, stratification, ground-truth attachment."""

import numpy as np
import pytest

from fannsbench.bitmap import build_inverted_index
from fannsbench.core import FilterConstraint, LabelSet, selectivity
from fannsbench.oracle import exact_filtered_knn
from fannsbench.workload import (
    FileFormatError,
    QuerySeed,
    attach_ground_truth,
    decode_fixed_length,
    encode_fixed_length,
    gen_fixed_length_labels,
    load_fvecs,
    load_labels,
    load_workload,
    save_fvecs,
    save_labels,
    save_workload,
    stratify_by_length,
    stratify_by_selectivity,
)

from conftest import METRIC, random_labeled_dataset

C = FilterConstraint


class TestFvecs:
    def test_single_vector(self, tmp_path):
        path = tmp_path / "one.fvecs"
        save_fvecs(path, np.array([[1.0, 2.0]], dtype=np.float32))
        got = load_fvecs(path)
        assert got.shape == (1, 2)
        assert got.tolist() == [[1.0, 2.0]]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.fvecs"
        path.write_bytes(b"")
        assert load_fvecs(path).shape == (0, 0)

    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.Generator(np.random.PCG64(0))
        data = rng.standard_normal((100, 16)).astype(np.float32)
        path = tmp_path / "random.fvecs"
        save_fvecs(path, data)
        got = load_fvecs(path)
        assert got.tobytes() == data.tobytes()

    def test_truncated_reports_offset(self, tmp_path):
        path = tmp_path / "bad.fvecs"
        save_fvecs(path, np.ones((2, 4), dtype=np.float32))
        raw = path.read_bytes()
        path.write_bytes(raw[:-3])
        with pytest.raises(FileFormatError) as err:
            load_fvecs(path)
        assert "byte" in str(err.value)

    def test_inconsistent_dimension(self, tmp_path):
        path = tmp_path / "mixed.fvecs"
        buf = (
            np.array([2], np.int32).tobytes() + np.array([1.0, 2.0], np.float32).tobytes()
            + np.array([5], np.int32).tobytes() + np.array([3.0, 4.0], np.float32).tobytes()
        )
        path.write_bytes(buf)
        with pytest.raises(FileFormatError):
            load_fvecs(path)


class TestLabels:
    def test_sort_and_dedup(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("2,1,2\n\n7\n")
        sets, mapping = load_labels(path)
        assert [tuple(s) for s in sets] == [(1, 2), (), (7,)]
        assert mapping is None

    def test_remap_to_dense(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("10,700\n10\n")
        sets, mapping = load_labels(path, remap=True)
        assert mapping == {10: 0, 700: 1}
        assert [tuple(s) for s in sets] == [(0, 1), (0,)]

    def test_non_integer_token_reports_line(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("1,2\nfoo,3\n")
        with pytest.raises(FileFormatError) as err:
            load_labels(path)
        assert "line 2" in str(err.value)

    def test_save_load_round_trip(self, tmp_path):
        sets = [LabelSet([3, 1]), LabelSet(), LabelSet([0, 5, 9])]
        path = tmp_path / "x.txt"
        save_labels(path, sets)
        got, _ = load_labels(path)
        assert got == sets


class TestFixedLengthGeneration:
    def test_combination_space(self):
        labs = gen_fixed_length_labels(5000, 4, 3, seed=1)
        combos = {tuple(row) for row in labs.tolist()}
        assert len(combos) == 81

    def test_selectivity_in_binomial_band(self):
        n = 20000
        labs = gen_fixed_length_labels(n, 4, 3, seed=2)
        sets = encode_fixed_length(labs, 3)
        p = 1 / 81
        band = 3 * np.sqrt(p * (1 - p) / n)
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(10):
            probe = sets[int(rng.integers(n))]
            sigma = selectivity(sets, probe, C.FIXED_LENGTH_EQUALITY)
            assert abs(sigma - p) <= band

    def test_single_value_per_position(self):
        labs = gen_fixed_length_labels(50, 4, 1, seed=3)
        assert np.all(labs == 0)

    def test_encode_decode_inverse(self):
        labs = gen_fixed_length_labels(200, 4, 3, seed=4)
        sets = encode_fixed_length(labs, 3)
        back = decode_fixed_length(sets, 4, 3)
        assert np.array_equal(labs, back)


class TestStratification:
    def test_length_terciles(self):
        rng = np.random.Generator(np.random.PCG64(5))
        base = []
        for length in (1, 2, 3):
            for _ in range(100):
                base.append(LabelSet(rng.choice(20, size=length, replace=False).tolist()))
        buckets = stratify_by_length(base, C.CONTAINMENT, per_group=30, seed=6)
        assert len(buckets) == 3
        meds = [np.median([len(s.labels) for s in b]) for b in buckets]
        assert meds[0] <= meds[1] <= meds[2]

    def test_degenerate_lengths_warn(self):
        base = [LabelSet([i % 5]) for i in range(100)]
        with pytest.warns(UserWarning):
            buckets = stratify_by_length(base, C.OVERLAP, per_group=10, seed=7)
        for b in buckets:
            assert all(len(s.labels) == 1 for s in b)

    def test_total_query_count(self):
        rng = np.random.Generator(np.random.PCG64(8))
        base = [
            LabelSet(rng.choice(30, size=rng.integers(1, 6), replace=False).tolist())
            for _ in range(2000)
        ]
        buckets = stratify_by_length(base, C.CONTAINMENT, per_group=50, seed=9)
        assert sum(len(b) for b in buckets) == 150

    def test_selectivity_bucket_monotonicity(self):
        ds = random_labeled_dataset(1500, 2, seed=10, universe=12, max_labels=3)
        buckets = stratify_by_selectivity(
            ds.label_sets, C.OVERLAP, percentiles=(75, 50, 25, 1), per_group=40, seed=11
        )
        medians = [
            np.median([selectivity(ds.label_sets, s.labels, C.OVERLAP) for s in b])
            for b in buckets
        ]
        assert medians[0] >= medians[1] >= medians[2] >= medians[3]

    def test_reproducible_buckets(self):
        ds = random_labeled_dataset(500, 2, seed=12, universe=8)
        a = stratify_by_length(ds.label_sets, C.OVERLAP, per_group=20, seed=13)
        b = stratify_by_length(ds.label_sets, C.OVERLAP, per_group=20, seed=13)
        assert [[tuple(s.labels) for s in bucket] for bucket in a] == [
            [tuple(s.labels) for s in bucket] for bucket in b
        ]


class TestImportDataset:
    def test_remap_persisted_beside_output(self, tmp_path):
        from fannsbench.workload import import_dataset, load_dataset
        import json

        rng = np.random.Generator(np.random.PCG64(30))
        save_fvecs(tmp_path / "v.fvecs", rng.standard_normal((6, 4)).astype(np.float32))
        (tmp_path / "l.txt").write_text("10,700\n700\n10\n3000\n10,3000\n700\n")
        ds = import_dataset(tmp_path / "v.fvecs", tmp_path / "l.txt", tmp_path / "out")
        mapping = json.loads((tmp_path / "out" / "label_mapping.json").read_text())
        assert mapping == {"10": 0, "700": 1, "3000": 2}
        assert ds.label_universe_size == 3
        back = load_dataset(tmp_path / "out")
        assert back.label_sets == ds.label_sets


class TestAttachGroundTruth:
    def test_k_max_one_keeps_any_match(self):
        ds = random_labeled_dataset(200, 4, seed=14, universe=4)
        seeds = [QuerySeed(labels=ds.label_sets[i], stratum="s") for i in range(10)]
        wl = attach_ground_truth(
            ds.vectors[:10], seeds, ds, C.OVERLAP, k=1, k_max=1, metric=METRIC
        )
        assert len(wl) == 10

    def test_short_queries_dropped_under_guarantee(self):
        ds = random_labeled_dataset(300, 4, seed=15, universe=4)
        rare = LabelSet([77])  # matches nothing
        seeds = [QuerySeed(labels=rare, stratum="s")] + [
            QuerySeed(labels=ds.label_sets[0], stratum="s")
        ]
        wl = attach_ground_truth(
            ds.vectors[:2], seeds, ds, C.OVERLAP, k=5, k_max=5, metric=METRIC
        )
        assert len(wl) == 1

    def test_retained_queries_have_full_truth(self):
        ds = random_labeled_dataset(500, 4, seed=16, universe=3)
        seeds = [QuerySeed(labels=ds.label_sets[i], stratum="s") for i in range(20)]
        wl = attach_ground_truth(
            ds.vectors[:20], seeds, ds, C.OVERLAP, k=10, k_max=50, metric=METRIC
        )
        assert all(len(t) == 50 for t in wl.truths)

    def test_all_dropped_raises(self):
        ds = random_labeled_dataset(100, 4, seed=17, universe=4)
        seeds = [QuerySeed(labels=LabelSet([66]), stratum="s")]
        with pytest.raises(ValueError):
            attach_ground_truth(ds.vectors[:1], seeds, ds, C.OVERLAP, k=5, k_max=5)


class TestWorkloadRoundTrip:
    def test_lossless(self, tmp_path):
        ds = random_labeled_dataset(400, 8, seed=18, universe=4)
        seeds = [QuerySeed(labels=ds.label_sets[i], stratum=f"s{i % 2}") for i in range(15)]
        wl = attach_ground_truth(
            ds.vectors[:15], seeds, ds, C.OVERLAP, k=10, k_max=20, metric=METRIC
        )
        save_workload(tmp_path / "w", wl)
        back = load_workload(tmp_path / "w")
        assert back.scenario == wl.scenario
        assert back.k == wl.k and back.k_max == wl.k_max
        assert back.strata == wl.strata
        assert len(back) == len(wl)
        for qa, qb in zip(wl.queries, back.queries):
            assert qa.embedding.tobytes() == qb.embedding.tobytes()
            assert qa.labels == qb.labels
        for ta, tb in zip(wl.truths, back.truths):
            assert np.array_equal(ta.ids, tb.ids)
            assert ta.distances.tobytes() == tb.distances.tobytes()
        assert back.satisfied_counts == wl.satisfied_counts

    def test_ground_truth_revalidates_against_fresh_oracle(self, tmp_path):
        from fannsbench.core import FilteredQuery

        ds = random_labeled_dataset(300, 6, seed=19, universe=4)
        seeds = [QuerySeed(labels=ds.label_sets[i], stratum="s") for i in range(20)]
        wl = attach_ground_truth(
            ds.vectors[:20], seeds, ds, C.CONTAINMENT, k=5, k_max=10, metric=METRIC
        )
        save_workload(tmp_path / "w", wl)
        back = load_workload(tmp_path / "w")
        index = build_inverted_index(ds)
        for i in range(0, len(back), 4):  # spot check a sample
            q = back.queries[i]
            res = exact_filtered_knn(
                ds, index,
                FilteredQuery(embedding=q.embedding, labels=q.labels,
                              k=back.k_max, constraint=back.scenario),
                METRIC,
            )
            assert np.array_equal(res.ids, back.truths[i].ids)
