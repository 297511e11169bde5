"""k-means, PQ codebooks, ADC, and the IVF-PQ partition."""

import numpy as np
import pytest

from fannsbench.quant import (
    adc_distance,
    adc_distances,
    adc_table,
    ivfpq_build,
    ivfpq_scan,
    kmeans,
    kmeans_objective,
    pq_train_encode,
)

from conftest import METRIC


class TestKMeans:
    def test_k_equals_n_zero_objective(self):
        rng = np.random.Generator(np.random.PCG64(0))
        pts = rng.standard_normal((12, 4)).astype(np.float32)
        model = kmeans(pts, 12, seed=1)
        assert kmeans_objective(pts, model) == pytest.approx(0.0, abs=1e-9)

    def test_two_blobs(self):
        rng = np.random.Generator(np.random.PCG64(1))
        blob_a = rng.standard_normal((8, 3)).astype(np.float32) * 0.1 + 10.0
        blob_b = rng.standard_normal((8, 3)).astype(np.float32) * 0.1 - 10.0
        pts = np.vstack([blob_a, blob_b])
        model = kmeans(pts, 2, seed=2)
        boxes = [
            (blob.min(axis=0), blob.max(axis=0)) for blob in (blob_a, blob_b)
        ]
        for centroid in model.centroids:
            inside = any(
                np.all(centroid >= lo - 1e-6) and np.all(centroid <= hi + 1e-6)
                for lo, hi in boxes
            )
            assert inside

    def test_objective_monotone_per_iteration(self):
        rng = np.random.Generator(np.random.PCG64(2))
        pts = rng.standard_normal((300, 6)).astype(np.float32)
        prev = None
        for iters in range(1, 8):
            model = kmeans(pts, 8, max_iterations=iters, seed=3)
            obj = kmeans_objective(pts, model)
            if prev is not None:
                assert obj <= prev + 1e-6
            prev = obj

    def test_zero_k_raises(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((4, 2), dtype=np.float32), 0)


class TestPQ:
    def test_repeated_vector_zero_reconstruction(self):
        vec = np.arange(8, dtype=np.float32)
        data = np.tile(vec, (20, 1))
        book, codes = pq_train_encode(data, 4, seed=0)
        assert np.all(codes == codes[0])
        recon = book.decode(codes)
        assert np.allclose(recon, data, atol=1e-6)

    def test_scalar_case_exact_on_small_set(self):
        rng = np.random.Generator(np.random.PCG64(3))
        data = rng.standard_normal((200, 4)).astype(np.float32)
        book, codes = pq_train_encode(data, 4, seed=1)  # m = d: one dim per subspace
        recon = book.decode(codes)
        assert np.allclose(recon, data, atol=1e-5)

    def test_adc_error_decreases_with_m(self):
        rng = np.random.Generator(np.random.PCG64(4))
        data = rng.standard_normal((600, 32)).astype(np.float32)
        query = rng.standard_normal(32).astype(np.float32)
        diff = data.astype(np.float64) - query.astype(np.float64)
        true = np.einsum("ij,ij->i", diff, diff)
        errors = []
        for m in (2, 4, 8):
            book, codes = pq_train_encode(data, m, seed=2)
            table = adc_table(book, query, METRIC)
            approx = adc_distances(table, codes)
            errors.append(float(np.mean(np.abs(approx - true) / np.maximum(true, 1e-9))))
        assert errors[0] > errors[-1]

    def test_invalid_m(self):
        with pytest.raises(ValueError):
            pq_train_encode(np.zeros((10, 6), dtype=np.float32), 4)


class TestADC:
    def test_reconstructable_query_zero(self):
        data = np.tile(np.arange(8, dtype=np.float32), (10, 1))
        book, codes = pq_train_encode(data, 4, seed=0)
        assert adc_distance(book, data[0], codes[0], METRIC) == pytest.approx(0.0, abs=1e-9)

    def test_non_negative(self):
        rng = np.random.Generator(np.random.PCG64(5))
        data = rng.standard_normal((100, 8)).astype(np.float32)
        book, codes = pq_train_encode(data, 4, seed=1)
        for _ in range(20):
            q = rng.standard_normal(8).astype(np.float32)
            assert adc_distance(book, q, codes[rng.integers(100)], METRIC) >= 0

    def test_median_relative_error_frozen_bound(self):
        # calibrated once on this construction and frozen: median < 0.35
        rng = np.random.Generator(np.random.PCG64(6))
        data = rng.standard_normal((1000, 32)).astype(np.float32)
        book, codes = pq_train_encode(data, 8, seed=2)
        q = rng.standard_normal(32).astype(np.float32)
        diff = data.astype(np.float64) - q.astype(np.float64)
        true = np.einsum("ij,ij->i", diff, diff)
        approx = adc_distances(adc_table(book, q, METRIC), codes)
        rel = np.abs(approx - true) / np.maximum(true, 1e-12)
        assert float(np.median(rel)) < 0.35

    def test_exact_when_reconstruction_exact(self):
        rng = np.random.Generator(np.random.PCG64(7))
        data = rng.standard_normal((150, 6)).astype(np.float32)
        book, codes = pq_train_encode(data, 6, seed=3)
        q = rng.standard_normal(6).astype(np.float32)
        recon = book.decode(codes)
        for i in (0, 7, 50):
            want = float(np.sum((recon[i].astype(np.float64) - q.astype(np.float64)) ** 2))
            got = adc_distance(book, q, codes[i], METRIC)
            assert got == pytest.approx(want, rel=1e-5)


class TestIVFPQ:
    def test_single_list_holds_all(self):
        rng = np.random.Generator(np.random.PCG64(8))
        data = rng.standard_normal((50, 8)).astype(np.float32)
        index = ivfpq_build(data, nlist=1, m=4, seed=0)
        assert index.list_ids[0].tolist() == list(range(50))

    def test_partition_property(self):
        rng = np.random.Generator(np.random.PCG64(9))
        data = rng.standard_normal((400, 8)).astype(np.float32)
        index = ivfpq_build(data, nlist=16, m=4, seed=1)
        combined = np.concatenate(index.list_ids)
        assert len(combined) == 400
        assert len(np.unique(combined)) == 400
        for ids in index.list_ids:
            assert np.all(np.diff(ids) > 0) or ids.size <= 1

    def test_full_scan_with_rerank_reproduces_exact(self):
        rng = np.random.Generator(np.random.PCG64(10))
        data = rng.standard_normal((1000, 16)).astype(np.float32)
        index = ivfpq_build(data, nlist=25, m=4, seed=2)
        q = rng.standard_normal(16).astype(np.float32)
        ids, _ = ivfpq_scan(index, q, nprobe=25, metric=METRIC)
        assert len(ids) == 1000
        # rerank everything at full precision
        diff = data.astype(np.float64)[ids] - q.astype(np.float64)
        d = np.einsum("ij,ij->i", diff, diff)
        top = ids[np.lexsort((ids, d))][:10]
        diff_all = data.astype(np.float64) - q.astype(np.float64)
        d_all = np.einsum("ij,ij->i", diff_all, diff_all)
        want = np.lexsort((np.arange(1000), d_all))[:10]
        assert np.array_equal(np.sort(top), np.sort(want))
