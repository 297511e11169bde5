"""Approximate K-NN graph via NN-descent, with optional fused ranking."""

from __future__ import annotations

import numpy as np

from ..core import DistanceMetric
from . import _kernels
from .base import ProximityGraph, medoid_of, metric_code


def build_knn_graph(
    vectors: np.ndarray,
    k: int,
    iterations: int,
    metric: DistanceMetric,
    seed: int = 0,
    label_matrix: np.ndarray | None = None,
    lam: float = 0.0,
) -> ProximityGraph:
    """NN-descent: random K-NN guess refined by local joins.

    A positive `lam` together with `label_matrix` ranks neighbors by the
    fused vector+Hamming distance. Zero iterations return the random
    initialization unchanged.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n = vectors.shape[0]
    if k >= n:
        raise ValueError(f"K must be < n, got K={k}, n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    init = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        pick = rng.choice(n - 1, size=k, replace=False)
        pick[pick >= i] += 1  # skip self
        init[i] = np.sort(pick)

    if label_matrix is None or lam <= 0.0:
        labmat = np.zeros((0, 0), dtype=np.int32)
        lam = 0.0
    else:
        labmat = np.ascontiguousarray(label_matrix, dtype=np.int32)

    nbr_i, nbr_d = _kernels.nn_descent(vectors, metric_code(metric), labmat, float(lam), init, iterations)

    order = np.argsort(nbr_d, axis=1, kind="stable")
    nbr_sorted = np.take_along_axis(nbr_i, order, axis=1)
    indptr = np.arange(0, (n + 1) * k, k, dtype=np.int64)
    indices = nbr_sorted.reshape(-1).astype(np.int32)
    return ProximityGraph(
        layers=[(indptr, indices)],
        entry_point=medoid_of(vectors),
        max_degree=k,
    )
