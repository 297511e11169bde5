"""Exact filtered k-NN by full-precision scan over the filter map.

Doubles as the pre-filter brute force baseline and as the ground-truth
generator. Ties are broken by ascending record id so results are
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitmap import FilterBitmap, InvertedLabelIndex, bitmap_ids, filter_map
from .core import DistanceMetric, FilteredQuery, batch_distances
from .dataset import Dataset


@dataclass(frozen=True)
class OracleResult:
    ids: np.ndarray
    distances: np.ndarray
    satisfied_count: int


def top_k_by_distance(ids: np.ndarray, dists: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Select the k nearest (distance, then id) pairs, fully ordered.

    Shared by the oracle and by strategy-side final reranks so that every
    component resolves distance ties the same way.
    """
    ids = np.asarray(ids, dtype=np.int64)
    dists = np.asarray(dists, dtype=np.float64)
    k = min(k, ids.size)
    if k == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    order = np.lexsort((ids, dists))[:k]
    return ids[order], dists[order]


def exact_filtered_knn(
    dataset: Dataset,
    index: InvertedLabelIndex,
    query: FilteredQuery,
    metric: DistanceMetric = DistanceMetric.SQUARED_EUCLIDEAN,
) -> OracleResult:
    """Exact top-k among the records passing the query's filter map."""
    bitmap = filter_map(index, query.labels, query.constraint)
    return exact_knn_over_bitmap(dataset, bitmap, query.embedding, query.k, metric)


def exact_knn_over_bitmap(
    dataset: Dataset,
    bitmap: FilterBitmap,
    query_embedding: np.ndarray,
    k: int,
    metric: DistanceMetric = DistanceMetric.SQUARED_EUCLIDEAN,
) -> OracleResult:
    survivor_ids = bitmap_ids(bitmap)
    if survivor_ids.size == 0:
        return OracleResult(
            ids=np.empty(0, dtype=np.int64),
            distances=np.empty(0, dtype=np.float64),
            satisfied_count=0,
        )
    dists = batch_distances(metric, query_embedding, dataset.vectors[survivor_ids])
    ids, dd = top_k_by_distance(survivor_ids, dists, k)
    return OracleResult(ids=ids, distances=dd, satisfied_count=int(survivor_ids.size))
