"""Vamana graph construction with optional label-aware gating."""

from __future__ import annotations

import numpy as np

from ..core import DistanceMetric, LabelSet
from . import _kernels
from .base import ProximityGraph, PruneParams, _labels_to_csr, medoid_of, metric_code


def per_label_medoids(vectors: np.ndarray, label_sets: list[LabelSet]) -> dict[int, int]:
    """Medoid record of each label's member subset."""
    members: dict[int, list[int]] = {}
    for i, ls in enumerate(label_sets):
        for lab in ls:
            members.setdefault(lab, []).append(i)
    return {
        lab: medoid_of(vectors, np.asarray(ids, dtype=np.int64))
        for lab, ids in members.items()
    }


def build_vamana(
    vectors: np.ndarray,
    params: PruneParams,
    metric: DistanceMetric,
    seed: int = 0,
    label_sets: list[LabelSet] | None = None,
    label_aware: bool = False,
    node_ids: np.ndarray | None = None,
) -> tuple[ProximityGraph, dict[int, int]]:
    """Insert points in a seeded random order, alpha-pruning as we go.

    With `label_aware`, candidate collection admits only nodes sharing a
    label with the inserted point, pruning requires label overlap between
    the dominating pair, and each insertion starts from the medoids of the
    point's labels instead of the global medoid. Returns the graph plus
    the per-label start points ({} when label-agnostic).

    `node_ids` restricts the build to a subset of rows (adjacency stays
    indexed by the full id space), which the per-label stitched builder
    relies on.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n = vectors.shape[0]
    if n == 0:
        raise ValueError("cannot build a graph over zero records")
    r = int(params.target_degree)
    rng = np.random.Generator(np.random.PCG64(seed))

    if node_ids is None:
        node_ids = np.arange(n, dtype=np.int64)
    else:
        node_ids = np.asarray(node_ids, dtype=np.int64)
    order = node_ids[rng.permutation(node_ids.size)]

    if label_aware:
        if label_sets is None:
            raise ValueError("label_aware build requires label sets")
        starts = per_label_medoids(vectors, label_sets)
        fallback = medoid_of(vectors, node_ids)
        ent_lists = [
            sorted({starts[lab] for lab in label_sets[i] if lab in starts}) or [fallback]
            for i in order
        ]
        lab_indptr, lab_ids = _labels_to_csr(label_sets)
        gate = use_label_prune = True
    else:
        starts = {}
        med = medoid_of(vectors, node_ids)
        ent_lists = [[med]] * order.size
        lab_indptr = np.zeros(n + 1, dtype=np.int64)
        lab_ids = np.zeros(0, dtype=np.int32)
        gate = use_label_prune = False

    ent_counts = np.fromiter((len(e) for e in ent_lists), np.int64, order.size)
    ent_indptr = np.zeros(order.size + 1, dtype=np.int64)
    np.cumsum(ent_counts, out=ent_indptr[1:])
    ent_ids = np.empty(int(ent_indptr[-1]), dtype=np.int64)
    for t, ents in enumerate(ent_lists):
        ent_ids[ent_indptr[t] : ent_indptr[t + 1]] = ents

    adj = np.full((n, r), -1, dtype=np.int32)
    deg = np.zeros(n, dtype=np.int32)
    _kernels.vamana_build(
        vectors, order, ent_indptr, ent_ids, adj, deg,
        r, int(params.candidate_pool), float(params.alpha), metric_code(metric),
        gate, use_label_prune, lab_indptr, lab_ids,
    )

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg.astype(np.int64), out=indptr[1:])
    indices = np.empty(int(indptr[-1]), dtype=np.int32)
    for i in range(n):
        indices[indptr[i] : indptr[i + 1]] = adj[i, : deg[i]]
    entry = medoid_of(vectors, node_ids)
    return (
        ProximityGraph(layers=[(indptr, indices)], entry_point=entry, max_degree=r),
        starts,
    )
