"""Hybrid-search Vamana variants: label-aware build and partition-then-stitch.

Both searches expand only nodes whose labels overlap the query's and run
the full constraint check right before a node enters the result list, so
multi-label containment and equality queries work on top of the same
graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bitmap import FilterBitmap
from ..core import (
    DistanceMetric,
    FilterConstraint,
    FilteredQuery,
    batch_distances,
    ensure_fixed_length,
)
from ..dataset import Dataset
from ..graph import ProximityGraph, PruneParams, adjacency_lists_to_csr, medoid_of, metric_code
from ..graph import _kernels
from ..graph.vamana import build_vamana, per_label_medoids
from .base import Strategy

_CONSTRAINT_KIND = {
    FilterConstraint.CONTAINMENT: 0,
    FilterConstraint.OVERLAP: 1,
    FilterConstraint.EQUALITY: 2,
    FilterConstraint.FIXED_LENGTH_EQUALITY: 2,
}


@dataclass
class FilteredVamanaParams:
    r: int = 32
    l_build: int = 64
    alpha: float = 1.2

    def __post_init__(self):
        if self.r > self.l_build:
            raise ValueError(f"R={self.r} must be <= L_build={self.l_build}")


@dataclass
class StitchedVamanaParams:
    r_small: int = 24
    r_stitched: int = 48
    l_small: int = 64
    alpha: float = 1.2


class _LabelGatedGraphStrategy(Strategy):
    """Shared search path: start at the query labels' medoids, expand gated."""

    def __init__(self, dataset, metric, params, seed, graph: ProximityGraph, starts: dict[int, int]):
        super().__init__(dataset, metric, params, seed)
        self.graph = graph
        self.starts = starts

    def search(self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        if query.constraint is FilterConstraint.FIXED_LENGTH_EQUALITY:
            ensure_fixed_length(self.dataset.label_sets)
        entries = sorted({self.starts[lab] for lab in query.labels if lab in self.starts})
        if not entries:
            return np.empty(0, dtype=np.int64)
        lab_indptr, lab_ids = self.dataset.labels_csr()
        indptr, indices = self.graph.layers[0]
        ids, _ = _kernels.search_label_gated(
            indptr, indices, self.dataset.vectors,
            np.ascontiguousarray(query.embedding, dtype=np.float32),
            np.asarray(entries, dtype=np.int64),
            max(int(knob), query.k),
            np.asarray(query.labels, dtype=np.int32),
            _CONSTRAINT_KIND[query.constraint],
            lab_indptr, lab_ids,
            metric_code(self.metric),
        )
        return self.rerank_exact(query.embedding, ids, query.k)

    def extra_state(self):
        starts_arr = np.array(sorted(self.starts.items()), dtype=np.int64).reshape(-1, 2)
        meta = {"entry_point": self.graph.entry_point, "max_degree": self.graph.max_degree}
        arrays = {
            "g_indptr": self.graph.layers[0][0],
            "g_indices": self.graph.layers[0][1],
            "starts": starts_arr,
        }
        return meta, arrays

    def restore_extra(self, meta, arrays):
        self.graph = ProximityGraph(
            layers=[(arrays["g_indptr"], arrays["g_indices"])],
            entry_point=meta["entry_point"],
            max_degree=meta["max_degree"],
        )
        self.starts = {int(a): int(b) for a, b in arrays["starts"]}


class FilteredVamana(_LabelGatedGraphStrategy):
    algorithm = "filtered-vamana"


class StitchedVamana(_LabelGatedGraphStrategy):
    algorithm = "stitched-vamana"


def build_filtered_vamana(
    dataset: Dataset,
    params: FilteredVamanaParams,
    metric: DistanceMetric,
    seed: int = 0,
) -> FilteredVamana:
    """Label-aware single-graph build: gated candidates, label-aware pruning."""
    graph, starts = build_vamana(
        dataset.vectors,
        PruneParams(alpha=params.alpha, target_degree=params.r, candidate_pool=params.l_build),
        metric,
        seed=seed,
        label_sets=dataset.label_sets,
        label_aware=True,
    )
    p = {"r": params.r, "l_build": params.l_build, "alpha": params.alpha}
    return FilteredVamana(dataset, metric, p, seed, graph, starts)


def build_stitched_vamana(
    dataset: Dataset,
    params: StitchedVamanaParams,
    metric: DistanceMetric,
    seed: int = 0,
) -> StitchedVamana:
    """One Vamana subgraph per label, unioned, then alpha-pruned to R_stitched."""
    n = dataset.n
    members: dict[int, list[int]] = {}
    for i, ls in enumerate(dataset.label_sets):
        for lab in ls:
            members.setdefault(lab, []).append(i)

    prune = PruneParams(
        alpha=params.alpha, target_degree=params.r_small, candidate_pool=params.l_small
    )
    union: list[set[int]] = [set() for _ in range(n)]
    for lab in sorted(members):
        ids = np.asarray(members[lab], dtype=np.int64)
        if ids.size < 2:
            continue
        sub, _ = build_vamana(dataset.vectors, prune, metric, seed=seed + lab, node_ids=ids)
        indptr, indices = sub.layers[0]
        for i in ids:
            union[int(i)].update(indices[indptr[i] : indptr[i + 1]].tolist())

    lab_indptr, lab_ids = dataset.labels_csr()
    lists: list[list[int]] = []
    mcode = metric_code(metric)
    for i in range(n):
        nbrs = sorted(union[i])
        if len(nbrs) > params.r_stitched:
            cand = np.asarray(nbrs, dtype=np.int64)
            dists = batch_distances(metric, dataset.vectors[i], dataset.vectors[cand])
            kept = _kernels.robust_prune(
                dataset.vectors, i, cand, dists, float(params.alpha),
                int(params.r_stitched), mcode, lab_indptr, lab_ids, False,
            )
            nbrs = sorted(kept.tolist())
        lists.append(nbrs)

    starts = per_label_medoids(dataset.vectors, dataset.label_sets)
    graph = ProximityGraph(
        layers=[adjacency_lists_to_csr(lists)],
        entry_point=medoid_of(dataset.vectors),
        max_degree=params.r_stitched,
    )
    p = {
        "r_small": params.r_small,
        "r_stitched": params.r_stitched,
        "l_small": params.l_small,
        "alpha": params.alpha,
    }
    return StitchedVamana(dataset, metric, p, seed, graph, starts)
