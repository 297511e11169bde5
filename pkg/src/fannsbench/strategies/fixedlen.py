"""Fixed-length equality specialists: fused-metric graph and label sub-clusters.

Both strategies operate on positional label vectors (every record carries
the same number of label positions). The fused-metric graph ranks
neighbors by vector distance plus a weighted label Hamming distance; the
clustered index partitions k-means cells into label-frequency
sub-clusters probed in creation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bitmap import FilterBitmap
from ..core import (
    DistanceMetric,
    FilteredQuery,
    UnsupportedScenarioError,
    batch_distances,
)
from ..dataset import Dataset
from ..graph import BeamParams, ProximityGraph, beam_search, build_knn_graph
from ..oracle import top_k_by_distance
from ..quant import KMeansModel, kmeans
from .base import FIXED_ONLY, Strategy, graph_layers_from_state, graph_state


@dataclass
class FusedMetric:
    base: DistanceMetric
    lam: float
    label_length: int

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")


def fused_distance(
    metric: FusedMetric,
    a_vec: np.ndarray,
    a_labels: np.ndarray,
    b_vec: np.ndarray,
    b_labels: np.ndarray,
) -> float:
    """delta(a, b) + lambda * Hamming(labels_a, labels_b)."""
    a_labels = np.asarray(a_labels)
    b_labels = np.asarray(b_labels)
    if a_labels.shape[0] != metric.label_length or b_labels.shape[0] != metric.label_length:
        raise ValueError(
            f"label vectors must have length {metric.label_length}, "
            f"got {a_labels.shape[0]} and {b_labels.shape[0]}"
        )
    from ..core import distance as _dist

    hamming = int(np.count_nonzero(a_labels != b_labels))
    return _dist(metric.base, a_vec, b_vec) + metric.lam * hamming


def auto_lambda(
    vectors: np.ndarray,
    label_length: int,
    metric: DistanceMetric,
    seed: int = 0,
    pairs: int = 1000,
) -> float:
    """Mean pairwise distance over a sample, divided by the label length."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n = vectors.shape[0]
    a = rng.integers(0, n, size=pairs)
    b = rng.integers(0, n, size=pairs)
    keep = a != b
    a, b = a[keep], b[keep]
    diffs = vectors[a].astype(np.float64) - vectors[b].astype(np.float64)
    if metric is DistanceMetric.SQUARED_EUCLIDEAN:
        d = np.einsum("ij,ij->i", diffs, diffs)
    else:
        d = -np.einsum(
            "ij,ij->i", vectors[a].astype(np.float64), vectors[b].astype(np.float64)
        )
    return float(np.abs(d).mean() / max(label_length, 1))


def _label_matrix(dataset: Dataset) -> np.ndarray:
    if dataset.label_vectors is None:
        raise UnsupportedScenarioError(
            "this strategy needs fixed-length positional label vectors"
        )
    return np.ascontiguousarray(dataset.label_vectors, dtype=np.int32)


@dataclass
class NhqParams:
    k_graph: int = 20
    iterations: int = 10
    diversify_degree: int = 8
    lam: float | None = None  # None = auto-scaled


class NhqIndex(Strategy):
    algorithm = "nhq"
    knob_name = "beam"
    supported = FIXED_ONLY

    def __init__(self, dataset, metric, params, seed, graph: ProximityGraph, lam: float):
        super().__init__(dataset, metric, params, seed)
        self.graph = graph
        self.lam = lam

    def search(self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        labmat = _label_matrix(self.dataset)
        qlab = _query_label_vector(self.dataset, query)
        match_mask = np.all(labmat == qlab[None, :], axis=1)
        if not match_mask.any():
            return np.empty(0, dtype=np.int64)
        ids, _ = beam_search(
            self.graph, query.embedding,
            BeamParams(beam_width=max(int(knob), query.k), acceptance=match_mask),
            self.metric, self.dataset.vectors,
            fused=(labmat, qlab.astype(np.int32), self.lam),
        )
        # candidates were ranked by the fused weight; final order is pure delta
        return self.rerank_exact(query.embedding, ids, query.k)

    def extra_state(self):
        meta = {
            "num_layers": 1,
            "entry_point": self.graph.entry_point,
            "max_degree": self.graph.max_degree,
            "lam": self.lam,
        }
        return meta, graph_state("g", self.graph.layers)

    def restore_extra(self, meta, arrays):
        self.graph = ProximityGraph(
            layers=graph_layers_from_state("g", arrays, meta["num_layers"]),
            entry_point=meta["entry_point"],
            max_degree=meta["max_degree"],
        )
        self.lam = meta["lam"]


def _query_label_vector(dataset: Dataset, query: FilteredQuery) -> np.ndarray:
    """Decode the query's offset-encoded label set back to positions."""
    values = dataset.values_per_position
    length = dataset.label_vectors.shape[1]
    if values is None:
        raise UnsupportedScenarioError("dataset lacks positional label encoding")
    vec = np.full(length, -1, dtype=np.int64)
    for lab in query.labels:
        pos, val = divmod(int(lab), values)
        if pos >= length:
            raise ValueError(f"encoded label {lab} outside {length}x{values} space")
        vec[pos] = val
    return vec


def nhq_build(
    dataset: Dataset,
    params: NhqParams,
    metric: DistanceMetric,
    seed: int = 0,
) -> NhqIndex:
    """Fused-metric NN-descent graph plus a direction-diversifying pass."""
    labmat = _label_matrix(dataset)
    lam = params.lam
    if lam is None:
        lam = auto_lambda(dataset.vectors, labmat.shape[1], metric, seed=seed)
    graph = build_knn_graph(
        dataset.vectors, params.k_graph, params.iterations, metric,
        seed=seed, label_matrix=labmat, lam=lam,
    )
    graph = _diversify(graph, dataset.vectors, params.diversify_degree)
    p = {
        "k_graph": params.k_graph,
        "iterations": params.iterations,
        "diversify_degree": params.diversify_degree,
        "lam": lam,
    }
    return NhqIndex(dataset, metric, p, seed, graph, lam)


def _diversify(graph: ProximityGraph, vectors: np.ndarray, extra: int) -> ProximityGraph:
    """Append up to `extra` edges per node, greedily widening angular spread.

    Candidates are the two-hop neighborhood; each pick minimizes the worst
    cosine similarity against the directions already in the edge list.
    """
    if extra <= 0:
        return graph
    indptr, indices = graph.layers[0]
    n = len(indptr) - 1
    new_lists = []
    for u in range(n):
        nbrs = indices[indptr[u] : indptr[u + 1]].tolist()
        have = set(nbrs)
        have.add(u)
        pool = sorted({
            int(w)
            for v in nbrs
            for w in indices[indptr[v] : indptr[v + 1]]
            if int(w) not in have
        })
        if not pool:
            new_lists.append(nbrs)
            continue
        dirs = vectors[nbrs].astype(np.float64) - vectors[u].astype(np.float64)
        norms = np.linalg.norm(dirs, axis=1)
        dirs = dirs / np.maximum(norms, 1e-12)[:, None]
        cand_dirs = vectors[pool].astype(np.float64) - vectors[u].astype(np.float64)
        cand_dirs /= np.maximum(np.linalg.norm(cand_dirs, axis=1), 1e-12)[:, None]
        added = []
        for _ in range(min(extra, len(pool))):
            worst_cos = (cand_dirs @ dirs.T).max(axis=1)
            pick = int(np.argmin(worst_cos))
            added.append(pool[pick])
            dirs = np.vstack([dirs, cand_dirs[pick]])
            cand_dirs = np.delete(cand_dirs, pick, axis=0)
            pool.pop(pick)
            if not pool:
                break
        new_lists.append(nbrs + added)
    from ..graph import adjacency_lists_to_csr

    return ProximityGraph(
        layers=[adjacency_lists_to_csr(new_lists)],
        entry_point=graph.entry_point,
        max_degree=graph.max_degree + extra,
    )


@dataclass
class CapsParams:
    k_c: int = 16
    h: int = 8

    def __post_init__(self):
        if self.h < 1:
            raise ValueError(f"h must be >= 1, got {self.h}")


class CapsIndex(Strategy):
    """Coarse k-means cells split into label-frequency sub-clusters."""

    algorithm = "caps"
    knob_name = "nprobe"
    supported = FIXED_ONLY

    def __init__(self, dataset, metric, params, seed, coarse: KMeansModel,
                 sub_clusters: list[list[tuple[int, np.ndarray]]]):
        super().__init__(dataset, metric, params, seed)
        self.coarse = coarse
        # per cluster: [(defining encoded label, member ids), ...] in creation order
        self.sub_clusters = sub_clusters

    def search(self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        labmat = _label_matrix(self.dataset)
        qlab = _query_label_vector(self.dataset, query)
        nprobe = min(max(int(knob), 1), self.coarse.k)
        cd = batch_distances(self.metric, query.embedding, self.coarse.centroids)
        probe = np.lexsort((np.arange(self.coarse.k), cd))[:nprobe]
        hits = []
        for c in probe:
            for _, ids in self.sub_clusters[c]:
                if ids.size == 0:
                    continue
                match = ids[np.all(labmat[ids] == qlab[None, :], axis=1)]
                if match.size:
                    hits.append(match)
        if not hits:
            return np.empty(0, dtype=np.int64)
        ids = np.concatenate(hits)
        dists = batch_distances(self.metric, query.embedding, self.dataset.vectors[ids])
        out, _ = top_k_by_distance(ids, dists, query.k)
        return out

    def extra_state(self):
        meta = {
            "k_c": self.coarse.k,
            "sub_counts": [len(subs) for subs in self.sub_clusters],
            "sub_labels": [[int(lab) for lab, _ in subs] for subs in self.sub_clusters],
        }
        arrays = {"coarse_centroids": self.coarse.centroids}
        for c, subs in enumerate(self.sub_clusters):
            for s, (_, ids) in enumerate(subs):
                arrays[f"sub_{c}_{s}"] = ids
        return meta, arrays

    def restore_extra(self, meta, arrays):
        self.coarse = KMeansModel(centroids=arrays["coarse_centroids"])
        self.sub_clusters = [
            [
                (meta["sub_labels"][c][s], arrays[f"sub_{c}_{s}"])
                for s in range(meta["sub_counts"][c])
            ]
            for c in range(meta["k_c"])
        ]


def caps_build(
    dataset: Dataset,
    params: CapsParams,
    metric: DistanceMetric,
    seed: int = 0,
) -> CapsIndex:
    """k-means cells, then h-1 most-frequent-label splits plus a remainder."""
    _label_matrix(dataset)  # fail fast when labels are not positional
    coarse = kmeans(dataset.vectors, params.k_c, seed=seed)
    assign = coarse.assign(dataset.vectors)
    lab_indptr, lab_flat = dataset.labels_csr()
    sub_clusters: list[list[tuple[int, np.ndarray]]] = []
    for c in range(params.k_c):
        remaining = np.nonzero(assign == c)[0].astype(np.int64)
        subs: list[tuple[int, np.ndarray]] = []
        for _ in range(params.h - 1):
            if remaining.size == 0:
                break
            counts: dict[int, int] = {}
            for i in remaining:
                for lab in lab_flat[lab_indptr[i] : lab_indptr[i + 1]]:
                    counts[int(lab)] = counts.get(int(lab), 0) + 1
            # most frequent encoded label; ties to the smallest id
            top = min(counts, key=lambda lab: (-counts[lab], lab))
            carry = np.array(
                [i for i in remaining
                 if top in lab_flat[lab_indptr[i] : lab_indptr[i + 1]]],
                dtype=np.int64,
            )
            subs.append((top, carry))
            keep = np.setdiff1d(remaining, carry, assume_unique=True)
            remaining = keep
        subs.append((-1, remaining))
        sub_clusters.append(subs)
    return CapsIndex(
        dataset, metric, {"k_c": params.k_c, "h": params.h}, seed, coarse, sub_clusters
    )
