"""Proximity-graph container, beam-search entry point, and alpha-pruning."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..bitmap import FilterBitmap
from ..core import DistanceMetric, LabelSet
from . import _kernels

_METRIC_CODE = {
    DistanceMetric.SQUARED_EUCLIDEAN: 0,
    DistanceMetric.INNER_PRODUCT_DISTANCE: 1,
}

_EMPTY_LABMAT = np.zeros((0, 0), dtype=np.int32)
_EMPTY_LABROW = np.zeros(0, dtype=np.int32)


def metric_code(metric: DistanceMetric) -> int:
    return _METRIC_CODE[metric]


class HopMode(enum.Enum):
    ONE_HOP = "one_hop"
    TWO_HOP = "two_hop"


@dataclass
class BeamParams:
    beam_width: int
    acceptance: object = None  # None | FilterBitmap | bool array | callable(id)->bool
    hop_mode: HopMode = HopMode.ONE_HOP
    scan_cap: int | None = None  # per-node neighbor-scan budget (dense-graph searches)


@dataclass
class PruneParams:
    alpha: float = 1.2
    target_degree: int = 32
    candidate_pool: int = 64

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")


@dataclass
class ProximityGraph:
    """Frozen CSR adjacency, one (indptr, indices) pair per layer.

    Layer 0 always covers every node; upper layers have empty rows for
    nodes that do not reach them. `levels` is kept by the layered builder
    for serialization round-trips.
    """

    layers: list[tuple[np.ndarray, np.ndarray]]
    entry_point: int
    max_degree: int
    levels: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.layers[0][0]) - 1

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def neighbors(self, node: int, layer: int = 0) -> np.ndarray:
        indptr, indices = self.layers[layer]
        return indices[indptr[node] : indptr[node + 1]]

    def edge_count(self, layer: int = 0) -> int:
        return int(self.layers[layer][0][-1])


def accept_words_for(acceptance, n: int) -> np.ndarray:
    """Normalize an acceptance predicate into packed 64-bit words."""
    if acceptance is None:
        return FilterBitmap.ones(n).words
    if isinstance(acceptance, FilterBitmap):
        if acceptance.n != n:
            raise ValueError(f"bitmap covers {acceptance.n} records, graph has {n}")
        return acceptance.words
    if callable(acceptance):
        mask = np.fromiter((bool(acceptance(i)) for i in range(n)), dtype=bool, count=n)
    else:
        mask = np.asarray(acceptance, dtype=bool)
        if mask.shape != (n,):
            raise ValueError(f"acceptance mask shape {mask.shape} != ({n},)")
    return FilterBitmap.from_ids(np.nonzero(mask)[0], n).words


def beam_search(
    graph: ProximityGraph,
    query: np.ndarray,
    params: BeamParams,
    metric: DistanceMetric,
    vectors: np.ndarray,
    entries: Sequence[int] | None = None,
    fused: tuple[np.ndarray, np.ndarray, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Filtered best-first search; returns accepted (ids, dists) ascending.

    For layered graphs the walk first descends the upper layers greedily
    (unfiltered) and then runs the accepted beam on layer 0. `fused`
    optionally supplies (label_matrix, query_labels, lam) so candidates
    are ranked by the fused vector+label distance.
    """
    if params.beam_width < 1:
        raise ValueError("beam width must be >= 1")
    n = graph.n
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    q = np.ascontiguousarray(query, dtype=np.float32)
    words = accept_words_for(params.acceptance, n)
    mcode = metric_code(metric)
    labmat, qlab, lam = fused if fused is not None else (_EMPTY_LABMAT, _EMPTY_LABROW, 0.0)
    ones = FilterBitmap.ones(n).words
    cap = int(params.scan_cap) if params.scan_cap else 2**62

    if entries is None:
        entry = np.array([graph.entry_point], dtype=np.int64)
        for layer in range(graph.num_layers - 1, 0, -1):
            indptr, indices = graph.layers[layer]
            ids, _ = _kernels.search_layer(
                indptr, indices, vectors, q, entry, 1, ones, False, mcode,
                labmat, qlab, lam, cap,
            )
            if ids.size:
                entry = ids[:1]
    else:
        entry = np.asarray(entries, dtype=np.int64)

    indptr, indices = graph.layers[0]
    two_hop = params.hop_mode is HopMode.TWO_HOP
    return _kernels.search_layer(
        indptr, indices, vectors, q, entry, params.beam_width,
        words, two_hop, mcode, labmat, qlab, lam, cap,
    )


def robust_prune(
    node: int,
    candidate_ids: Sequence[int],
    candidate_dists: Sequence[float],
    params: PruneParams,
    vectors: np.ndarray,
    metric: DistanceMetric,
    label_sets: Sequence[LabelSet] | None = None,
) -> np.ndarray:
    """Alpha-prune candidates of `node` down to at most target_degree.

    When `label_sets` is given, a kept candidate may only dominate another
    when the two share at least one label.
    """
    ids = np.asarray(candidate_ids, dtype=np.int64)
    dists = np.asarray(candidate_dists, dtype=np.float64)
    if ids.shape != dists.shape:
        raise ValueError("candidate ids and distances differ in length")
    if label_sets is None:
        lab_indptr = np.zeros(vectors.shape[0] + 1, dtype=np.int64)
        lab_ids = np.zeros(0, dtype=np.int32)
        use_labels = False
    else:
        lab_indptr, lab_ids = _labels_to_csr(label_sets)
        use_labels = True
    return _kernels.robust_prune(
        vectors, node, ids, dists, float(params.alpha), int(params.target_degree),
        metric_code(metric), lab_indptr, lab_ids, use_labels,
    )


def _labels_to_csr(label_sets: Sequence[LabelSet]) -> tuple[np.ndarray, np.ndarray]:
    counts = np.fromiter((len(ls) for ls in label_sets), np.int64, len(label_sets))
    indptr = np.zeros(len(label_sets) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    flat = np.empty(int(indptr[-1]), dtype=np.int32)
    for i, ls in enumerate(label_sets):
        flat[indptr[i] : indptr[i + 1]] = ls
    return indptr, flat


def medoid_of(vectors: np.ndarray, ids: np.ndarray | None = None) -> int:
    """Record closest to the centroid (squared L2), ties to the lowest id."""
    if ids is None:
        sub = vectors
    else:
        ids = np.asarray(ids, dtype=np.int64)
        sub = vectors[ids]
    centroid = sub.astype(np.float64).mean(axis=0)
    diff = sub.astype(np.float64) - centroid
    d = np.einsum("ij,ij->i", diff, diff)
    local = int(np.argmin(d))
    return local if ids is None else int(ids[local])


def adjacency_lists_to_csr(lists: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    counts = np.fromiter((len(x) for x in lists), np.int64, len(lists))
    indptr = np.zeros(len(lists) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(int(indptr[-1]), dtype=np.int32)
    for i, x in enumerate(lists):
        indices[indptr[i] : indptr[i + 1]] = x
    return indptr, indices
