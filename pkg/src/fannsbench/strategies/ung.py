"""Unified navigating graph: label-set groups connected along a containment DAG.

Records are grouped by exact label set; each group carries its own
proximity graph, and directed cross edges follow the minimal-containment
DAG over the distinct label sets, so every vector-level edge (i -> j)
satisfies f_i being a subset of f_j. Containment traversal therefore needs
no per-node label checks once the entry groups are fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bitmap import FilterBitmap
from ..core import (
    DistanceMetric,
    FilterConstraint,
    FilteredQuery,
    LabelSet,
    batch_distances,
    ensure_fixed_length,
)
from ..dataset import Dataset
from ..graph import (
    BeamParams,
    ProximityGraph,
    PruneParams,
    adjacency_lists_to_csr,
    beam_search,
    build_vamana,
    medoid_of,
)
from ..oracle import top_k_by_distance
from .base import Strategy


@dataclass
class UngParams:
    intra_degree: int = 16
    build_beam: int = 64
    alpha: float = 1.2
    cross_edges: int = 3


@dataclass
class LabelNavGraph:
    """Minimal containment DAG over the dataset's distinct label sets."""

    nodes: list[LabelSet]
    children: list[list[int]]  # node -> indices of minimal supersets
    members: list[np.ndarray]  # node -> record ids carrying exactly that set

    @property
    def num_groups(self) -> int:
        return len(self.nodes)

    def roots(self) -> list[int]:
        has_parent = [False] * len(self.nodes)
        for src, outs in enumerate(self.children):
            for dst in outs:
                has_parent[dst] = True
        return [g for g, flag in enumerate(has_parent) if not flag]


def group_by_label_set(dataset: Dataset) -> tuple[list[LabelSet], list[np.ndarray]]:
    """Partition records into groups of identical label sets."""
    buckets: dict[tuple, list[int]] = {}
    for i, ls in enumerate(dataset.label_sets):
        buckets.setdefault(tuple(ls), []).append(i)
    keys = sorted(buckets, key=lambda t: (len(t), t))
    return (
        [LabelSet(k) for k in keys],
        [np.asarray(buckets[k], dtype=np.int64) for k in keys],
    )


def build_lng(nodes: list[LabelSet], members: list[np.ndarray]) -> LabelNavGraph:
    """Minimal containment edges: A -> B iff A < B with no present C between."""
    m = len(nodes)
    sets = [frozenset(ls) for ls in nodes]
    supersets: list[list[int]] = [[] for _ in range(m)]
    for a in range(m):
        for b in range(m):
            if a != b and len(sets[a]) < len(sets[b]) and sets[a] < sets[b]:
                supersets[a].append(b)
    children: list[list[int]] = [[] for _ in range(m)]
    for a in range(m):
        for b in supersets[a]:
            minimal = True
            for c in supersets[a]:
                if c != b and sets[c] < sets[b]:
                    minimal = False
                    break
            if minimal:
                children[a].append(b)
    return LabelNavGraph(nodes=nodes, children=children, members=members)


class UngIndex(Strategy):
    algorithm = "ung"
    knob_name = "beam"
    needs_bitmap = False
    # combined predicates are out of scope; overlap handled by per-label rounds

    def __init__(
        self,
        dataset,
        metric,
        params,
        seed,
        lng: LabelNavGraph,
        intra: ProximityGraph,
        full: ProximityGraph,
        group_medoids: np.ndarray,
        group_of: np.ndarray,
    ):
        super().__init__(dataset, metric, params, seed)
        self.lng = lng
        self.intra = intra          # intra-group edges only: equality searches
        self.full = full            # intra + cross edges: containment/overlap
        self.group_medoids = group_medoids
        self.group_of = group_of
        self._group_index = {tuple(ls): g for g, ls in enumerate(lng.nodes)}

    # --- entry-group selection ----------------------------------------------

    def _superset_groups(self, labels: LabelSet) -> list[int]:
        q = frozenset(labels)
        return [g for g, ls in enumerate(self.lng.nodes) if q <= frozenset(ls)]

    def minimal_entry_groups(self, labels: LabelSet) -> list[int]:
        """Minimal label sets (in the DAG) that are supersets of the query."""
        cands = self._superset_groups(labels)
        cands.sort(key=lambda g: (len(self.lng.nodes[g]), tuple(self.lng.nodes[g])))
        kept: list[int] = []
        for g in cands:
            gs = frozenset(self.lng.nodes[g])
            if not any(frozenset(self.lng.nodes[h]) < gs for h in kept):
                kept.append(g)
        return kept

    # --- search ---------------------------------------------------------------

    def search(self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        beam = max(int(knob), query.k)
        if query.constraint in (FilterConstraint.EQUALITY, FilterConstraint.FIXED_LENGTH_EQUALITY):
            if query.constraint is FilterConstraint.FIXED_LENGTH_EQUALITY:
                ensure_fixed_length(self.dataset.label_sets)
            g = self._group_index.get(tuple(query.labels))
            if g is None:
                return np.empty(0, dtype=np.int64)
            ids, _ = beam_search(
                self.intra, query.embedding, BeamParams(beam_width=beam),
                self.metric, self.dataset.vectors,
                entries=[int(self.group_medoids[g])],
            )
            return self.rerank_exact(query.embedding, ids, query.k)

        if query.constraint is FilterConstraint.CONTAINMENT:
            groups = self.minimal_entry_groups(query.labels)
            if not groups:
                return np.empty(0, dtype=np.int64)
            entries = [int(self.group_medoids[g]) for g in groups]
            ids, _ = beam_search(
                self.full, query.embedding, BeamParams(beam_width=beam),
                self.metric, self.dataset.vectors, entries=entries,
            )
            return self.rerank_exact(query.embedding, ids, query.k)

        # Overlap: one round per query label, results merged by distance.
        pool: dict[int, None] = {}
        for lab in query.labels:
            groups = self.minimal_entry_groups(LabelSet([lab]))
            if not groups:
                continue
            entries = [int(self.group_medoids[g]) for g in groups]
            ids, _ = beam_search(
                self.full, query.embedding, BeamParams(beam_width=beam),
                self.metric, self.dataset.vectors, entries=entries,
            )
            for i in ids.tolist():
                pool[i] = None
        merged = np.fromiter(pool.keys(), dtype=np.int64, count=len(pool))
        return self.rerank_exact(query.embedding, merged, query.k)

    # --- serialization ----------------------------------------------------------

    def extra_state(self):
        meta = {
            "num_groups": self.lng.num_groups,
            "entry_intra": self.intra.entry_point,
            "entry_full": self.full.entry_point,
            "max_degree": self.full.max_degree,
        }
        arrays = {
            "intra_indptr": self.intra.layers[0][0],
            "intra_indices": self.intra.layers[0][1],
            "full_indptr": self.full.layers[0][0],
            "full_indices": self.full.layers[0][1],
            "group_medoids": self.group_medoids,
            "group_of": self.group_of,
        }
        lng_children = self.lng.children
        counts = np.fromiter((len(c) for c in lng_children), np.int64, len(lng_children))
        indptr = np.zeros(len(lng_children) + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        flat = np.empty(int(indptr[-1]), dtype=np.int32)
        for g, outs in enumerate(lng_children):
            flat[indptr[g] : indptr[g + 1]] = outs
        arrays["lng_indptr"] = indptr
        arrays["lng_children"] = flat
        return meta, arrays

    def restore_extra(self, meta, arrays):
        group_of = arrays["group_of"]
        num_groups = meta["num_groups"]
        members = [np.nonzero(group_of == g)[0].astype(np.int64) for g in range(num_groups)]
        nodes = [
            self.dataset.label_sets[int(members[g][0])] if members[g].size else LabelSet()
            for g in range(num_groups)
        ]
        indptr = arrays["lng_indptr"]
        flat = arrays["lng_children"]
        children = [flat[indptr[g] : indptr[g + 1]].tolist() for g in range(num_groups)]
        self.lng = LabelNavGraph(nodes=nodes, children=children, members=members)
        self.intra = ProximityGraph(
            layers=[(arrays["intra_indptr"], arrays["intra_indices"])],
            entry_point=meta["entry_intra"],
            max_degree=meta["max_degree"],
        )
        self.full = ProximityGraph(
            layers=[(arrays["full_indptr"], arrays["full_indices"])],
            entry_point=meta["entry_full"],
            max_degree=meta["max_degree"],
        )
        self.group_medoids = arrays["group_medoids"]
        self.group_of = arrays["group_of"]
        self._group_index = {tuple(ls): g for g, ls in enumerate(self.lng.nodes)}


def build_ung(
    dataset: Dataset,
    params: UngParams,
    metric: DistanceMetric,
    seed: int = 0,
) -> UngIndex:
    """Group, build intra-group graphs, wire cross edges along the DAG."""
    nodes, members = group_by_label_set(dataset)
    lng = build_lng(nodes, members)
    n = dataset.n

    prune = PruneParams(
        alpha=params.alpha,
        target_degree=params.intra_degree,
        candidate_pool=params.build_beam,
    )
    intra_lists: list[list[int]] = [[] for _ in range(n)]
    group_medoids = np.empty(lng.num_groups, dtype=np.int64)
    group_of = np.empty(n, dtype=np.int64)
    for g, ids in enumerate(members):
        group_of[ids] = g
        group_medoids[g] = medoid_of(dataset.vectors, ids)
        if ids.size == 1:
            continue
        sub, _ = build_vamana(
            dataset.vectors, prune, metric, seed=seed + g, node_ids=ids,
        )
        indptr, indices = sub.layers[0]
        for i in ids:
            intra_lists[int(i)] = indices[indptr[i] : indptr[i + 1]].tolist()

    # Cross edges: for each DAG edge (A -> B), link the c members of A
    # nearest to B's centroid to their nearest members of B.
    cross_lists: list[list[int]] = [[] for _ in range(n)]
    for a, outs in enumerate(lng.children):
        src_ids = members[a]
        for b in outs:
            dst_ids = members[b]
            centroid = dataset.vectors[dst_ids].astype(np.float64).mean(axis=0)
            d_src = batch_distances(metric, centroid.astype(np.float32), dataset.vectors[src_ids])
            picks, _ = top_k_by_distance(src_ids, d_src, min(params.cross_edges, src_ids.size))
            for src in picks:
                d_dst = batch_distances(metric, dataset.vectors[src], dataset.vectors[dst_ids])
                nearest, _ = top_k_by_distance(dst_ids, d_dst, 1)
                cross_lists[int(src)].append(int(nearest[0]))

    intra_csr = adjacency_lists_to_csr(intra_lists)
    full_lists = [sorted(set(intra_lists[i] + cross_lists[i])) for i in range(n)]
    full_csr = adjacency_lists_to_csr(full_lists)

    entry = int(group_medoids[0]) if lng.num_groups else 0
    p = {
        "intra_degree": params.intra_degree,
        "build_beam": params.build_beam,
        "alpha": params.alpha,
        "cross_edges": params.cross_edges,
    }
    return UngIndex(
        dataset, metric, p, seed,
        lng=lng,
        intra=ProximityGraph(layers=[intra_csr], entry_point=entry, max_degree=params.intra_degree),
        full=ProximityGraph(
            layers=[full_csr], entry_point=entry,
            max_degree=params.intra_degree + params.cross_edges,
        ),
        group_medoids=group_medoids,
        group_of=group_of,
    )
