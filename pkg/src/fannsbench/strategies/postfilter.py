"""Search-then-filter strategies: unconstrained search, verify, expand.

Both variants run an unfiltered search at some scope, scan the ranked
candidates for constraint satisfaction, and double the scope until k
valid results are collected or the scope cap is reached. Valid hits are
accumulated across rounds, so the valid count never decreases as the
scope grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..bitmap import FilterBitmap, build_inverted_index, filter_map
from ..core import DistanceMetric, FilteredQuery
from ..dataset import Dataset
from ..graph import BeamParams, ProximityGraph, beam_search, build_layered_graph
from ..quant import IVFPQIndex, ivfpq_build, ivfpq_scan
from .base import Strategy, graph_layers_from_state, graph_state


@dataclass
class PostFilterParams:
    initial_scope: int
    growth: float = 2.0
    scope_cap: int | None = None

    def __post_init__(self):
        if self.growth <= 1.0:
            raise ValueError(f"growth factor must be > 1, got {self.growth}")
        if self.scope_cap is not None and self.scope_cap < self.initial_scope:
            raise ValueError("scope_cap must be >= initial_scope")


@dataclass
class PostFilterOutcome:
    ids: np.ndarray
    scope_used: int
    rounds: int


def postfilter_search(
    unconstrained: Callable[[int], np.ndarray],
    bitmap: FilterBitmap,
    k: int,
    params: PostFilterParams,
) -> PostFilterOutcome:
    """Generic expansion loop around an unconstrained distance-ordered search.

    `unconstrained(scope)` returns candidate ids in ascending distance
    order. Candidates are checked against the bitmap in that order; when
    fewer than k valid ids are known the scope is grown by the factor and
    the search reissued, until k are found or the cap was tried.
    """
    cap = params.scope_cap if params.scope_cap is not None else params.initial_scope
    scope = min(params.initial_scope, cap)
    mask = bitmap.to_bool_array()
    valid: dict[int, None] = {}
    rounds = 0
    while True:
        rounds += 1
        cand = np.asarray(unconstrained(scope), dtype=np.int64)
        if cand.size:
            for i in cand[mask[cand]].tolist():
                valid[i] = None
        if len(valid) >= k or scope >= cap:
            break
        scope = min(int(math.ceil(scope * params.growth)), cap)
    return PostFilterOutcome(
        ids=np.fromiter(valid.keys(), dtype=np.int64, count=len(valid)),
        scope_used=scope,
        rounds=rounds,
    )


class PostFilterHnsw(Strategy):
    """Unlabeled layered graph; constraint checked on the result queue."""

    algorithm = "post-hnsw"
    knob_name = "scope"
    needs_bitmap = True

    def __init__(self, dataset, metric, params, seed, graph: ProximityGraph):
        super().__init__(dataset, metric, params, seed)
        self.graph = graph

    def search(self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        if bitmap is None:
            bitmap = filter_map(self._inverted(), query.labels, query.constraint)
        pf = PostFilterParams(
            initial_scope=max(int(knob), query.k),
            growth=self.params.get("growth", 2.0),
            scope_cap=self.params.get("scope_cap") or self.dataset.n,
        )

        def run(scope: int) -> np.ndarray:
            ids, _ = beam_search(
                self.graph, query.embedding, BeamParams(beam_width=scope),
                self.metric, self.dataset.vectors,
            )
            return ids

        outcome = postfilter_search(run, bitmap, query.k, pf)
        return self.rerank_exact(query.embedding, outcome.ids, query.k)

    def _inverted(self):
        if not hasattr(self, "_inv"):
            self._inv = build_inverted_index(self.dataset)
        return self._inv

    def extra_state(self):
        meta = {
            "num_layers": self.graph.num_layers,
            "entry_point": self.graph.entry_point,
            "max_degree": self.graph.max_degree,
        }
        arrays = graph_state("g", self.graph.layers)
        arrays["levels"] = self.graph.levels
        return meta, arrays

    def restore_extra(self, meta, arrays):
        self.graph = ProximityGraph(
            layers=graph_layers_from_state("g", arrays, meta["num_layers"]),
            entry_point=meta["entry_point"],
            max_degree=meta["max_degree"],
            levels=arrays.get("levels"),
        )


class PostFilterIvfPq(Strategy):
    """IVF-PQ with ADC ranking, bounded full-precision rerank, post filter.

    The scope knob is nprobe. Each round reranks the top
    rerank_factor * scope ADC survivors at full precision and hands them
    to the verification scan; rerank_factor None reranks everything.
    """

    algorithm = "post-ivfpq"
    knob_name = "nprobe"
    needs_bitmap = True

    def __init__(self, dataset, metric, params, seed, index: IVFPQIndex):
        super().__init__(dataset, metric, params, seed)
        self.index = index

    def search(self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        if bitmap is None:
            bitmap = filter_map(self._inverted(), query.labels, query.constraint)
        nlist = self.index.nlist
        pf = PostFilterParams(
            initial_scope=min(max(int(knob), 1), nlist),
            growth=self.params.get("growth", 2.0),
            scope_cap=min(self.params.get("scope_cap") or nlist, nlist),
        )
        rerank_factor = self.params.get("rerank_factor", 4)

        def run(nprobe: int) -> np.ndarray:
            ids, _ = ivfpq_scan(self.index, query.embedding, nprobe, self.metric)
            if rerank_factor is not None:
                ids = ids[: rerank_factor * nprobe]
            if ids.size == 0:
                return ids
            return self.rerank_exact(query.embedding, ids, ids.size)

        outcome = postfilter_search(run, bitmap, query.k, pf)
        return self.rerank_exact(query.embedding, outcome.ids, query.k)

    def _inverted(self):
        if not hasattr(self, "_inv"):
            self._inv = build_inverted_index(self.dataset)
        return self._inv

    def extra_state(self):
        meta = {
            "nlist": self.index.nlist,
            "pq_m": self.index.codebook.m,
            "residual": self.index.residual,
        }
        arrays = {
            "coarse_centroids": self.index.coarse.centroids,
            "pq_tables": self.index.codebook.tables,
        }
        for c in range(self.index.nlist):
            arrays[f"list_ids_{c}"] = self.index.list_ids[c]
            arrays[f"list_codes_{c}"] = self.index.list_codes[c]
        return meta, arrays

    def restore_extra(self, meta, arrays):
        from ..quant import KMeansModel, PQCodebook

        nlist = meta["nlist"]
        self.index = IVFPQIndex(
            coarse=KMeansModel(centroids=arrays["coarse_centroids"]),
            codebook=PQCodebook(tables=arrays["pq_tables"]),
            list_ids=[arrays[f"list_ids_{c}"] for c in range(nlist)],
            list_codes=[arrays[f"list_codes_{c}"] for c in range(nlist)],
            residual=meta["residual"],
        )


def build_post_hnsw(
    dataset: Dataset,
    metric: DistanceMetric,
    m: int = 16,
    ef_construction: int = 200,
    seed: int = 0,
    **extra,
) -> PostFilterHnsw:
    graph = build_layered_graph(
        dataset.vectors, m=m, ef_construction=ef_construction, metric=metric,
        prune=True, seed=seed,
    )
    params = {"m": m, "ef_construction": ef_construction, **extra}
    return PostFilterHnsw(dataset, metric, params, seed, graph)


def build_post_ivfpq(
    dataset: Dataset,
    metric: DistanceMetric,
    nlist: int = 64,
    pq_m: int = 8,
    seed: int = 0,
    **extra,
) -> PostFilterIvfPq:
    index = ivfpq_build(dataset.vectors, nlist=nlist, m=pq_m, seed=seed)
    params = {"nlist": nlist, "pq_m": pq_m, **extra}
    return PostFilterIvfPq(dataset, metric, params, seed, index)
