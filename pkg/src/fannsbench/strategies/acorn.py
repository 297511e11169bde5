"""Filter-then-search graph strategies guided by a precomputed bitmap.

The gamma variant stores a densified predicate-agnostic graph (up to
gamma*M neighbors per node, nearest M kept unconditionally, the rest
diversity-pruned); the lightweight variant keeps a standard un-pruned
layered graph and widens its query-time frontier to two hops instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..bitmap import FilterBitmap, build_inverted_index, filter_map
from ..core import DistanceMetric, FilteredQuery
from ..dataset import Dataset
from ..graph import BeamParams, HopMode, ProximityGraph, beam_search, build_layered_graph
from .base import Strategy, graph_layers_from_state, graph_state

logger = logging.getLogger(__name__)


@dataclass
class AcornGammaParams:
    gamma: int
    m: int = 16
    m_search: int | None = None  # per-node neighbor-scan cap at query time
    ef_construction: int = 200

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")


@dataclass
class AcornSearchParams:
    beam_width: int
    bitmap: FilterBitmap


class _AcornBase(Strategy):
    needs_bitmap = True
    two_hop = False

    def __init__(self, dataset, metric, params, seed, graph: ProximityGraph):
        super().__init__(dataset, metric, params, seed)
        self.graph = graph

    def search(self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        if bitmap is None:
            bitmap = filter_map(self._inverted(), query.labels, query.constraint)
        params = AcornSearchParams(beam_width=max(int(knob), query.k), bitmap=bitmap)
        ids = acorn_search(self, query, params, two_hop=self.two_hop)
        return self.rerank_exact(query.embedding, ids, query.k)

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


class AcornGamma(_AcornBase):
    algorithm = "acorn-gamma"
    two_hop = False


class AcornOne(_AcornBase):
    algorithm = "acorn-1"
    two_hop = True


def acorn_search(
    index: _AcornBase,
    query: FilteredQuery,
    params: AcornSearchParams,
    two_hop: bool,
) -> np.ndarray:
    """Bitmap-gated beam over the predicate-agnostic graph."""
    if params.bitmap.count == 0:
        return np.empty(0, dtype=np.int64)
    beam = BeamParams(
        beam_width=params.beam_width,
        acceptance=params.bitmap,
        hop_mode=HopMode.TWO_HOP if two_hop else HopMode.ONE_HOP,
        scan_cap=index.params.get("m_search"),
    )
    ids, _ = beam_search(index.graph, query.embedding, beam, index.metric, index.dataset.vectors)
    return ids


def build_acorn_gamma(
    dataset: Dataset,
    params: AcornGammaParams,
    metric: DistanceMetric,
    seed: int = 0,
) -> AcornGamma:
    """Densified layered graph built from embeddings only (no label bytes)."""
    if params.gamma * params.m >= dataset.n:
        logger.warning(
            "gamma*M = %d >= n = %d: falling back to near-complete neighbor lists",
            params.gamma * params.m, dataset.n,
        )
    graph = build_layered_graph(
        dataset.vectors,
        m=params.m,
        ef_construction=max(params.ef_construction, params.gamma * params.m + 1),
        metric=metric,
        prune=True,
        seed=seed,
        gamma=params.gamma,
    )
    p = {
        "gamma": params.gamma,
        "m": params.m,
        "m_search": params.m_search,
        "ef_construction": params.ef_construction,
    }
    return AcornGamma(dataset, metric, p, seed, graph)


def build_acorn_one(
    dataset: Dataset,
    metric: DistanceMetric,
    m: int = 16,
    ef_construction: int = 200,
    seed: int = 0,
) -> AcornOne:
    """Standard un-pruned layered graph; two-hop expansion happens at query time."""
    graph = build_layered_graph(
        dataset.vectors, m=m, ef_construction=ef_construction, metric=metric,
        prune=False, seed=seed,
    )
    return AcornOne(dataset, metric, {"m": m, "ef_construction": ef_construction}, seed, graph)
