"""Hierarchical small-world graph builder (pruned, un-pruned, and dense).

One builder covers three consumers: the standard diversified graph behind
post-filtering, the un-pruned variant whose query-time two-hop expansion
compensates for the missing diversification, and the gamma-densified
variant that stores up to gamma*M neighbors per node.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import DistanceMetric
from . import _kernels
from .base import ProximityGraph, metric_code


def draw_levels(n: int, m: int, seed: int, cap: int = 32) -> np.ndarray:
    """Geometric layer assignment with factor 1/ln(M)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    ml = 1.0 / math.log(m)
    u = rng.random(n)
    levels = np.floor(-np.log(u) * ml).astype(np.int32)
    return np.minimum(levels, cap)


def build_layered_graph(
    vectors: np.ndarray,
    m: int,
    ef_construction: int,
    metric: DistanceMetric,
    prune: bool = True,
    seed: int = 0,
    gamma: int = 1,
) -> ProximityGraph:
    """Insert points one by one into a layered navigable graph.

    With `prune` the classic diversity heuristic (alpha = 1) selects
    neighbors; without it the nearest candidates are kept verbatim up to
    the degree cap. `gamma` > 1 widens every per-layer cap to gamma*M,
    keeping the nearest M unconditionally and diversifying the remainder.
    Deterministic for a fixed seed (single-threaded insertion in id order).
    """
    if m < 2:
        raise ValueError(f"M must be >= 2, got {m}")
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n = vectors.shape[0]
    cap = m * gamma
    ef_construction = max(ef_construction, cap + 1)
    if n == 0:
        raise ValueError("cannot build a graph over zero records")

    levels = draw_levels(n, m, seed)
    if n == 1:
        indptr = np.zeros(2, dtype=np.int64)
        return ProximityGraph(
            layers=[(indptr, np.empty(0, dtype=np.int32))],
            entry_point=0,
            max_degree=cap,
            levels=np.zeros(1, dtype=np.int32),
        )

    # flat storage: one cap-sized block per node per layer it occupies
    blocks_per_node = 1 + levels.astype(np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(blocks_per_node * cap, out=offsets[1:])
    adj = np.full(int(offsets[-1]), -1, dtype=np.int32)
    max_level = int(levels.max())
    deg = np.zeros((n, max_level + 1), dtype=np.int32)

    if gamma > 1:
        keep_m, diversify = m, True
        select = cap
    elif prune:
        keep_m, diversify = 0, True
        select = m
    else:
        keep_m, diversify = 0, False
        select = cap

    entry = _kernels.layered_build(
        vectors, levels, offsets[:-1], adj, deg,
        cap, cap, keep_m, select, select, diversify,
        ef_construction, metric_code(metric),
    )

    layers = []
    for layer in range(max_level + 1):
        lengths = deg[:, layer].astype(np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        total = int(indptr[-1])
        starts = offsets[:-1] + layer * cap
        gather = np.repeat(starts, lengths) + (np.arange(total) - np.repeat(indptr[:-1], lengths))
        layers.append((indptr, adj[gather].astype(np.int32)))

    return ProximityGraph(layers=layers, entry_point=int(entry), max_degree=cap, levels=levels)
