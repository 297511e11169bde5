"""Strategy registry, build dispatch, and index file round-trips."""

from __future__ import annotations

from ..container import read_container, write_container
from ..core import DistanceMetric
from ..dataset import Dataset
from .acorn import AcornGamma, AcornGammaParams, AcornOne, build_acorn_gamma, build_acorn_one
from .base import Strategy
from .diskann import (
    FilteredVamana,
    FilteredVamanaParams,
    StitchedVamana,
    StitchedVamanaParams,
    build_filtered_vamana,
    build_stitched_vamana,
)
from .fixedlen import CapsIndex, CapsParams, NhqIndex, NhqParams, caps_build, nhq_build
from .postfilter import (
    PostFilterHnsw,
    PostFilterIvfPq,
    PostFilterOutcome,
    PostFilterParams,
    build_post_hnsw,
    build_post_ivfpq,
    postfilter_search,
)
from .prefilter import PreFilterBruteForce, build_brute_force
from .ung import UngIndex, UngParams, build_lng, build_ung, group_by_label_set

STRATEGY_CLASSES: dict[str, type[Strategy]] = {
    cls.algorithm: cls
    for cls in (
        PreFilterBruteForce,
        PostFilterHnsw,
        PostFilterIvfPq,
        AcornGamma,
        AcornOne,
        UngIndex,
        FilteredVamana,
        StitchedVamana,
        NhqIndex,
        CapsIndex,
    )
}

ALGORITHMS = tuple(STRATEGY_CLASSES)


def build_strategy(
    algorithm: str,
    dataset: Dataset,
    metric: DistanceMetric,
    params: dict | None = None,
    seed: int = 0,
) -> Strategy:
    """Build any registered strategy from a flat parameter dict."""
    params = dict(params or {})
    if algorithm == "brute-force":
        return build_brute_force(dataset, metric, seed)
    if algorithm == "post-hnsw":
        return build_post_hnsw(dataset, metric, seed=seed, **params)
    if algorithm == "post-ivfpq":
        return build_post_ivfpq(dataset, metric, seed=seed, **params)
    if algorithm == "acorn-gamma":
        keys = {"gamma", "m", "m_search", "ef_construction"}
        return build_acorn_gamma(
            dataset, AcornGammaParams(**{k: v for k, v in params.items() if k in keys}),
            metric, seed,
        )
    if algorithm == "acorn-1":
        return build_acorn_one(dataset, metric, seed=seed, **params)
    if algorithm == "ung":
        return build_ung(dataset, UngParams(**params), metric, seed)
    if algorithm == "filtered-vamana":
        return build_filtered_vamana(dataset, FilteredVamanaParams(**params), metric, seed)
    if algorithm == "stitched-vamana":
        return build_stitched_vamana(dataset, StitchedVamanaParams(**params), metric, seed)
    if algorithm == "nhq":
        return nhq_build(dataset, NhqParams(**params), metric, seed)
    if algorithm == "caps":
        return caps_build(dataset, CapsParams(**params), metric, seed)
    raise ValueError(f"unknown algorithm {algorithm!r}; known: {sorted(STRATEGY_CLASSES)}")


def save_index(path, strategy: Strategy) -> None:
    meta, arrays = strategy.state()
    arrays = {k: v for k, v in arrays.items() if v is not None}
    write_container(path, meta, arrays)


def load_index(path) -> Strategy:
    meta, arrays = read_container(path)
    cls = STRATEGY_CLASSES.get(meta.get("algorithm"))
    if cls is None:
        raise ValueError(f"index file names unknown algorithm {meta.get('algorithm')!r}")
    return cls.restore(meta, arrays)


__all__ = [
    "ALGORITHMS",
    "STRATEGY_CLASSES",
    "Strategy",
    "AcornGamma",
    "AcornGammaParams",
    "AcornOne",
    "CapsIndex",
    "CapsParams",
    "FilteredVamana",
    "FilteredVamanaParams",
    "NhqIndex",
    "NhqParams",
    "PostFilterHnsw",
    "PostFilterIvfPq",
    "PostFilterOutcome",
    "PostFilterParams",
    "PreFilterBruteForce",
    "StitchedVamana",
    "StitchedVamanaParams",
    "UngIndex",
    "UngParams",
    "build_acorn_gamma",
    "build_acorn_one",
    "build_brute_force",
    "build_filtered_vamana",
    "build_lng",
    "build_post_hnsw",
    "build_post_ivfpq",
    "build_strategy",
    "build_stitched_vamana",
    "build_ung",
    "caps_build",
    "group_by_label_set",
    "load_index",
    "nhq_build",
    "postfilter_search",
    "save_index",
]
