from .base import (
    BeamParams,
    HopMode,
    ProximityGraph,
    PruneParams,
    accept_words_for,
    adjacency_lists_to_csr,
    beam_search,
    medoid_of,
    metric_code,
    robust_prune,
)
from .knng import build_knn_graph
from .layered import build_layered_graph
from .vamana import build_vamana, per_label_medoids

__all__ = [
    "BeamParams",
    "HopMode",
    "ProximityGraph",
    "PruneParams",
    "accept_words_for",
    "adjacency_lists_to_csr",
    "beam_search",
    "build_knn_graph",
    "build_layered_graph",
    "build_vamana",
    "medoid_of",
    "metric_code",
    "per_label_medoids",
    "robust_prune",
]
