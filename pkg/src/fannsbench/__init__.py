"""Filtered approximate nearest neighbor search toolkit and benchmark."""

from .core import (
    ConstraintViolationError,
    DatasetRecord,
    DistanceMetric,
    FilterConstraint,
    FilteredQuery,
    GroundTruth,
    LabelSet,
    UnsupportedScenarioError,
    distance,
    recall_at_k,
    satisfies,
    selectivity,
)
from .dataset import Dataset
from .bitmap import FilterBitmap, InvertedLabelIndex, bitmap_iter, build_inverted_index, filter_map
from .oracle import OracleResult, exact_filtered_knn

__version__ = "0.1.0"

__all__ = [
    "ConstraintViolationError",
    "Dataset",
    "DatasetRecord",
    "DistanceMetric",
    "FilterBitmap",
    "FilterConstraint",
    "FilteredQuery",
    "GroundTruth",
    "InvertedLabelIndex",
    "LabelSet",
    "OracleResult",
    "UnsupportedScenarioError",
    "bitmap_iter",
    "build_inverted_index",
    "distance",
    "exact_filtered_knn",
    "filter_map",
    "recall_at_k",
    "satisfies",
    "selectivity",
]
