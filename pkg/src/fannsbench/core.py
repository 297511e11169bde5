"""Shared domain model: label sets, filter constraints, metrics, recall.

Embeddings are plain float32 numpy arrays throughout the package; the
helpers here validate them at API boundaries. Label sets are immutable,
strictly ascending tuples of non-negative integer ids.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ConstraintViolationError(ValueError):
    """A filter constraint was applied to data that cannot support it."""


class UnsupportedScenarioError(ValueError):
    """An algorithm was asked to run a scenario it does not implement."""


class FilterConstraint(enum.Enum):
    """Predicate semantics binding a query label set to base label sets."""

    CONTAINMENT = "containment"
    OVERLAP = "overlap"
    EQUALITY = "equality"
    FIXED_LENGTH_EQUALITY = "fixed_length_equality"


class DistanceMetric(enum.Enum):
    SQUARED_EUCLIDEAN = "sqeuclidean"
    INNER_PRODUCT_DISTANCE = "ip"


class LabelSet(tuple):
    """Strictly ascending, duplicate-free tuple of non-negative label ids.

    The constructor normalizes arbitrary iterables (sorting and removing
    duplicates), so ``LabelSet([2, 1, 2])`` yields ``(1, 2)``.
    """

    __slots__ = ()

    def __new__(cls, labels: Iterable[int] = ()) -> "LabelSet":
        seq = sorted({int(x) for x in labels})
        if seq and seq[0] < 0:
            raise ValueError(f"label ids must be non-negative, got {seq[0]}")
        return super().__new__(cls, seq)

    def intersects(self, other: Sequence[int]) -> bool:
        return _sorted_intersects(self, other)

    def contains_all(self, other: Sequence[int]) -> bool:
        """True when every id of `other` is present in this set."""
        return _sorted_subset(other, self)


def _sorted_subset(small: Sequence[int], big: Sequence[int]) -> bool:
    # Two-pointer merge over ascending sequences.
    i = j = 0
    ns, nb = len(small), len(big)
    if ns > nb:
        return False
    while i < ns and j < nb:
        if small[i] == big[j]:
            i += 1
            j += 1
        elif small[i] > big[j]:
            j += 1
        else:
            return False
    return i == ns


def _sorted_intersects(a: Sequence[int], b: Sequence[int]) -> bool:
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        if a[i] == b[j]:
            return True
        if a[i] < b[j]:
            i += 1
        else:
            j += 1
    return False


def satisfies(base: LabelSet, query: LabelSet, constraint: FilterConstraint) -> bool:
    """Evaluate one base label set against a query under a constraint.

    Containment accepts when query is a subset of base, Overlap when the
    two intersect, and both equality kinds when the sets are identical.
    """
    if constraint is FilterConstraint.CONTAINMENT:
        return _sorted_subset(query, base)
    if constraint is FilterConstraint.OVERLAP:
        return _sorted_intersects(base, query)
    # EQUALITY and FIXED_LENGTH_EQUALITY share the same per-pair predicate;
    # the fixed-length precondition is enforced at the dataset level.
    return len(base) == len(query) and tuple(base) == tuple(query)


def as_embedding(values, dim: int | None = None) -> np.ndarray:
    """Validate and convert `values` into a finite float32 vector."""
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.ndim != 1:
        raise ValueError(f"embedding must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"embedding has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding contains non-finite values")
    return arr


def distance(metric: DistanceMetric, a: np.ndarray, b: np.ndarray) -> float:
    """Pairwise distance under `metric` (squared L2 or negated inner product)."""
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if metric is DistanceMetric.SQUARED_EUCLIDEAN:
        diff = a.astype(np.float64) - b.astype(np.float64)
        return float(np.dot(diff, diff))
    return -float(np.dot(a.astype(np.float64), b.astype(np.float64)))


def batch_distances(metric: DistanceMetric, query: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Distances from one query to each row of `vectors`, float64.

    This is the single full-precision routine shared by the exact oracle
    and by every strategy's final rerank, so rankings agree bit-for-bit.
    """
    q = np.asarray(query, dtype=np.float32).astype(np.float64)
    mat = np.asarray(vectors, dtype=np.float32).astype(np.float64)
    if mat.ndim != 2 or mat.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: query {q.shape} vs matrix {mat.shape}")
    if metric is DistanceMetric.SQUARED_EUCLIDEAN:
        diff = mat - q
        return np.einsum("ij,ij->i", diff, diff)
    return -(mat @ q)


@dataclass(frozen=True)
class DatasetRecord:
    """One indexed element: dense id, embedding, label set."""

    id: int
    embedding: np.ndarray
    labels: LabelSet


@dataclass(frozen=True)
class FilteredQuery:
    embedding: np.ndarray
    labels: LabelSet
    k: int
    constraint: FilterConstraint

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class GroundTruth:
    """Filtered exact neighbors of one query, ascending by distance."""

    ids: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ids", np.asarray(self.ids, dtype=np.int64))
        object.__setattr__(self, "distances", np.asarray(self.distances, dtype=np.float32))
        if self.ids.shape != self.distances.shape:
            raise ValueError("ids and distances must have equal length")
        if self.distances.size > 1 and np.any(np.diff(self.distances) < 0):
            raise ValueError("ground-truth distances must be non-decreasing")

    def __len__(self) -> int:
        return int(self.ids.size)


def recall_at_k(result: Sequence[int], truth: GroundTruth, k: int) -> float:
    """Fraction of the true top-k present in `result[:k]`.

    Any returned id whose ground-truth distance ties the k-th true
    distance counts as correct, which keeps the metric well defined when
    several records sit at the cutoff distance. The denominator is
    min(k, |truth|) so the value stays in [0, 1].
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(truth) == 0:
        raise ValueError("ground truth is empty; workloads must guarantee matches")
    denom = min(k, len(truth))
    kth_dist = truth.distances[denom - 1]
    correct = set(truth.ids[:denom].tolist())
    # Ties at the cutoff: accept every stored true neighbor at that distance.
    for idx in range(denom, len(truth)):
        if truth.distances[idx] == kth_dist:
            correct.add(int(truth.ids[idx]))
        else:
            break
    hits = sum(1 for r in list(result)[:k] if int(r) in correct)
    return min(hits / denom, 1.0)


def selectivity(
    label_sets: Sequence[LabelSet],
    query: LabelSet,
    constraint: FilterConstraint,
) -> float:
    """Fraction of `label_sets` satisfying the constraint for `query`."""
    n = len(label_sets)
    if n == 0:
        raise ValueError("selectivity is undefined on an empty dataset")
    matched = sum(1 for ls in label_sets if satisfies(ls, query, constraint))
    return matched / n


def ensure_fixed_length(label_sets: Sequence[LabelSet]) -> int:
    """Return the shared label-set length, or raise for mixed lengths."""
    lengths = {len(ls) for ls in label_sets}
    if len(lengths) > 1:
        raise ConstraintViolationError(
            f"fixed-length equality requires uniform label lengths, found {sorted(lengths)}"
        )
    return lengths.pop() if lengths else 0
