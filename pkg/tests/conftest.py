"""Shared fixtures: the seven-record demo dataset and synthetic helpers."""

from __future__ import annotations

import numpy as np
import pytest

from fannsbench.core import DistanceMetric, LabelSet
from fannsbench.dataset import Dataset

METRIC = DistanceMetric.SQUARED_EUCLIDEAN


def seven_record_dataset() -> Dataset:
    """The worked seven-point example: v5 nearest unfiltered, v3 under filters.

    Label sets are chosen so label 1 covers {v1,v2,v3,v5,v7}, label 2 covers
    {v1,v2,v3,v6,v7}, only v3/v7 carry exactly {1,2}, and v4 shares nothing
    with {1,2}. Points sit on a line with the query at the origin.
    """
    positions = [4.0, 5.0, 2.0, 7.0, 1.0, 6.0, 3.0]  # v1..v7
    vectors = np.array([[x, 0.0] for x in positions], dtype=np.float32)
    label_sets = [
        LabelSet([1, 2, 3]),  # v1
        LabelSet([1, 2, 4]),  # v2
        LabelSet([1, 2]),     # v3
        LabelSet([3]),        # v4
        LabelSet([1]),        # v5
        LabelSet([2]),        # v6
        LabelSet([1, 2]),     # v7
    ]
    return Dataset(vectors=vectors, label_sets=label_sets)


@pytest.fixture
def fig_dataset() -> Dataset:
    return seven_record_dataset()


@pytest.fixture
def fig_query_embedding() -> np.ndarray:
    return np.zeros(2, dtype=np.float32)


def random_labeled_dataset(
    n: int,
    dim: int,
    seed: int,
    universe: int = 8,
    max_labels: int = 3,
) -> Dataset:
    rng = np.random.Generator(np.random.PCG64(seed))
    vectors = rng.standard_normal((n, dim)).astype(np.float32)
    label_sets = []
    for _ in range(n):
        count = int(rng.integers(1, max_labels + 1))
        label_sets.append(LabelSet(rng.choice(universe, size=count, replace=False).tolist()))
    return Dataset(vectors=vectors, label_sets=label_sets)


def selectivity_controlled_dataset(n: int, dim: int, seed: int) -> Dataset:
    """Single-label records with label frequencies 1%, 5%, 25%, remainder.

    Under any of the four constraints a single-label query {j} then has
    selectivity equal to label j's frequency.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    vectors = rng.standard_normal((n, dim)).astype(np.float32)
    labels = rng.choice(4, size=n, p=[0.01, 0.05, 0.25, 0.69])
    label_sets = [LabelSet([int(x)]) for x in labels]
    return Dataset(vectors=vectors, label_sets=label_sets)


def fixed_length_dataset(n: int, dim: int, seed: int, length: int = 4, values: int = 3) -> Dataset:
    from fannsbench.workload import encode_fixed_length, gen_fixed_length_labels

    rng = np.random.Generator(np.random.PCG64(seed))
    vectors = rng.standard_normal((n, dim)).astype(np.float32)
    labvec = gen_fixed_length_labels(n, length, values, seed=seed + 1)
    return Dataset(
        vectors=vectors,
        label_sets=encode_fixed_length(labvec, values),
        label_vectors=labvec,
        values_per_position=values,
    )
