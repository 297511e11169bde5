"""Common surface of every search strategy plus (de)serialization glue."""

from __future__ import annotations

import abc
from typing import ClassVar

import numpy as np

from ..bitmap import FilterBitmap
from ..core import DistanceMetric, FilterConstraint, FilteredQuery, LabelSet, UnsupportedScenarioError
from ..dataset import Dataset
from ..oracle import top_k_by_distance
from ..core import batch_distances

ALL_CONSTRAINTS = frozenset(FilterConstraint)
FIXED_ONLY = frozenset({FilterConstraint.FIXED_LENGTH_EQUALITY})


class Strategy(abc.ABC):
    """A built index exposing filtered top-k search.

    Instances are immutable after construction; `search` is pure and safe
    to call from concurrent query workers. `knob` is the strategy's
    search-time effort parameter (beam width, probe count, or scan scope).
    """

    algorithm: ClassVar[str]
    knob_name: ClassVar[str] = "beam"
    needs_bitmap: ClassVar[bool] = False
    supported: ClassVar[frozenset] = ALL_CONSTRAINTS

    def __init__(self, dataset: Dataset, metric: DistanceMetric, params: dict, seed: int):
        self.dataset = dataset
        self.metric = metric
        self.params = dict(params)
        self.seed = int(seed)

    def check_scenario(self, constraint: FilterConstraint) -> None:
        if constraint not in self.supported:
            raise UnsupportedScenarioError(
                f"{self.algorithm} does not support the {constraint.value} scenario"
            )

    @abc.abstractmethod
    def search(
        self, query: FilteredQuery, knob: int, bitmap: FilterBitmap | None = None
    ) -> np.ndarray:
        """Return up to query.k record ids satisfying the constraint."""

    def rerank_exact(self, query_embedding: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
        """Final top-k by the shared full-precision routine (ties by id)."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size == 0:
            return ids
        dists = batch_distances(self.metric, query_embedding, self.dataset.vectors[ids])
        out, _ = top_k_by_distance(ids, dists, k)
        return out

    # --- serialization -----------------------------------------------------

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        meta = {
            "algorithm": self.algorithm,
            "metric": self.metric.value,
            "params": self.params,
            "seed": self.seed,
            "values_per_position": self.dataset.values_per_position,
        }
        lab_indptr, lab_ids = self.dataset.labels_csr()
        arrays = {
            "vectors": self.dataset.vectors,
            "labels_indptr": lab_indptr,
            "labels_flat": lab_ids,
        }
        if self.dataset.label_vectors is not None:
            arrays["label_matrix"] = self.dataset.label_vectors.astype(np.int32)
        extra_meta, extra_arrays = self.extra_state()
        meta.update(extra_meta)
        arrays.update(extra_arrays)
        return meta, arrays

    def extra_state(self) -> tuple[dict, dict[str, np.ndarray]]:
        return {}, {}

    @classmethod
    def restore(cls, meta: dict, arrays: dict[str, np.ndarray]) -> "Strategy":
        dataset = dataset_from_state(meta, arrays)
        obj = cls.__new__(cls)
        Strategy.__init__(
            obj, dataset, DistanceMetric(meta["metric"]), meta["params"], meta["seed"]
        )
        obj.restore_extra(meta, arrays)
        return obj

    def restore_extra(self, meta: dict, arrays: dict[str, np.ndarray]) -> None:
        raise NotImplementedError(f"{type(self).__name__} cannot be restored")


def dataset_from_state(meta: dict, arrays: dict[str, np.ndarray]) -> Dataset:
    indptr = arrays["labels_indptr"]
    flat = arrays["labels_flat"]
    label_sets = [
        LabelSet(flat[indptr[i] : indptr[i + 1]].tolist()) for i in range(len(indptr) - 1)
    ]
    return Dataset(
        vectors=arrays["vectors"],
        label_sets=label_sets,
        label_vectors=arrays.get("label_matrix"),
        values_per_position=meta.get("values_per_position"),
    )


def graph_state(prefix: str, layers: list[tuple[np.ndarray, np.ndarray]]) -> dict[str, np.ndarray]:
    arrays = {}
    for i, (indptr, indices) in enumerate(layers):
        arrays[f"{prefix}_indptr_{i}"] = indptr
        arrays[f"{prefix}_indices_{i}"] = indices
    return arrays


def graph_layers_from_state(
    prefix: str, arrays: dict[str, np.ndarray], num_layers: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    return [
        (arrays[f"{prefix}_indptr_{i}"], arrays[f"{prefix}_indices_{i}"])
        for i in range(num_layers)
    ]
