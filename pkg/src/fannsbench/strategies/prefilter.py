"""Pre-filter brute force: the exact baseline wrapped as a strategy."""

from __future__ import annotations

import numpy as np

from ..bitmap import FilterBitmap, build_inverted_index, filter_map
from ..core import DistanceMetric, FilteredQuery
from ..dataset import Dataset
from ..oracle import exact_knn_over_bitmap
from .base import Strategy


class PreFilterBruteForce(Strategy):
    algorithm = "brute-force"
    knob_name = "scan"
    needs_bitmap = True

    def search(self, query: FilteredQuery, knob: int = 0, bitmap: FilterBitmap | None = None) -> np.ndarray:
        self.check_scenario(query.constraint)
        if bitmap is None:
            bitmap = filter_map(self._index(), query.labels, query.constraint)
        res = exact_knn_over_bitmap(self.dataset, bitmap, query.embedding, query.k, self.metric)
        return res.ids

    def _index(self):
        if not hasattr(self, "_inv"):
            self._inv = build_inverted_index(self.dataset)
        return self._inv

    def extra_state(self):
        return {}, {}

    def restore_extra(self, meta, arrays):
        pass


def build_brute_force(dataset: Dataset, metric: DistanceMetric, seed: int = 0) -> PreFilterBruteForce:
    return PreFilterBruteForce(dataset, metric, {}, seed)
