"""In-memory dataset: one float32 vector matrix plus per-record label sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .core import DatasetRecord, LabelSet, ensure_fixed_length


@dataclass
class Dataset:
    """Vectors and labels for `n` records with dense ids [0, n).

    `label_vectors` is only present for fixed-length workloads, where each
    record additionally carries a positional value vector of shape (n, L);
    `values_per_position` is the number of distinct values each position
    can take. General label sets are always available in `label_sets`.
    """

    vectors: np.ndarray
    label_sets: list[LabelSet]
    label_vectors: np.ndarray | None = None
    values_per_position: int | None = None
    _label_csr: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {self.vectors.shape}")
        if len(self.label_sets) != self.vectors.shape[0]:
            raise ValueError(
                f"{len(self.label_sets)} label sets for {self.vectors.shape[0]} vectors"
            )
        self.label_sets = [
            ls if isinstance(ls, LabelSet) else LabelSet(ls) for ls in self.label_sets
        ]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def label_universe_size(self) -> int:
        top = -1
        for ls in self.label_sets:
            if ls and ls[-1] > top:
                top = ls[-1]
        return top + 1

    @property
    def is_fixed_length(self) -> bool:
        lengths = {len(ls) for ls in self.label_sets}
        return len(lengths) <= 1

    def fixed_label_length(self) -> int:
        return ensure_fixed_length(self.label_sets)

    def records(self) -> Iterator[DatasetRecord]:
        for i in range(self.n):
            yield DatasetRecord(i, self.vectors[i], self.label_sets[i])

    def labels_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Flatten label sets into (indptr int64[n+1], ids int32[nnz])."""
        if self._label_csr is None:
            counts = np.fromiter((len(ls) for ls in self.label_sets), np.int64, self.n)
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            flat = np.empty(int(indptr[-1]), dtype=np.int32)
            for i, ls in enumerate(self.label_sets):
                flat[indptr[i] : indptr[i + 1]] = ls
            self._label_csr = (indptr, flat)
        return self._label_csr

    def subset(self, ids: Sequence[int]) -> "Dataset":
        """New dataset from the given record ids (re-indexed densely)."""
        ids = np.asarray(ids, dtype=np.int64)
        return Dataset(
            vectors=self.vectors[ids],
            label_sets=[self.label_sets[i] for i in ids],
            label_vectors=None if self.label_vectors is None else self.label_vectors[ids],
            values_per_position=self.values_per_position,
        )

    @classmethod
    def from_records(cls, records: Sequence[DatasetRecord]) -> "Dataset":
        ordered = sorted(records, key=lambda r: r.id)
        if [r.id for r in ordered] != list(range(len(ordered))):
            raise ValueError("record ids must be dense and unique in [0, n)")
        vectors = np.stack([r.embedding for r in ordered]).astype(np.float32)
        return cls(vectors=vectors, label_sets=[r.labels for r in ordered])
