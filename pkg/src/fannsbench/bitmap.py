"""Word-packed filter bitmaps and the per-label inverted bitset index.

This is the shared filtering layer: one bitset per label, combined with
AND (containment) or OR (overlap) and, for equality, followed by an exact
set comparison over the surviving candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import FilterConstraint, LabelSet
from .dataset import Dataset

WORD_BITS = 64

_POPCOUNT8 = np.array([bin(b).count("1") for b in range(256)], dtype=np.uint8)


class _PassCounter:
    """Counts word-wise combine passes; used by the cost-contract tests."""

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


combine_passes = _PassCounter()


def _popcount_words(words: np.ndarray) -> int:
    return int(_POPCOUNT8[words.view(np.uint8)].sum())


@dataclass(frozen=True)
class FilterBitmap:
    """Immutable membership mask over `n` records, packed into 64-bit words."""

    words: np.ndarray
    n: int
    count: int

    @classmethod
    def from_words(cls, words: np.ndarray, n: int) -> "FilterBitmap":
        words = np.ascontiguousarray(words, dtype=np.uint64)
        return cls(words=words, n=n, count=_popcount_words(words))

    @classmethod
    def from_ids(cls, ids: Sequence[int], n: int) -> "FilterBitmap":
        words = np.zeros(_word_len(n), dtype=np.uint64)
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size:
            if ids.min() < 0 or ids.max() >= n:
                raise ValueError("bit position out of range")
            np.bitwise_or.at(words, ids >> 6, np.uint64(1) << (ids & 63).astype(np.uint64))
        return cls(words=words, n=n, count=_popcount_words(words))

    @classmethod
    def zeros(cls, n: int) -> "FilterBitmap":
        return cls(words=np.zeros(_word_len(n), dtype=np.uint64), n=n, count=0)

    @classmethod
    def ones(cls, n: int) -> "FilterBitmap":
        words = np.full(_word_len(n), np.uint64(0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        _mask_tail(words, n)
        return cls(words=words, n=n, count=n)

    def get(self, i: int) -> bool:
        return bool((int(self.words[i >> 6]) >> (i & 63)) & 1)

    def to_bool_array(self) -> np.ndarray:
        bits = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return bits[: self.n].astype(bool)

    def __and__(self, other: "FilterBitmap") -> "FilterBitmap":
        combine_passes.count += 1
        return FilterBitmap.from_words(self.words & other.words, self.n)

    def __or__(self, other: "FilterBitmap") -> "FilterBitmap":
        combine_passes.count += 1
        return FilterBitmap.from_words(self.words | other.words, self.n)


def _word_len(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def _mask_tail(words: np.ndarray, n: int) -> None:
    # Bits at positions >= n must stay zero.
    tail = n & 63
    if words.size and tail:
        words[-1] &= np.uint64((1 << tail) - 1)


def bitmap_iter(bitmap: FilterBitmap) -> Iterator[int]:
    """Yield the set-bit positions of `bitmap` in ascending order."""
    bits = np.unpackbits(bitmap.words.view(np.uint8), bitorder="little")[: bitmap.n]
    return iter(np.nonzero(bits)[0].tolist())


def bitmap_ids(bitmap: FilterBitmap) -> np.ndarray:
    """Set-bit positions as an int64 array (vectorized form of bitmap_iter)."""
    bits = np.unpackbits(bitmap.words.view(np.uint8), bitorder="little")[: bitmap.n]
    return np.nonzero(bits)[0].astype(np.int64)


class InvertedLabelIndex:
    """label id -> FilterBitmap of the records carrying that label."""

    def __init__(self, bitsets: dict[int, FilterBitmap], n: int, label_sets: list[LabelSet]):
        self.bitsets = bitsets
        self.n = n
        self.label_sets = label_sets

    def bitset(self, label: int) -> FilterBitmap:
        """Bitset for `label`; unknown labels map to the all-zero bitmap."""
        found = self.bitsets.get(int(label))
        if found is None:
            return FilterBitmap.zeros(self.n)
        return found


def build_inverted_index(dataset: Dataset) -> InvertedLabelIndex:
    """One pass over the dataset building a bitset per present label."""
    n = dataset.n
    per_label: dict[int, list[int]] = {}
    for i, ls in enumerate(dataset.label_sets):
        for lab in ls:
            per_label.setdefault(lab, []).append(i)
    bitsets = {lab: FilterBitmap.from_ids(ids, n) for lab, ids in per_label.items()}
    return InvertedLabelIndex(bitsets, n, dataset.label_sets)


def filter_map(
    index: InvertedLabelIndex,
    query: LabelSet,
    constraint: FilterConstraint,
) -> FilterBitmap:
    """Build the query's filter bitmap from the inverted index.

    Containment ANDs the query labels' bitsets, Overlap ORs them, and the
    equality constraints run the containment AND first and then verify
    exact set equality on each surviving candidate.
    """
    n = index.n
    if len(query) == 0:
        if constraint is FilterConstraint.OVERLAP:
            return FilterBitmap.zeros(n)
        if constraint is FilterConstraint.CONTAINMENT:
            return FilterBitmap.ones(n)
        # Equality with an empty query: only records with empty label sets.
        return _verify_equality(FilterBitmap.ones(n), query, index.label_sets)

    acc = index.bitset(query[0])
    for lab in query[1:]:
        if constraint is FilterConstraint.OVERLAP:
            acc = acc | index.bitset(lab)
        else:
            acc = acc & index.bitset(lab)
    if constraint in (FilterConstraint.EQUALITY, FilterConstraint.FIXED_LENGTH_EQUALITY):
        if constraint is FilterConstraint.FIXED_LENGTH_EQUALITY:
            from .core import ensure_fixed_length

            ensure_fixed_length(index.label_sets)
        return _verify_equality(acc, query, index.label_sets)
    return acc


def _verify_equality(
    candidates: FilterBitmap, query: LabelSet, label_sets: list[LabelSet]
) -> FilterBitmap:
    qlen = len(query)
    qtup = tuple(query)
    keep = [
        i
        for i in bitmap_ids(candidates)
        if len(label_sets[i]) == qlen and tuple(label_sets[i]) == qtup
    ]
    return FilterBitmap.from_ids(keep, candidates.n)
