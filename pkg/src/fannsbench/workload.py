"""Dataset ingestion, synthetic labels, query stratification, ground truth.

File formats (all little-endian):
  * vectors: fvecs. Per vector, an int32 dimension then that many float32s
  * labels: text. Line i holds comma-separated integer ids for record i
  * ground truth: per query, int32 satisfied_count, int32 m, then m pairs
    of (int32 id, float32 distance)
  * workload manifest: JSON (scenario, k, k_max, strata, seed, counts)

A workload directory holds manifest.json, queries.fvecs,
queries.labels.txt and gt.bin.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bitmap import build_inverted_index
from .core import FilterConstraint, FilteredQuery, GroundTruth, LabelSet, selectivity
from .dataset import Dataset
from .core import DistanceMetric
from .oracle import exact_filtered_knn


class FileFormatError(ValueError):
    """Malformed input file; message carries the byte offset or line number."""


# ---------------------------------------------------------------------------
# fvecs / labels files


def load_fvecs(path) -> np.ndarray:
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size == 0:
        return np.empty((0, 0), dtype=np.float32)
    if raw.size < 4:
        raise FileFormatError(f"{path}: truncated header at byte 0")
    dim = int(raw[:4].view(np.int32)[0])
    if dim <= 0:
        raise FileFormatError(f"{path}: non-positive dimension {dim} at byte 0")
    row_bytes = 4 * (dim + 1)
    if raw.size % row_bytes != 0:
        offset = (raw.size // row_bytes) * row_bytes
        raise FileFormatError(f"{path}: truncated record at byte {offset}")
    mat = raw.view(np.float32).reshape(-1, dim + 1)
    dims = mat[:, 0].view(np.int32)
    bad = np.nonzero(dims != dim)[0]
    if bad.size:
        raise FileFormatError(
            f"{path}: inconsistent dimension {int(dims[bad[0]])} at byte {int(bad[0]) * row_bytes}"
        )
    return np.ascontiguousarray(mat[:, 1:], dtype=np.float32)


def save_fvecs(path, vectors: np.ndarray) -> None:
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n, d = vectors.shape
    out = np.empty((n, d + 1), dtype=np.float32)
    out[:, 0] = np.full(n, d, dtype=np.int32).view(np.float32)
    out[:, 1:] = vectors
    out.tofile(path)


def load_labels(path, remap: bool = False) -> tuple[list[LabelSet], dict[int, int] | None]:
    """Parse per-line label lists; optionally remap raw ids to dense [0, U).

    Returns (label_sets, mapping) where mapping is raw id -> dense id when
    `remap` is requested (and should be persisted beside the output).
    """
    sets: list[LabelSet] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                sets.append(LabelSet())
                continue
            try:
                ids = [int(tok) for tok in line.split(",") if tok.strip() != ""]
            except ValueError as exc:
                raise FileFormatError(f"{path}: non-integer token on line {lineno}") from exc
            sets.append(LabelSet(ids))
    if not remap:
        return sets, None
    universe = sorted({lab for ls in sets for lab in ls})
    mapping = {raw: dense for dense, raw in enumerate(universe)}
    remapped = [LabelSet([mapping[lab] for lab in ls]) for ls in sets]
    return remapped, mapping


def save_labels(path, label_sets: list[LabelSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ls in label_sets:
            fh.write(",".join(str(x) for x in ls))
            fh.write("\n")


# ---------------------------------------------------------------------------
# synthetic fixed-length labels


def gen_fixed_length_labels(
    n: int, length: int = 4, values_per_position: int = 3, seed: int = 0
) -> np.ndarray:
    """IID uniform label vectors; defaults give the 81-cell combination space."""
    if length < 1 or values_per_position < 1:
        raise ValueError("length and values_per_position must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.integers(0, values_per_position, size=(n, length), dtype=np.int64)


def encode_fixed_length(label_vectors: np.ndarray, values_per_position: int) -> list[LabelSet]:
    """Offset encoding: (position p, value v) -> id p * V + v.

    Makes fixed-length vectors consumable as ordinary label sets, so every
    general strategy can run the fixed-length scenario as plain equality.
    """
    out = []
    for row in np.asarray(label_vectors):
        out.append(LabelSet([p * values_per_position + int(v) for p, v in enumerate(row)]))
    return out


def decode_fixed_length(
    label_sets: list[LabelSet], length: int, values_per_position: int
) -> np.ndarray:
    mat = np.full((len(label_sets), length), -1, dtype=np.int64)
    for i, ls in enumerate(label_sets):
        for lab in ls:
            pos, val = divmod(int(lab), values_per_position)
            mat[i, pos] = val
    return mat


# ---------------------------------------------------------------------------
# workloads


@dataclass
class Workload:
    scenario: FilterConstraint
    k: int
    k_max: int
    queries: list[FilteredQuery]
    truths: list[GroundTruth]
    satisfied_counts: list[int]
    strata: list[str] = field(default_factory=list)
    seed: int = 0

    def __len__(self) -> int:
        return len(self.queries)


@dataclass
class QuerySeed:
    labels: LabelSet
    stratum: str


def sample_query_labels(
    base_label_sets: list[LabelSet], count: int, seed: int
) -> list[LabelSet]:
    """Query label sets drawn uniformly from the base records' label sets."""
    rng = np.random.Generator(np.random.PCG64(seed))
    picks = rng.integers(0, len(base_label_sets), size=count)
    return [base_label_sets[int(i)] for i in picks]


def stratify_by_length(
    base_label_sets: list[LabelSet],
    scenario: FilterConstraint,
    groups: int = 3,
    per_group: int = 1000,
    seed: int = 0,
    pool_factor: int = 8,
) -> list[list[QuerySeed]]:
    """Sample candidate label sets and bucket them into length terciles.

    Degenerate pools (all candidates one length) collapse the groups and a
    warning-style shortfall is reflected by smaller buckets, never an error.
    """
    import warnings

    pool = sample_query_labels(base_label_sets, per_group * groups * pool_factor, seed)
    lengths = np.array([len(ls) for ls in pool])
    edges = np.percentile(lengths, np.linspace(0, 100, groups + 1))
    names = ["short", "medium", "long"] if groups == 3 else [f"g{i}" for i in range(groups)]
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    buckets: list[list[QuerySeed]] = []
    if len(set(lengths.tolist())) == 1:
        warnings.warn("all candidate label sets share one length; groups collapse")
    for g in range(groups):
        lo, hi = edges[g], edges[g + 1]
        member_idx = np.nonzero(
            (lengths >= lo) & ((lengths <= hi) if g == groups - 1 else (lengths < hi))
        )[0]
        if member_idx.size == 0:
            member_idx = np.nonzero(lengths == lengths.min())[0]
        take = rng.choice(member_idx, size=min(per_group, member_idx.size), replace=False)
        if take.size < per_group:
            warnings.warn(
                f"stratum {names[g]}: only {take.size} of {per_group} candidates available"
            )
        buckets.append([QuerySeed(labels=pool[int(i)], stratum=names[g]) for i in take])
    return buckets


def stratify_by_selectivity(
    base_label_sets: list[LabelSet],
    scenario: FilterConstraint,
    percentiles: tuple[int, ...] = (75, 50, 25, 1),
    per_group: int = 100,
    seed: int = 0,
    pool_factor: int = 8,
) -> list[list[QuerySeed]]:
    """Bucket candidate queries around selectivity percentiles of the pool."""
    pool = sample_query_labels(base_label_sets, per_group * len(percentiles) * pool_factor, seed)
    sigma = np.array([selectivity(base_label_sets, ls, scenario) for ls in pool])
    order = np.argsort(sigma, kind="stable")
    buckets: list[list[QuerySeed]] = []
    npool = len(pool)
    for p in percentiles:
        center = int(round((p / 100.0) * (npool - 1)))
        half = per_group // 2
        lo = max(0, min(center - half, npool - per_group))
        take = order[lo : lo + per_group]
        buckets.append([QuerySeed(labels=pool[int(i)], stratum=f"p{p}") for i in take])
    return buckets


def attach_ground_truth(
    query_embeddings: np.ndarray,
    seeds: list[QuerySeed],
    dataset: Dataset,
    scenario: FilterConstraint,
    k: int = 10,
    k_max: int = 100,
    metric: DistanceMetric = DistanceMetric.SQUARED_EUCLIDEAN,
    guarantee: bool = True,
    seed: int = 0,
) -> Workload:
    """Compute k_max-deep exact truth per query; drop short ones if guaranteed."""
    index = build_inverted_index(dataset)
    queries, truths, counts, strata = [], [], [], []
    for emb, qs in zip(query_embeddings, seeds):
        q = FilteredQuery(
            embedding=np.ascontiguousarray(emb, dtype=np.float32),
            labels=qs.labels, k=k_max, constraint=scenario,
        )
        res = exact_filtered_knn(dataset, index, q, metric)
        if guarantee and res.satisfied_count < k_max:
            continue
        if res.ids.size == 0:
            continue
        queries.append(FilteredQuery(embedding=q.embedding, labels=q.labels, k=k, constraint=scenario))
        truths.append(GroundTruth(ids=res.ids, distances=res.distances))
        counts.append(res.satisfied_count)
        strata.append(qs.stratum)
    if not queries:
        raise ValueError("every candidate query was dropped; relax the guarantee or k_max")
    return Workload(
        scenario=scenario, k=k, k_max=k_max, queries=queries, truths=truths,
        satisfied_counts=counts, strata=strata, seed=seed,
    )


# ---------------------------------------------------------------------------
# workload directory round-trip


def save_workload(dirpath, workload: Workload) -> None:
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    save_fvecs(dirpath / "queries.fvecs", np.stack([q.embedding for q in workload.queries]))
    save_labels(dirpath / "queries.labels.txt", [q.labels for q in workload.queries])
    manifest = {
        "scenario": workload.scenario.value,
        "k": workload.k,
        "k_max": workload.k_max,
        "num_queries": len(workload.queries),
        "strata": workload.strata,
        "seed": workload.seed,
    }
    (dirpath / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    with open(dirpath / "gt.bin", "wb") as fh:
        for truth, count in zip(workload.truths, workload.satisfied_counts):
            m = len(truth)
            fh.write(struct.pack("<ii", count, m))
            pairs = np.empty(2 * m, dtype=np.uint32)
            pairs[0::2] = truth.ids.astype(np.uint32)
            pairs[1::2] = truth.distances.astype(np.float32).view(np.uint32)
            fh.write(pairs.tobytes())


def load_workload(dirpath) -> Workload:
    dirpath = Path(dirpath)
    manifest = json.loads((dirpath / "manifest.json").read_text())
    embeddings = load_fvecs(dirpath / "queries.fvecs")
    label_sets, _ = load_labels(dirpath / "queries.labels.txt")
    scenario = FilterConstraint(manifest["scenario"])
    k = manifest["k"]
    queries = [
        FilteredQuery(embedding=embeddings[i], labels=label_sets[i], k=k, constraint=scenario)
        for i in range(manifest["num_queries"])
    ]
    truths, counts = [], []
    with open(dirpath / "gt.bin", "rb") as fh:
        for _ in range(manifest["num_queries"]):
            head = fh.read(8)
            if len(head) != 8:
                raise FileFormatError(f"{dirpath}/gt.bin: truncated at query {len(truths)}")
            count, m = struct.unpack("<ii", head)
            block = np.frombuffer(fh.read(8 * m), dtype=np.uint32)
            ids = block[0::2].astype(np.int64)
            dists = block[1::2].view(np.float32)
            truths.append(GroundTruth(ids=ids, distances=dists))
            counts.append(count)
    return Workload(
        scenario=scenario, k=k, k_max=manifest["k_max"], queries=queries,
        truths=truths, satisfied_counts=counts,
        strata=manifest.get("strata", []), seed=manifest.get("seed", 0),
    )


# ---------------------------------------------------------------------------
# dataset directories


@dataclass
class DatasetBundle:
    vectors_path: str
    labels_path: str
    n: int
    d: int
    label_universe: int


def save_dataset(dirpath, dataset: Dataset) -> DatasetBundle:
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    save_fvecs(dirpath / "vectors.fvecs", dataset.vectors)
    save_labels(dirpath / "labels.txt", dataset.label_sets)
    meta = {
        "n": dataset.n,
        "d": dataset.dim,
        "label_universe": dataset.label_universe_size,
        "values_per_position": dataset.values_per_position,
        "fixed_length": (
            dataset.label_vectors.shape[1] if dataset.label_vectors is not None else None
        ),
    }
    (dirpath / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return DatasetBundle(
        vectors_path=str(dirpath / "vectors.fvecs"),
        labels_path=str(dirpath / "labels.txt"),
        n=dataset.n, d=dataset.dim, label_universe=meta["label_universe"],
    )


def import_dataset(vectors_path, labels_path, out_dir) -> Dataset:
    """Ingest raw fvecs + labels text into a dataset directory.

    Raw label ids are remapped to a dense range and the mapping is
    persisted beside the output as label_mapping.json.
    """
    vectors = load_fvecs(vectors_path)
    label_sets, mapping = load_labels(labels_path, remap=True)
    dataset = Dataset(vectors=vectors, label_sets=label_sets)
    save_dataset(out_dir, dataset)
    (Path(out_dir) / "label_mapping.json").write_text(
        json.dumps({str(raw): dense for raw, dense in (mapping or {}).items()},
                   indent=2, sort_keys=True)
    )
    return dataset


def load_dataset(dirpath) -> Dataset:
    dirpath = Path(dirpath)
    vectors = load_fvecs(dirpath / "vectors.fvecs")
    label_sets, _ = load_labels(dirpath / "labels.txt")
    meta_path = dirpath / "meta.json"
    values = fixed_len = None
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        values = meta.get("values_per_position")
        fixed_len = meta.get("fixed_length")
    label_vectors = None
    if values is not None and fixed_len is not None:
        label_vectors = decode_fixed_length(label_sets, fixed_len, values)
    return Dataset(
        vectors=vectors, label_sets=label_sets,
        label_vectors=label_vectors, values_per_position=values,
    )
