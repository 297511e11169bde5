"""Measurement harness: timed workload runs, CSV rows, Pareto extraction.

Queries are dispatched across a fixed pool of workers (each query handled
single-threaded) and a whole knob sweep produces one RunPoint per knob
value. Bitmap construction for filter-consuming strategies happens inside
the timed region by default, since it is per-query work; pass
include_filter_time=False to precompute the bitmaps untimed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bitmap import build_inverted_index, filter_map
from .core import recall_at_k
from .strategies.base import Strategy
from .workload import Workload

CSV_HEADER = [
    "dataset", "algorithm", "scenario", "param_id", "params",
    "knob", "k", "threads", "recall", "qps",
]


@dataclass
class RunPoint:
    dataset: str
    algorithm: str
    scenario: str
    param_id: str
    params: str
    knob: int
    k: int
    threads: int
    recall: float
    qps: float

    def row(self) -> list:
        return [
            self.dataset, self.algorithm, self.scenario, self.param_id, self.params,
            self.knob, self.k, self.threads, f"{self.recall:.6f}", f"{self.qps:.3f}",
        ]

    @classmethod
    def from_row(cls, row: dict) -> "RunPoint":
        return cls(
            dataset=row["dataset"], algorithm=row["algorithm"], scenario=row["scenario"],
            param_id=row["param_id"], params=row["params"], knob=int(row["knob"]),
            k=int(row["k"]), threads=int(row["threads"]),
            recall=float(row["recall"]), qps=float(row["qps"]),
        )


def param_id_for(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:10]


def run_workload(
    strategy: Strategy,
    workload: Workload,
    sweep: list[int],
    threads: int = 16,
    warmup: int = 100,
    include_filter_time: bool = True,
    dataset_id: str = "dataset",
    k: int | None = None,
) -> list[RunPoint]:
    """Sweep the search knob, measuring mean recall@k and wall-clock QPS.

    `k` overrides the workload's top-k (the stored ground truth is k_max
    deep, so one workload file serves a whole top-k sweep).
    """
    if not workload.queries:
        raise ValueError("workload has no queries")
    if workload.scenario not in strategy.supported:
        raise ValueError(
            f"{strategy.algorithm} does not support scenario {workload.scenario.value}"
        )
    queries = workload.queries
    truths = workload.truths
    k = workload.k if k is None else int(k)
    if k > workload.k_max:
        raise ValueError(f"k={k} exceeds the stored ground-truth depth {workload.k_max}")
    if k != workload.k:
        from .core import FilteredQuery

        queries = [
            FilteredQuery(embedding=q.embedding, labels=q.labels, k=k,
                          constraint=q.constraint)
            for q in queries
        ]
    inverted = build_inverted_index(strategy.dataset) if strategy.needs_bitmap else None

    pre_bitmaps = None
    if strategy.needs_bitmap and not include_filter_time:
        pre_bitmaps = [
            filter_map(inverted, q.labels, q.constraint) for q in queries
        ]

    def run_one(idx: int):
        q = queries[idx]
        if strategy.needs_bitmap:
            bitmap = (
                pre_bitmaps[idx]
                if pre_bitmaps is not None
                else filter_map(inverted, q.labels, q.constraint)
            )
        else:
            bitmap = None
        return strategy.search(q, knob, bitmap=bitmap)

    chunks = np.array_split(np.arange(len(queries)), max(threads, 1))

    def run_chunk(chunk) -> list:
        return [run_one(int(i)) for i in chunk]

    points = []
    params_blob = json.dumps(strategy.params, sort_keys=True)
    pid = param_id_for(strategy.params)
    first = True
    for knob in sweep:
        if first and warmup > 0:
            for i in range(min(warmup, len(queries))):
                run_one(i)
        first = False
        start = time.perf_counter()
        if threads <= 1:
            results = [run_one(i) for i in range(len(queries))]
        else:
            results = []
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for part in pool.map(run_chunk, chunks):
                    results.extend(part)
        elapsed = max(time.perf_counter() - start, 1e-9)
        recalls = [
            recall_at_k(ids.tolist(), truths[i], k) for i, ids in enumerate(results)
        ]
        points.append(
            RunPoint(
                dataset=dataset_id,
                algorithm=strategy.algorithm,
                scenario=workload.scenario.value,
                param_id=pid,
                params=params_blob,
                knob=int(knob),
                k=k,
                threads=threads,
                recall=float(np.mean(recalls)),
                qps=len(queries) / elapsed,
            )
        )
    return points


def write_csv(path, points: list[RunPoint], append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(CSV_HEADER)
        for p in points:
            writer.writerow(p.row())


def read_csv(path) -> list[RunPoint]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing CSV columns {sorted(missing)}")
        return [RunPoint.from_row(row) for row in reader]


def pareto_frontier(points: list[RunPoint]) -> list[RunPoint]:
    """Maximal non-dominated subset under (recall up, qps up).

    A point is dominated by any other with (>= recall, > qps) or
    (> recall, >= qps); exact duplicates co-survive. Output is ordered by
    ascending recall (stable).
    """
    if not points:
        return []
    order = sorted(range(len(points)), key=lambda i: (-points[i].recall, -points[i].qps))
    survivors: list[int] = []
    best_above = -np.inf  # max qps among strictly higher recall
    i = 0
    while i < len(order):
        j = i
        r = points[order[i]].recall
        while j < len(order) and points[order[j]].recall == r:
            j += 1
        group = order[i:j]
        group_max = max(points[g].qps for g in group)
        if group_max > best_above:
            survivors.extend(g for g in group if points[g].qps == group_max)
        best_above = max(best_above, group_max)
        i = j
    survivors.sort(key=lambda g: (points[g].recall, points[g].qps, g))
    return [points[g] for g in survivors]
