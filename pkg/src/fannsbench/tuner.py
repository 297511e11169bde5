"""Subspace-partitioned parameter search with QPS interpolation at recall targets.

The parameter space is a grid over build-time parameters plus one
search-knob sweep. Build combinations are split into contiguous
subspaces; each configuration is evaluated on a sampled dataset across
every scenario, curves are averaged pointwise, QPS is interpolated at the
fixed recall targets, and the best rank-sum configuration represents its
subspace.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import DistanceMetric
from .dataset import Dataset

DEFAULT_TARGETS = (0.8, 0.9, 0.95)


@dataclass
class ParamSpace:
    """Discrete grids: build-time axes (ordered) plus the search sweep."""

    build_grids: dict[str, list]
    sweep: list[int]

    def __post_init__(self):
        for name, grid in self.build_grids.items():
            if not grid:
                raise ValueError(f"empty grid for parameter {name!r}")
        if not self.sweep:
            raise ValueError("empty search sweep")

    @property
    def build_axes(self) -> list[str]:
        return list(self.build_grids)

    def build_combos(self) -> list[dict]:
        axes = self.build_axes
        return [
            dict(zip(axes, combo))
            for combo in itertools.product(*(self.build_grids[a] for a in axes))
        ]

    @property
    def cartesian_size(self) -> int:
        size = len(self.sweep)
        for grid in self.build_grids.values():
            size *= len(grid)
        return size


@dataclass
class Subspace:
    index: int
    configs: list[dict]


def partition_space(space: ParamSpace, n_sub: int) -> list[Subspace]:
    """Split the build-combo sequence into contiguous blocks.

    Search-time parameters stay whole within each block. When n_sub
    exceeds the number of distinct build combinations it is clamped with
    a warning.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    combos = space.build_combos()
    if n_sub > len(combos):
        warnings.warn(
            f"n_sub={n_sub} exceeds {len(combos)} build combinations; clamping"
        )
        n_sub = len(combos)
    bounds = np.linspace(0, len(combos), n_sub + 1).astype(int)
    return [
        Subspace(index=i, configs=combos[bounds[i] : bounds[i + 1]])
        for i in range(n_sub)
    ]


@dataclass
class ConfigEvaluation:
    config: dict
    curves: dict[str, list[tuple[float, float]]]  # scenario -> [(recall, qps)]
    averaged: list[tuple[float, float]]
    qps_at_targets: tuple[float, ...]
    rank: int | None = None
    valid: bool = True
    error: str | None = None


def average_curves(curves: list[list[tuple[float, float]]]) -> list[tuple[float, float]]:
    """Pointwise mean of per-scenario sweeps (same knot count each)."""
    if not curves:
        return []
    length = min(len(c) for c in curves)
    out = []
    for t in range(length):
        recall = float(np.mean([c[t][0] for c in curves]))
        qps = float(np.mean([c[t][1] for c in curves]))
        out.append((recall, qps))
    return out


def interpolate_qps(
    curve: list[tuple[float, float]], targets: tuple[float, ...] = DEFAULT_TARGETS
) -> tuple[float, ...]:
    """Linear interpolation of QPS as a function of recall.

    Targets above the best achieved recall score 0 (unreachable); targets
    below the worst achieved recall clamp to the lowest-recall point.
    """
    if not curve:
        raise ValueError("cannot interpolate an empty curve")
    pts = sorted(curve)
    recalls = np.array([p[0] for p in pts])
    qpss = np.array([p[1] for p in pts])
    out = []
    for target in targets:
        if target > recalls[-1]:
            out.append(0.0)
            continue
        if target <= recalls[0]:
            out.append(float(qpss[0]))
            continue
        j = int(np.searchsorted(recalls, target, side="left"))
        r0, r1 = recalls[j - 1], recalls[j]
        q0, q1 = qpss[j - 1], qpss[j]
        if r1 == r0:
            out.append(float(q1))
        else:
            frac = (target - r0) / (r1 - r0)
            out.append(float(q0 + frac * (q1 - q0)))
    return tuple(out)


def rank_and_select(evaluations: list[ConfigEvaluation]) -> ConfigEvaluation | None:
    """Sum per-target ranks (1 = best QPS); lowest rank sum wins.

    Ties break toward higher QPS at the highest target, then toward the
    lexicographically smallest configuration. Invalid evaluations rank
    worst; a fully invalid subspace yields None.
    """
    valid = [e for e in evaluations if e.valid]
    if not valid:
        warnings.warn("subspace skipped: every configuration failed")
        return None
    n_targets = len(valid[0].qps_at_targets)
    rank_sum = {id(e): 0 for e in valid}
    for t in range(n_targets):
        ordered = sorted(valid, key=lambda e: -e.qps_at_targets[t])
        r = 0
        prev = None
        for pos, e in enumerate(ordered):
            if prev is None or e.qps_at_targets[t] != prev:
                r = pos + 1
                prev = e.qps_at_targets[t]
            rank_sum[id(e)] += r
    for e in valid:
        e.rank = rank_sum[id(e)]
    best = min(
        valid,
        key=lambda e: (
            e.rank,
            -e.qps_at_targets[-1],
            json.dumps(e.config, sort_keys=True),
        ),
    )
    return best


def evaluate_config(
    algorithm: str,
    config: dict,
    sampled: Dataset,
    workloads: dict[str, object],
    sweep: list[int],
    metric: DistanceMetric,
    threads: int = 1,
    seed: int = 0,
    targets: tuple[float, ...] = DEFAULT_TARGETS,
) -> ConfigEvaluation:
    """Build one small index and sweep it across every scenario workload."""
    from .bench import run_workload
    from .strategies import build_strategy

    try:
        strategy = build_strategy(algorithm, sampled, metric, config, seed=seed)
    except Exception as exc:  # a failed build marks the config invalid
        return ConfigEvaluation(
            config=config, curves={}, averaged=[], qps_at_targets=tuple(0.0 for _ in targets),
            valid=False, error=str(exc),
        )
    curves: dict[str, list[tuple[float, float]]] = {}
    for name, workload in workloads.items():
        points = run_workload(strategy, workload, sweep, threads=threads, warmup=0)
        curves[name] = [(p.recall, p.qps) for p in points]
    averaged = average_curves(list(curves.values()))
    qps_at = interpolate_qps(averaged, targets)
    return ConfigEvaluation(config=config, curves=curves, averaged=averaged, qps_at_targets=qps_at)


@dataclass
class TuningReport:
    algorithm: str
    targets: tuple[float, ...]
    subspaces: list[dict] = field(default_factory=list)

    def add(self, subspace: Subspace, evaluations: list[ConfigEvaluation], best):
        self.subspaces.append(
            {
                "subspace": subspace.index,
                "evaluations": [
                    {
                        "config": e.config,
                        "qps_at_targets": list(e.qps_at_targets),
                        "rank": e.rank,
                        "valid": e.valid,
                        "error": e.error,
                    }
                    for e in evaluations
                ],
                "selected": None if best is None else best.config,
            }
        )

    def selected_configs(self) -> list[dict]:
        return [s["selected"] for s in self.subspaces if s["selected"] is not None]

    def to_json(self) -> str:
        return json.dumps(
            {
                "algorithm": self.algorithm,
                "targets": list(self.targets),
                "subspaces": self.subspaces,
            },
            indent=2,
            sort_keys=True,
        )


def tune(
    algorithm: str,
    space: ParamSpace,
    dataset: Dataset,
    workload_builder,
    metric: DistanceMetric,
    n_sub: int | None = None,
    sample_fraction: float = 0.1,
    sample_floor: int = 5000,
    threads: int = 1,
    seed: int = 0,
    targets: tuple[float, ...] = DEFAULT_TARGETS,
) -> TuningReport:
    """Full tuning pass: sample, partition, evaluate, select representatives.

    `workload_builder(sampled_dataset)` must return {scenario_name:
    Workload} regenerated against the sampled records.
    """
    combos = space.build_combos()
    if n_sub is None:
        n_sub = min(len(combos), 8)
    rng = np.random.Generator(np.random.PCG64(seed))
    sample_size = min(dataset.n, max(int(dataset.n * sample_fraction), sample_floor))
    sample_ids = np.sort(rng.choice(dataset.n, size=sample_size, replace=False))
    sampled = dataset.subset(sample_ids)
    workloads = workload_builder(sampled)

    report = TuningReport(algorithm=algorithm, targets=targets)
    for subspace in partition_space(space, n_sub):
        evaluations = [
            evaluate_config(
                algorithm, config, sampled, workloads, space.sweep, metric,
                threads=threads, seed=seed, targets=targets,
            )
            for config in subspace.configs
        ]
        best = rank_and_select(evaluations)
        report.add(subspace, evaluations, best)
    return report


DEFAULT_SPACES: dict[str, ParamSpace] = {
    "brute-force": ParamSpace(build_grids={"_": [0]}, sweep=[0]),
    "post-hnsw": ParamSpace(
        build_grids={"m": [8, 16, 32], "ef_construction": [100, 200]},
        sweep=[10, 20, 40, 80, 160, 320],
    ),
    "post-ivfpq": ParamSpace(
        build_grids={"nlist": [16, 64, 256], "pq_m": [4, 8]},
        sweep=[1, 2, 4, 8, 16, 32],
    ),
    "acorn-gamma": ParamSpace(
        build_grids={"gamma": [2, 4, 8], "m": [8, 16]},
        sweep=[10, 20, 40, 80, 160, 320],
    ),
    "acorn-1": ParamSpace(
        build_grids={"m": [8, 16, 32], "ef_construction": [100, 200]},
        sweep=[10, 20, 40, 80, 160, 320],
    ),
    "ung": ParamSpace(
        build_grids={"intra_degree": [8, 16, 32], "cross_edges": [3, 6]},
        sweep=[10, 20, 40, 80, 160, 320],
    ),
    "filtered-vamana": ParamSpace(
        build_grids={"r": [16, 32, 64], "alpha": [1.0, 1.2]},
        sweep=[10, 20, 40, 80, 160, 320],
    ),
    "stitched-vamana": ParamSpace(
        build_grids={"r_small": [16, 32], "r_stitched": [32, 64], "alpha": [1.0, 1.2]},
        sweep=[10, 20, 40, 80, 160, 320],
    ),
    "nhq": ParamSpace(
        build_grids={
            "k_graph": [10, 20, 40],
            "iterations": [5, 10],
            "diversify_degree": [4, 8],
        },
        sweep=[10, 20, 40, 80, 160, 320],
    ),
    "caps": ParamSpace(
        build_grids={"k_c": [8, 16, 32], "h": [4, 8, 16]},
        sweep=[1, 2, 4, 8, 16, 32],
    ),
}
