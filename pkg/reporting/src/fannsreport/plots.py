"""Figure rendering: QPS-recall panels and index time/size scatters."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .data import RunRow, group_rows, read_build_csv, read_many
from .pareto import pareto_frontier

FRONTIER_GROUP_KEYS = ("dataset", "scenario", "algorithm")


@dataclass
class PlotSpec:
    inputs: list[str]
    out_dir: str
    group_by: tuple[str, ...] = ("dataset", "scenario")
    fmt: str = "png"
    dpi: int = 120

    def __post_init__(self):
        for key in self.group_by:
            if key not in RunRow.__dataclass_fields__:
                raise ValueError(f"unknown grouping key {key!r}")


def _algorithm_colors(names):
    cmap = plt.get_cmap("tab10")
    return {name: cmap(i % 10) for i, name in enumerate(sorted(names))}


def render_qps_recall(spec: PlotSpec) -> list[Path]:
    """One panel per group: light per-config polylines, bold Pareto points.

    The frontier is recomputed locally per (dataset, scenario, algorithm),
    matching the harness's `pareto` subcommand row-for-row.
    """
    rows = read_many(spec.inputs)
    if not rows:
        warnings.warn("no rows in input CSV; nothing to render")
        return []
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for key, panel_rows in sorted(group_rows(rows, spec.group_by).items()):
        colors = _algorithm_colors({r.algorithm for r in panel_rows})
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        # light line per configuration, sorted by recall
        for (algo, pid), cfg_rows in sorted(
            group_rows(panel_rows, ("algorithm", "param_id")).items()
        ):
            pts = sorted(cfg_rows, key=lambda r: (r.recall, r.qps))
            ax.plot(
                [p.recall for p in pts], [p.qps for p in pts],
                color=colors[algo], alpha=0.25, linewidth=0.9, zorder=1,
            )
        # bold dark frontier per algorithm
        seen = set()
        for (ds_, sc_, algo), algo_rows in sorted(
            group_rows(panel_rows, FRONTIER_GROUP_KEYS).items()
        ):
            front = pareto_frontier(algo_rows)
            label = algo if algo not in seen else None
            seen.add(algo)
            ax.plot(
                [p.recall for p in front], [p.qps for p in front],
                color=colors[algo], linewidth=2.2, marker="o", markersize=4.5,
                zorder=3, label=label,
            )
        ax.set_xlabel("Recall@k")
        ax.set_ylabel("QPS")
        ax.set_yscale("log")
        ax.set_title(" / ".join(str(k) for k in key))
        ax.grid(True, alpha=0.2)
        ax.legend(fontsize=7, loc="lower left")
        name = "qps_recall_" + "_".join(str(k) for k in key) + f".{spec.fmt}"
        path = out_dir / name.replace("/", "-")
        fig.savefig(path, dpi=spec.dpi)
        plt.close(fig)
        written.append(path)
    return written


def min_max_normalize(values: np.ndarray) -> np.ndarray:
    """Map to [0, 1]; a degenerate (constant) column maps to 0."""
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def render_index_scatter(
    build_csv: str,
    out_dir: str,
    color_param: str | None = None,
    fmt: str = "png",
    dpi: int = 120,
) -> list[Path]:
    """Per-algorithm scatter of normalized build time vs normalized size.

    Point color encodes one designated build parameter (the first key of
    the params JSON when not specified).
    """
    rows = read_build_csv(build_csv)
    if not rows:
        warnings.warn("empty build log; nothing to render")
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for algo in sorted({r.algorithm for r in rows}):
        algo_rows = [r for r in rows if r.algorithm == algo]
        times = min_max_normalize(np.array([r.build_seconds for r in algo_rows]))
        sizes = min_max_normalize(np.array([r.index_bytes for r in algo_rows]))
        key = color_param
        params = [json.loads(r.params or "{}") for r in algo_rows]
        if key is None:
            keys = sorted({k for p in params for k in p})
            key = keys[0] if keys else None
        shades = np.array(
            [float(p.get(key, 0) or 0) if key else 0.0 for p in params]
        )
        fig, ax = plt.subplots(figsize=(4.4, 4.0))
        sc = ax.scatter(times, sizes, c=shades, cmap="viridis", s=36, edgecolors="k",
                        linewidths=0.4)
        if key:
            fig.colorbar(sc, ax=ax, label=key)
        ax.set_xlabel("normalized build time")
        ax.set_ylabel("normalized index size")
        ax.set_xlim(-0.05, 1.05)
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(algo)
        path = out / f"index_scatter_{algo}.{fmt}"
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        written.append(path)
    return written
