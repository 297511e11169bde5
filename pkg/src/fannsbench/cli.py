"""Command-line harness: build indexes, generate workloads, measure, report.

Subcommands: gen (datasets/workloads), gt (refresh ground truth), build,
search (knob sweep -> CSV), tune (subspace parameter search), pareto
(CSV -> non-dominated CSV). Exit status 0 on success, 2 on usage errors,
1 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bench import pareto_frontier, read_csv, run_workload, write_csv
from .core import DistanceMetric, FilterConstraint
from .dataset import Dataset
from .strategies import ALGORITHMS, build_strategy, load_index, save_index
from .tuner import DEFAULT_SPACES, ParamSpace, tune
from . import workload as wl

_METRICS = {m.value: m for m in DistanceMetric}
_SCENARIOS = {c.value: c for c in FilterConstraint}


def _parse_params(text: str | None) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = _parse_value(value.strip())
    return out


def _parse_value(value: str):
    lowered = value.lower()
    if lowered in ("none", "null"):
        return None
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def _parse_sweep(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fanns",
        description="Filtered ANN search benchmark harness",
    )
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("FANNS_THREADS", "16")))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--metric", choices=sorted(_METRICS), default="sqeuclidean")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate datasets and workloads")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--synthetic-fixed", metavar="LxV",
                       help="fixed-length synthetic labels, e.g. 4x3")
    p_gen.add_argument("--n", type=int, default=5000)
    p_gen.add_argument("--dim", type=int, default=32)
    p_gen.add_argument("--queries", type=int, default=200)
    p_gen.add_argument("--dataset", help="existing dataset directory to stratify")
    p_gen.add_argument("--scenario", choices=sorted(_SCENARIOS))
    p_gen.add_argument("--stratify", choices=["length", "selectivity"])
    p_gen.add_argument("--per-group", type=int, default=100)
    p_gen.add_argument("--k", type=int, default=10)
    p_gen.add_argument("--k-max", type=int, default=100)
    p_gen.add_argument("--query-fvecs", help="external query embeddings")
    p_gen.add_argument("--no-guarantee", action="store_true",
                       help="keep queries with fewer than k-max matches")
    p_gen.add_argument("--import-vectors", help="raw fvecs to ingest as a dataset")
    p_gen.add_argument("--import-labels", help="raw labels text (ids remapped densely)")

    p_gt = sub.add_parser("gt", help="recompute a workload's ground truth")
    p_gt.add_argument("--dataset", required=True)
    p_gt.add_argument("--workload", required=True)
    p_gt.add_argument("--k-max", type=int, default=None)

    p_build = sub.add_parser("build", help="build one index file")
    p_build.add_argument("--dataset", required=True)
    p_build.add_argument("--algorithm", required=True, choices=sorted(ALGORITHMS))
    p_build.add_argument("--params", default="")
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--log", help="append algorithm,param_id,params,build_seconds,index_bytes")

    p_search = sub.add_parser("search", help="run a workload sweep, emit CSV")
    p_search.add_argument("--index", required=True)
    p_search.add_argument("--workload", required=True)
    p_search.add_argument("--sweep", required=True, help="comma-separated knob values")
    p_search.add_argument("--out", required=True)
    p_search.add_argument("--dataset-id", default="dataset")
    p_search.add_argument("--append", action="store_true")
    p_search.add_argument("--exclude-filter-time", action="store_true")
    p_search.add_argument("--warmup", type=int, default=100)
    p_search.add_argument("--k", type=int, default=None,
                          help="override the workload's top-k (ground truth is k_max deep)")

    p_tune = sub.add_parser("tune", help="subspace parameter search")
    p_tune.add_argument("--dataset", required=True)
    p_tune.add_argument("--algorithm", required=True, choices=sorted(ALGORITHMS))
    p_tune.add_argument("--scenarios", default="containment,equality,overlap")
    p_tune.add_argument("--out", required=True)
    p_tune.add_argument("--n-sub", type=int, default=None)
    p_tune.add_argument("--sample-fraction", type=float, default=0.1)
    p_tune.add_argument("--sample-floor", type=int, default=5000)
    p_tune.add_argument("--queries", type=int, default=100)
    p_tune.add_argument("--space", default="",
                        help="override grids, e.g. m=8|16;ef_construction=100|200")

    p_pareto = sub.add_parser("pareto", help="extract non-dominated rows")
    p_pareto.add_argument("--in", dest="input", required=True)
    p_pareto.add_argument("--out", required=True)
    p_pareto.add_argument("--group-by", default="dataset,scenario,algorithm")

    return parser


def cmd_gen(args, metric: DistanceMetric) -> int:
    out = Path(args.out)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    if args.import_vectors or args.import_labels:
        if not (args.import_vectors and args.import_labels):
            print("gen --import-vectors and --import-labels go together", file=sys.stderr)
            return 2
        dataset = wl.import_dataset(args.import_vectors, args.import_labels, out / "base")
        print(f"dataset: {out/'base'} ({dataset.n} records, "
              f"{dataset.label_universe_size} dense labels)")
        return 0
    if args.synthetic_fixed:
        length, values = (int(x) for x in args.synthetic_fixed.lower().split("x"))
        total = args.n + args.queries
        vectors = rng.standard_normal((total, args.dim)).astype(np.float32)
        labvec = wl.gen_fixed_length_labels(total, length, values, seed=args.seed + 1)
        base = Dataset(
            vectors=vectors[: args.n],
            label_sets=wl.encode_fixed_length(labvec[: args.n], values),
            label_vectors=labvec[: args.n],
            values_per_position=values,
        )
        wl.save_dataset(out / "base", base)
        seeds = [
            wl.QuerySeed(labels=ls, stratum="fixed")
            for ls in wl.encode_fixed_length(labvec[args.n :], values)
        ]
        workload = wl.attach_ground_truth(
            vectors[args.n :], seeds, base, FilterConstraint.FIXED_LENGTH_EQUALITY,
            k=args.k, k_max=args.k_max, metric=metric,
            guarantee=not args.no_guarantee, seed=args.seed,
        )
        wdir = out / "workloads" / "fixed_length_equality"
        wl.save_workload(wdir, workload)
        print(f"dataset: {out/'base'} ({base.n} records, {length}x{values} labels)")
        print(f"workload: {wdir} ({len(workload)} queries)")
        return 0

    if not args.dataset or not args.scenario or not args.stratify:
        print("gen needs either --synthetic-fixed or --dataset/--scenario/--stratify",
              file=sys.stderr)
        return 2
    dataset = wl.load_dataset(args.dataset)
    scenario = _SCENARIOS[args.scenario]
    if args.query_fvecs:
        query_embs = wl.load_fvecs(args.query_fvecs)
        base = dataset
    else:
        holdout = rng.choice(dataset.n, size=min(args.queries * 4, dataset.n // 4),
                             replace=False)
        keep = np.setdiff1d(np.arange(dataset.n), holdout)
        base = dataset.subset(keep)
        query_embs = dataset.vectors[holdout]
        wl.save_dataset(out / "base", base)
    if args.stratify == "length":
        buckets = wl.stratify_by_length(
            base.label_sets, scenario, per_group=args.per_group, seed=args.seed
        )
    else:
        buckets = wl.stratify_by_selectivity(
            base.label_sets, scenario, per_group=args.per_group, seed=args.seed
        )
    emb_pool = query_embs
    for bucket in buckets:
        if not bucket:
            continue
        stratum = bucket[0].stratum
        take = rng.integers(0, emb_pool.shape[0], size=len(bucket))
        workload = wl.attach_ground_truth(
            emb_pool[take], bucket, base, scenario, k=args.k, k_max=args.k_max,
            metric=metric, guarantee=not args.no_guarantee, seed=args.seed,
        )
        wdir = out / "workloads" / f"{scenario.value}_{stratum}"
        wl.save_workload(wdir, workload)
        print(f"workload: {wdir} ({len(workload)} queries)")
    return 0


def cmd_gt(args, metric: DistanceMetric) -> int:
    dataset = wl.load_dataset(args.dataset)
    workload = wl.load_workload(args.workload)
    k_max = args.k_max or workload.k_max
    seeds = [wl.QuerySeed(labels=q.labels, stratum=s or "")
             for q, s in zip(workload.queries,
                             workload.strata or [""] * len(workload.queries))]
    refreshed = wl.attach_ground_truth(
        np.stack([q.embedding for q in workload.queries]), seeds, dataset,
        workload.scenario, k=workload.k, k_max=k_max, metric=metric, guarantee=True,
    )
    wl.save_workload(args.workload, refreshed)
    print(f"ground truth refreshed: {len(refreshed)} queries at k_max={k_max}")
    return 0


def cmd_build(args, metric: DistanceMetric) -> int:
    import csv
    import time

    dataset = wl.load_dataset(args.dataset)
    params = _parse_params(args.params)
    start = time.perf_counter()
    strategy = build_strategy(args.algorithm, dataset, metric, params, seed=args.seed)
    build_seconds = time.perf_counter() - start
    save_index(args.out, strategy)
    print(f"built {args.algorithm} over {dataset.n} records -> {args.out}")
    if args.log:
        from .bench import param_id_for

        log_path = Path(args.log)
        fresh = not log_path.exists()
        with open(log_path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if fresh:
                writer.writerow(
                    ["algorithm", "param_id", "params", "build_seconds", "index_bytes"]
                )
            writer.writerow([
                args.algorithm,
                param_id_for(strategy.params),
                json.dumps(strategy.params, sort_keys=True),
                f"{build_seconds:.4f}",
                os.path.getsize(args.out),
            ])
    return 0


def cmd_search(args, metric: DistanceMetric) -> int:
    strategy = load_index(args.index)
    workload = wl.load_workload(args.workload)
    points = run_workload(
        strategy, workload, _parse_sweep(args.sweep), threads=args.threads,
        warmup=args.warmup, include_filter_time=not args.exclude_filter_time,
        dataset_id=args.dataset_id, k=args.k,
    )
    write_csv(args.out, points, append=args.append)
    for p in points:
        print(f"knob={p.knob} recall@{p.k}={p.recall:.4f} qps={p.qps:.1f}")
    return 0


def _parse_space(text: str, default: ParamSpace) -> ParamSpace:
    if not text:
        return default
    grids = {}
    for axis in text.split(";"):
        if not axis.strip():
            continue
        name, values = axis.split("=", 1)
        grids[name.strip()] = [_parse_value(v) for v in values.split("|")]
    return ParamSpace(build_grids=grids, sweep=default.sweep)


def cmd_tune(args, metric: DistanceMetric) -> int:
    dataset = wl.load_dataset(args.dataset)
    scenarios = [_SCENARIOS[s.strip()] for s in args.scenarios.split(",") if s.strip()]
    space = _parse_space(args.space, DEFAULT_SPACES[args.algorithm])

    def workload_builder(sampled: Dataset):
        rng = np.random.Generator(np.random.PCG64(args.seed + 7))
        out = {}
        for scenario in scenarios:
            labels = wl.sample_query_labels(sampled.label_sets, args.queries, args.seed)
            seeds = [wl.QuerySeed(labels=ls, stratum="tune") for ls in labels]
            take = rng.integers(0, sampled.n, size=len(seeds))
            out[scenario.value] = wl.attach_ground_truth(
                sampled.vectors[take], seeds, sampled, scenario,
                k=10, k_max=10, metric=metric, guarantee=True, seed=args.seed,
            )
        return out

    report = tune(
        args.algorithm, space, dataset, workload_builder, metric,
        n_sub=args.n_sub, sample_fraction=args.sample_fraction,
        sample_floor=args.sample_floor, threads=args.threads, seed=args.seed,
    )
    Path(args.out).write_text(report.to_json())
    selected = report.selected_configs()
    print(f"tuned {args.algorithm}: {len(selected)} representative configs -> {args.out}")
    for config in selected:
        print(f"  {json.dumps(config, sort_keys=True)}")
    return 0


def cmd_pareto(args, metric: DistanceMetric) -> int:
    points = read_csv(args.input)
    keys = [k.strip() for k in args.group_by.split(",") if k.strip()]
    groups: dict[tuple, list] = {}
    for p in points:
        groups.setdefault(tuple(getattr(p, k) for k in keys), []).append(p)
    survivors = []
    for group in groups.values():
        survivors.extend(pareto_frontier(group))
    write_csv(args.out, survivors)
    print(f"{len(survivors)} of {len(points)} rows on the frontier -> {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    metric = _METRICS[args.metric]
    handlers = {
        "gen": cmd_gen,
        "gt": cmd_gt,
        "build": cmd_build,
        "search": cmd_search,
        "tune": cmd_tune,
        "pareto": cmd_pareto,
    }
    try:
        return handlers[args.command](args, metric)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
