"""Harness behavior: timing rows, CSV schema, Pareto extraction."""

import numpy as np
import pytest

from fannsbench.bench import (
    CSV_HEADER,
    RunPoint,
    pareto_frontier,
    read_csv,
    run_workload,
    write_csv,
)
from fannsbench.core import FilterConstraint
from fannsbench.strategies import build_brute_force
from fannsbench.workload import QuerySeed, attach_ground_truth

from conftest import METRIC, random_labeled_dataset

C = FilterConstraint


def make_workload(ds, count=20, k=10, k_max=20):
    seeds = [QuerySeed(labels=ds.label_sets[i], stratum="s") for i in range(count)]
    return attach_ground_truth(
        ds.vectors[:count] + 0.01, seeds, ds, C.OVERLAP, k=k, k_max=k_max, metric=METRIC
    )


@pytest.fixture(scope="module")
def ds():
    return random_labeled_dataset(500, 8, seed=50, universe=4)


@pytest.fixture(scope="module")
def workload(ds):
    return make_workload(ds)


class TestRunWorkload:
    def test_oracle_strategy_recall_one(self, ds, workload):
        oracle = build_brute_force(ds, METRIC)
        points = run_workload(oracle, workload, sweep=[0, 1], threads=2, warmup=5)
        assert all(p.recall == 1.0 for p in points)
        assert all(p.qps > 0 for p in points)

    def test_qps_is_count_over_elapsed(self, ds, workload):
        oracle = build_brute_force(ds, METRIC)
        points = run_workload(oracle, workload, sweep=[0], threads=1, warmup=0)
        # 20 queries; qps must equal count / elapsed, so elapsed = count / qps
        assert points[0].qps == pytest.approx(len(workload) / (len(workload) / points[0].qps))

    def test_rows_round_trip_through_csv(self, ds, workload, tmp_path):
        oracle = build_brute_force(ds, METRIC)
        points = run_workload(oracle, workload, sweep=[0, 1, 2], threads=2, warmup=0)
        path = tmp_path / "runs.csv"
        write_csv(path, points)
        back = read_csv(path)
        assert [p.row()[:8] for p in back] == [p.row()[:8] for p in points]
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_HEADER)

    def test_scenario_mismatch_rejected(self, ds, workload):
        from fannsbench.strategies import CapsParams, caps_build
        from conftest import fixed_length_dataset

        fl = fixed_length_dataset(300, 8, seed=51)
        caps = caps_build(fl, CapsParams(k_c=4, h=2), METRIC)
        with pytest.raises(ValueError):
            run_workload(caps, workload, sweep=[1])

    def test_thread_counts_do_not_change_recall(self, ds, workload):
        oracle = build_brute_force(ds, METRIC)
        a = run_workload(oracle, workload, sweep=[0], threads=1, warmup=0)
        b = run_workload(oracle, workload, sweep=[0], threads=4, warmup=0)
        assert a[0].recall == b[0].recall

    def test_filter_time_toggle_changes_timing_not_results(self, ds, workload):
        oracle = build_brute_force(ds, METRIC)
        timed = run_workload(oracle, workload, sweep=[0], threads=1, warmup=0,
                             include_filter_time=True)
        untimed = run_workload(oracle, workload, sweep=[0], threads=1, warmup=0,
                               include_filter_time=False)
        assert timed[0].recall == untimed[0].recall == 1.0

    def test_thread_scaling_recorded_not_asserted(self, ds):
        # machine-local calibration: print the 1 -> 2 thread qps ratio only
        big = make_workload(ds, count=400, k=10, k_max=10)
        oracle = build_brute_force(ds, METRIC)
        one = run_workload(oracle, big, sweep=[0], threads=1, warmup=0)
        two = run_workload(oracle, big, sweep=[0], threads=2, warmup=0)
        print(f"thread-scaling qps ratio 1->2: {two[0].qps / one[0].qps:.2f}")


def rp(recall, qps):
    return RunPoint(
        dataset="d", algorithm="a", scenario="s", param_id="p", params="{}",
        knob=1, k=10, threads=1, recall=recall, qps=qps,
    )


def brute_force_frontier(points):
    out = []
    for p in points:
        dominated = any(
            (q.recall >= p.recall and q.qps > p.qps)
            or (q.recall > p.recall and q.qps >= p.qps)
            for q in points
        )
        if not dominated:
            out.append(p)
    out.sort(key=lambda p: (p.recall, p.qps))
    return out


class TestParetoFrontier:
    def test_single_point(self):
        p = rp(0.5, 100)
        assert pareto_frontier([p]) == [p]

    def test_strict_dominance_removes(self):
        a, b = rp(0.9, 100), rp(0.8, 50)
        assert pareto_frontier([a, b]) == [a]

    def test_duplicates_co_survive(self):
        a, b = rp(0.9, 100), rp(0.9, 100)
        assert len(pareto_frontier([a, b])) == 2

    def test_matches_brute_force_on_random_clouds(self):
        rng = np.random.Generator(np.random.PCG64(4))
        for _ in range(60):
            count = int(rng.integers(1, 120))
            pts = [
                rp(float(rng.uniform(0, 1)), float(rng.choice([10, 50, 100, 500, 1000])))
                for _ in range(count)
            ]
            got = pareto_frontier(pts)
            want = brute_force_frontier(pts)
            assert [(p.recall, p.qps) for p in got] == [(p.recall, p.qps) for p in want]

    def test_no_dominated_pair_in_output(self):
        rng = np.random.Generator(np.random.PCG64(5))
        pts = [rp(float(rng.uniform(0, 1)), float(rng.uniform(1, 1000))) for _ in range(200)]
        front = pareto_frontier(pts)
        for p in front:
            for q in front:
                assert not (
                    (q.recall >= p.recall and q.qps > p.qps)
                    or (q.recall > p.recall and q.qps >= p.qps)
                )

    def test_sorted_by_recall_ascending(self):
        rng = np.random.Generator(np.random.PCG64(6))
        pts = [rp(float(rng.uniform(0, 1)), float(rng.uniform(1, 1000))) for _ in range(100)]
        front = pareto_frontier(pts)
        recalls = [p.recall for p in front]
        assert recalls == sorted(recalls)
