"""CSV schemas shared with the measurement harness.

This package deliberately never imports the search toolkit; these column
contracts are the whole interface.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

RUN_COLUMNS = [
    "dataset", "algorithm", "scenario", "param_id", "params",
    "knob", "k", "threads", "recall", "qps",
]

BUILD_COLUMNS = ["algorithm", "param_id", "params", "build_seconds", "index_bytes"]


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class RunRow:
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


@dataclass(frozen=True)
class BuildRow:
    algorithm: str
    param_id: str
    params: str
    build_seconds: float
    index_bytes: float


def read_run_csv(path) -> list[RunRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RUN_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(f"{path}: missing run columns {sorted(missing)}")
        for raw in reader:
            rows.append(
                RunRow(
                    dataset=raw["dataset"], algorithm=raw["algorithm"],
                    scenario=raw["scenario"], param_id=raw["param_id"],
                    params=raw["params"], knob=int(raw["knob"]), k=int(raw["k"]),
                    threads=int(raw["threads"]), recall=float(raw["recall"]),
                    qps=float(raw["qps"]),
                )
            )
    return rows


def read_build_csv(path) -> list[BuildRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(BUILD_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(f"{path}: missing build-log columns {sorted(missing)}")
        for raw in reader:
            rows.append(
                BuildRow(
                    algorithm=raw["algorithm"], param_id=raw["param_id"],
                    params=raw["params"],
                    build_seconds=float(raw["build_seconds"]),
                    index_bytes=float(raw["index_bytes"]),
                )
            )
    return rows


def read_many(paths) -> list[RunRow]:
    rows: list[RunRow] = []
    for path in paths:
        rows.extend(read_run_csv(Path(path)))
    return rows


def group_rows(rows, keys: tuple[str, ...]) -> dict[tuple, list]:
    groups: dict[tuple, list] = {}
    for row in rows:
        groups.setdefault(tuple(getattr(row, k) for k in keys), []).append(row)
    return groups
