"""Local Pareto recomputation, matching the harness convention exactly.

A point is dominated by any other with (recall >=, qps >) or
(recall >, qps >=); exact duplicates co-survive. Output is ordered by
ascending (recall, qps, input index).
"""

from __future__ import annotations

from .data import RunRow


def pareto_frontier(rows: list[RunRow]) -> list[RunRow]:
    if not rows:
        return []
    order = sorted(range(len(rows)), key=lambda i: (-rows[i].recall, -rows[i].qps))
    survivors: list[int] = []
    best_above = float("-inf")
    i = 0
    while i < len(order):
        j = i
        recall = rows[order[i]].recall
        while j < len(order) and rows[order[j]].recall == recall:
            j += 1
        group = order[i:j]
        group_max = max(rows[g].qps for g in group)
        if group_max > best_above:
            survivors.extend(g for g in group if rows[g].qps == group_max)
            best_above = group_max
        i = j
    survivors.sort(key=lambda g: (rows[g].recall, rows[g].qps, g))
    return [rows[g] for g in survivors]
