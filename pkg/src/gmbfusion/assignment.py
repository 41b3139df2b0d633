"""Ranked assignment.

``murty`` returns the k cheapest complete row-to-column assignments of a
rectangular cost matrix (rows <= columns, ``inf`` marks a forbidden pair).
The inner optimal assignment is scipy's ``linear_sum_assignment``.

``k_best_subsets`` ranks subsets of independent binary choices, which is what
LMB birth, survival thinning and multi-Bernoulli expansion need.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment


def _solve(cost):
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:  # no finite complete assignment
        return None
    total = cost[rows, cols].sum()
    if not np.isfinite(total):
        return None
    return cols, float(total)


def iter_murty(cost):
    """Yield ``(columns, total_cost)`` in ascending cost, expanding partitions lazily.

    ``columns[i]`` is the column assigned to row ``i``.
    """
    cost = np.asarray(cost, dtype=float)
    n_rows, n_cols = cost.shape
    if n_rows > n_cols:
        raise ValueError("murty needs at least as many columns as rows")
    if n_rows == 0:
        yield np.empty(0, dtype=int), 0.0
        return
    first = _solve(cost)
    if first is None:
        return
    tie = itertools.count()
    queue = [(first[1], next(tie), first[0], cost)]
    while queue:
        total, _, cols, problem = heapq.heappop(queue)
        yield cols, total
        fixed = problem.copy()
        for i in range(n_rows):
            j = cols[i]
            sub = fixed.copy()
            sub[i, j] = np.inf
            found = _solve(sub)
            if found is not None:
                heapq.heappush(queue, (found[1], next(tie), found[0], sub))
            keep = fixed[i, j]
            fixed[i, :] = np.inf
            fixed[:, j] = np.inf
            fixed[i, j] = keep


def murty(cost, k):
    """k best assignments of ``cost`` as ``[(columns, total_cost), ...]`` in ascending cost.

    Fewer than ``k`` results are returned when fewer feasible assignments exist.
    """
    if k < 1:
        return []
    return list(itertools.islice(iter_murty(cost), k))


def k_best_subsets(log_in, log_out, k=None):
    """Rank subsets of independent items by total log weight.

    Item ``i`` contributes ``log_in[i]`` when included and ``log_out[i]`` when
    excluded. Returns ``[(subset, log_weight), ...]`` with ``subset`` a sorted
    tuple of item positions, in descending weight; ``k=None`` returns every
    subset with nonzero weight.
    """
    log_in = np.asarray(log_in, dtype=float)
    log_out = np.asarray(log_out, dtype=float)
    forced_in = [i for i in range(log_in.size) if log_out[i] == -np.inf and log_in[i] > -np.inf]
    if any(log_in[i] == -np.inf and log_out[i] == -np.inf for i in range(log_in.size)):
        return []
    free = [i for i in range(log_in.size) if np.isfinite(log_in[i]) and np.isfinite(log_out[i])]
    base_in = [i for i in free if log_in[i] >= log_out[i]]
    base = float(sum(max(log_in[i], log_out[i]) for i in range(log_in.size)))
    # toggling item i away from its preferred state costs penalty[i] >= 0
    penalty = np.array([abs(log_in[i] - log_out[i]) for i in free])
    order = np.argsort(penalty, kind="stable")
    free = [free[i] for i in order]
    penalty = penalty[order]
    base_set = set(base_in) | set(forced_in)

    def subset(toggled):
        s = set(base_set)
        s.symmetric_difference_update(free[t] for t in toggled)
        return tuple(sorted(s))

    results = [(subset(()), base)]
    limit = np.inf if k is None else k
    if not free:
        return results
    queue = [(penalty[0], (0,))]
    while queue and len(results) < limit:
        cost, toggled = heapq.heappop(queue)
        results.append((subset(toggled), base - cost))
        last = toggled[-1]
        if last + 1 < len(free):
            heapq.heappush(queue, (cost + penalty[last + 1], toggled + (last + 1,)))
            heapq.heappush(queue, (cost - penalty[last] + penalty[last + 1], toggled[:-1] + (last + 1,)))
    return results
