"""Small constructive helpers shared by tests (no solver involved)."""

from __future__ import annotations

import itertools
import math

from robust_binloc.deterministic import Solution, evaluate


def cheapest_bins(instance, needs):
    """Cheapest per-fraction bin counts covering needs[m] under the shared area budget, or None."""
    bins = instance.bin_types
    ranges = [range(int(math.floor(instance.max_area / b.area + 1e-9)) + 1) for b in bins]
    per_m = list(itertools.product(*ranges))
    best, best_cost = None, math.inf
    for pick in itertools.product(per_m, repeat=len(needs)):
        area = sum(n * b.area for counts in pick for n, b in zip(counts, bins))
        if area > instance.max_area + 1e-9:
            continue
        if any(sum(n * b.capacity for n, b in zip(counts, bins)) < need - 1e-12 for counts, need in zip(pick, needs)):
            continue
        cost = sum(n * b.unit_cost for counts in pick for n, b in zip(counts, bins))
        if cost < best_cost:
            best, best_cost = pick, cost
    return best


def self_served(instance, acc=None, load_factor=1.0):
    """Every point open and serving itself at the given accumulation (default: max)."""
    n, M = instance.n_points, len(instance.fractions)
    acc = acc or int(instance.accumulation.max())
    bins = {}
    for i in range(n):
        pick = cheapest_bins(instance, [acc * instance.rates[i, m] * load_factor for m in range(M)])
        if pick is None:
            return None
        for m, counts in enumerate(pick):
            for h, k in enumerate(counts):
                if k:
                    bins[(i, m, h)] = k
    sol = Solution({i: i for i in range(n)}, frozenset(range(n)), {(i, m): acc for i in range(n) for m in range(M)},
                   bins)
    sol.cost, sol.frequency_objective, _ = evaluate(sol, instance)
    return sol
