"""
Optimizer comparison on a replayed dataset
==========================================

With the space exhaustively measured, optimizers can be raced against
each other over many seeded runs at lookup cost. Two curves summarize a
race: how often a strategy has already evaluated the true optimum after
n samples, and the 99th-percentile utility gap to that optimum.
"""

import time

from confopt import (
    build_backend,
    bundled_path,
    collect_exhaustive,
    compare,
    get_utility,
    parse_config,
)

config = parse_config(bundled_path("toystore-reduced.yaml"))
dataset = collect_exhaustive(
    config.space,
    build_backend(config),
    get_utility(config.util_func),
    config.slo,
    config.workload,
    weights=config.cost_weights,
    cost_space=config.cost_reference,
)
print(f"dataset: {len(dataset.rows)} configurations, "
      f"optimum utility {dataset.optimum.utility:.6f}")

names = ["random", "randominc", "bestconfig", "bayesian-ei"]
start = time.perf_counter()
report = compare(dataset, names, runs=200, budget=100, base_seed=0)
print(f"200 runs x {len(names)} optimizers in "
      f"{time.perf_counter() - start:.1f}s\n")

print(f"{'optimizer':<14} {'found optimum':>14} {'q99 distance':>13}")
for name in names:
    curve = report.optimizers[name]
    print(f"{name:<14} {curve.fraction_found_optimal[-1]:>14.3f} "
          f"{curve.distance_q99[-1]:>13.4f}")

# The fraction curve shows how the gap opens over the budget.
bo = report.optimizers["bayesian-ei"].fraction_found_optimal
rnd = report.optimizers["random"].fraction_found_optimal
print("\nfraction of runs that have seen the optimum:")
print(f"{'n':>5} {'random':>8} {'bayesian-ei':>12}")
for n in (12, 24, 48, 100):
    print(f"{n:>5} {rnd[n - 1]:>8.3f} {bo[n - 1]:>12.3f}")
