"""
Decomposition quality on a benchmark grid
=========================================

The decomposition trades optimality for scale.  This experiment
measures the price: for each (machines, exploits) cell it plans the same
scenario twice -- once with the decomposition and once with an exact
solve of the full cross-product model -- and simulates both policies to
compare the collected reward.
"""

import time

from pentestplan.bench import (
    BenchmarkParams,
    experiment_csv,
    generate_benchmark,
    run_experiment,
)
from pentestplan.planner import plan_attack

# Desk-scale grid.  The exact global baseline blows up combinatorially,
# so it is only feasible for a handful of machines.
cells = run_experiment(
    "both",
    machine_counts=range(1, 5),
    exploit_counts=range(1, 5),
    repetitions=500,
    seed=0,
)
print(experiment_csv(cells))

gaps = [c.gap_percent for c in cells]
print(f"mean gap {sum(gaps) / len(gaps):.2f}%  max gap {max(gaps):.2f}%")

# The decomposition alone scales far beyond the baseline.  One hundred
# machines and one hundred exploits plan in seconds.
spec = generate_benchmark(
    BenchmarkParams(machines=100, exploits=100, elapsed_days=50, seed=0)
)
started = time.perf_counter()
plan = plan_attack(spec)
elapsed = time.perf_counter() - started
print(f"\n100 machines / 100 exploits: value {plan.value:.1f} "
      f"planned in {elapsed:.1f}s")
