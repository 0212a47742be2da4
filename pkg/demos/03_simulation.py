"""
Checking a plan against a simulator
===================================

Plans promise an expected value; the simulator collects it.  Ground
truth is drawn from the same beliefs the planner used, every action is
resolved deterministically against that truth, and the Monte Carlo mean
should land within sampling error of the planner's number.
"""

from pentestplan.bench import random_scenario
from pentestplan.planner import plan_attack
from pentestplan.sim import (
    format_trace,
    monte_carlo,
    rollout,
    sample_ground_truth,
    scenario_beliefs,
)

# A small random scenario shaped so that the decomposition is exact:
# one machine per subnetwork and no cycles in the subnetwork graph.
spec = random_scenario(8, singleton_tree=True)
plan = plan_attack(spec)
print(f"planned expected value: {plan.value:.4f}")

# One rollout, step by step.  Each line is (machine, action, observation,
# reward); the attacker follows the per-machine policy trees and pivots
# whenever it takes control of a new machine.
truth = sample_ground_truth(scenario_beliefs(spec), seed=11)
trace = rollout(spec, plan, truth)
print()
print(format_trace(trace, seed=11))
print(f"rollout total: {trace.total:.1f}")

# Many rollouts.  The standard error quantifies how close the empirical
# mean should be to the planner's expectation.
mean, stderr = monte_carlo(spec, plan, n=3000, seed=42)
print(f"\nMonte Carlo over 3000 rollouts: {mean:.4f} +/- {stderr:.4f}")
print(f"|mean - planned| = {abs(mean - plan.value):.4f} "
      f"({abs(mean - plan.value) / max(stderr, 1e-12):.2f} standard errors)")
