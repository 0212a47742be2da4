"""Monte Carlo evaluation of attack policies.

Ground-truth machine configurations are sampled once per rollout from the
initial beliefs (PCG64, explicitly seeded, so traces are reproducible
across platforms) and stay fixed while the policy executes against the
deterministic action semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pomdp import (
    ConfigState,
    EXPLOIT,
    MachinePOMDP,
    OBS_NONE,
    TERMINATE,
    local_outcome,
    step,
)
from .planner import NetworkPlan
from .scenario import ScenarioSpec
from .solver import PolicyNode, obs_to_str


class SimulationError(Exception):
    pass


@dataclass(frozen=True)
class GroundTruth:
    """One sampled true configuration per machine."""

    configs: dict  # machine id -> configuration tuple (None for the foothold)
    seed: int


@dataclass
class RolloutTrace:
    steps: list = field(default_factory=list)  # (machine id, action id, obs, reward)
    total: float = 0.0
    controlled: set = field(default_factory=set)

    def record(self, machine_id, action_id, obs, reward):
        self.steps.append((machine_id, action_id, obs, reward))
        self.total += reward


def sample_ground_truth(beliefs: dict, seed: int) -> GroundTruth:
    """Independent per-machine configuration draws; reproducible given seed."""
    rng = np.random.default_rng(seed)
    configs = {}
    for machine_id in sorted(beliefs):
        belief = beliefs[machine_id]
        if belief is None:
            configs[machine_id] = None
            continue
        support = sorted(belief)
        probs = np.array([belief[c] for c in support])
        configs[machine_id] = support[rng.choice(len(support), p=probs / probs.sum())]
    return GroundTruth(configs=configs, seed=seed)


def scenario_beliefs(spec: ScenarioSpec) -> dict:
    return {
        m.id: (None if m.template is None else spec.machine_belief(m))
        for m in spec.net.machines()
    }


class _MachineState:
    def __init__(self, config):
        self.state = None if config is None else ConfigState(config)
        self.controlled = config is None  # only the foothold starts controlled
        self.attempted = False


def rollout(spec: ScenarioSpec, plan: NetworkPlan, truth: GroundTruth) -> RolloutTrace:
    """Execute a planned attack against one sampled ground truth."""
    machines = {m.id: m for m in spec.net.machines()}
    missing = set(machines) - set(truth.configs)
    if missing:
        raise SimulationError(f"ground truth missing machines: {sorted(missing)}")
    states = {mid: _MachineState(truth.configs[mid]) for mid in machines}
    states[spec.net.start_machine.id].controlled = True
    trace = RolloutTrace()
    trace.controlled.add(spec.net.start_machine.id)

    def controlled_in(subnetwork: str) -> bool:
        return any(
            states[m.id].controlled for m in spec.net.subnetworks[subnetwork]
        )

    def attack(machine_id: str, policy: PolicyNode) -> bool:
        st = states[machine_id]
        if st.controlled:
            return True
        if st.attempted:
            return False
        st.attempted = True
        node = policy
        while node.action.kind != TERMINATE:
            action = node.action
            nxt, obs, success = local_outcome(spec.model, action, st.state)
            reward = action.r_t + action.r_d
            if success:
                st.controlled = True
                trace.controlled.add(machine_id)
                reward += machines[machine_id].reward
            else:
                st.state = nxt
            trace.record(machine_id, action.id, obs, reward)
            if success:
                return True
            node = node.branches.get(obs)
            if node is None:
                raise SimulationError(
                    f"policy for machine {machine_id!r} has no branch for "
                    f"observation {obs_to_str(obs)!r} after action {action.id!r}"
                )
        return st.controlled

    for comp_plan in plan.components:
        if comp_plan.parent is not None and not controlled_in(comp_plan.parent):
            continue
        for path in comp_plan.paths:
            for step_plan in path.steps:
                if controlled_in(step_plan.subnetwork):
                    continue
                if step_plan.first is None:
                    break
                if not attack(step_plan.first.machine_id, step_plan.first.policy):
                    break
                for follow_up in step_plan.others:
                    attack(follow_up.machine_id, follow_up.policy)
    return trace


def monte_carlo(spec: ScenarioSpec, plan: NetworkPlan, n: int, seed: int):
    """Mean and standard error of ``n`` independent rollout totals."""
    if n < 1:
        raise SimulationError("need at least one rollout")
    beliefs = scenario_beliefs(spec)
    seeds = np.random.SeedSequence(seed).generate_state(n)
    totals = np.empty(n)
    for i in range(n):
        truth = sample_ground_truth(beliefs, int(seeds[i]))
        totals[i] = rollout(spec, plan, truth).total
    return _mean_stderr(totals)


def rollout_pomdp(pomdp: MachinePOMDP, policy: PolicyNode, state) -> RolloutTrace:
    """Walk a policy tree against one concrete state of a tabular model."""
    trace = RolloutTrace()
    node = policy
    while node.action.kind != TERMINATE:
        state, obs, reward = step(pomdp, state, node.action)
        trace.record(pomdp.machine_id, node.action.id, obs, reward)
        nxt = node.branches.get(obs)
        if nxt is None:
            raise SimulationError(
                f"policy has no branch for observation {obs_to_str(obs)!r}"
            )
        node = nxt
    return trace


def monte_carlo_pomdp(pomdp: MachinePOMDP, policy: PolicyNode, n: int, seed: int):
    """Monte Carlo estimate of a policy's value on a tabular model."""
    if n < 1:
        raise SimulationError("need at least one rollout")
    rng = np.random.default_rng(seed)
    support = list(pomdp.b0)
    probs = np.array([pomdp.b0[s] for s in support])
    probs = probs / probs.sum()
    draws = rng.choice(len(support), size=n, p=probs)
    totals = np.empty(n)
    for i, d in enumerate(draws):
        totals[i] = rollout_pomdp(pomdp, policy, support[d]).total
    return _mean_stderr(totals)


def _mean_stderr(totals: np.ndarray):
    mean = float(totals.mean())
    if len(totals) < 2:
        return mean, 0.0
    return mean, float(totals.std(ddof=1) / math.sqrt(len(totals)))


def format_trace(trace: RolloutTrace, seed: int | None = None) -> str:
    """One line per step, header with seed and totals."""
    header = f"# rollout seed={seed if seed is not None else 'n/a'} steps={len(trace.steps)} total={trace.total:.6f}"
    lines = [header]
    for machine_id, action_id, obs, reward in trace.steps:
        lines.append(f"{machine_id} {action_id} {obs_to_str(obs)} {reward:.6f}")
    return "\n".join(lines)
