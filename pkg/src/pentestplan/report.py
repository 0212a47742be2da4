"""Serialization and human-readable reporting of network attack plans.

A plan file is one YAML document mirroring the plan structure (components,
attack paths, per-subnetwork steps) with each machine policy embedded in
the indented policy text format; ``plan_from_yaml`` restores an executable
plan the simulator accepts.
"""

from __future__ import annotations

import yaml

from .planner import (
    ComponentPlan,
    MachineAttack,
    NetworkPlan,
    PathPlan,
    PlanStats,
    SubnetworkPlan,
)
from .solver import format_policy, parse_policy


class ReportError(Exception):
    pass


def _attack_to_dict(attack: MachineAttack) -> dict:
    return {
        "machine": attack.machine_id,
        "blocked_ports": sorted(attack.blocked_ports),
        "composite_reward": float(attack.composite_reward),
        "value": float(attack.value),
        "policy": format_policy(attack.policy),
    }


def plan_to_dict(plan: NetworkPlan) -> dict:
    components = []
    for comp in plan.components:
        paths = []
        for path in comp.paths:
            steps = []
            for step in path.steps:
                entry = {
                    "subnetwork": step.subnetwork,
                    "entry_blocked_ports": sorted(step.entry_blocked_ports),
                    "value": float(step.value),
                    "first": None if step.first is None else _attack_to_dict(step.first),
                    "others": [_attack_to_dict(a) for a in step.others],
                }
                steps.append(entry)
            paths.append({"target": path.target, "value": float(path.value), "steps": steps})
        components.append(
            {
                "members": sorted(comp.members),
                "parent": comp.parent,
                "value": float(comp.value),
                "paths": paths,
            }
        )
    return {"value": float(plan.value), "components": components}


def plan_to_yaml(plan: NetworkPlan) -> str:
    return yaml.safe_dump(plan_to_dict(plan), sort_keys=True, default_flow_style=False)


def _attack_from_dict(entry: dict, actions) -> MachineAttack:
    return MachineAttack(
        machine_id=entry["machine"],
        blocked_ports=frozenset(entry.get("blocked_ports", [])),
        composite_reward=float(entry.get("composite_reward", 0.0)),
        value=float(entry.get("value", 0.0)),
        policy=parse_policy(entry["policy"], actions),
    )


def plan_from_yaml(text: str, actions) -> NetworkPlan:
    """Restore a plan from its YAML form; ``actions`` resolves policy action ids."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ReportError(f"plan syntax error: {exc}") from exc
    if not isinstance(doc, dict) or "components" not in doc:
        raise ReportError("plan document must be a mapping with a 'components' list")
    components = []
    for comp in doc["components"]:
        paths = []
        for path in comp.get("paths", []):
            steps = []
            for step in path.get("steps", []):
                first = step.get("first")
                steps.append(
                    SubnetworkPlan(
                        subnetwork=step["subnetwork"],
                        entry_blocked_ports=frozenset(step.get("entry_blocked_ports", [])),
                        first=None if first is None else _attack_from_dict(first, actions),
                        others=[_attack_from_dict(a, actions) for a in step.get("others", [])],
                        value=float(step.get("value", 0.0)),
                    )
                )
            paths.append(
                PathPlan(target=path["target"], steps=steps, value=float(path.get("value", 0.0)))
            )
        components.append(
            ComponentPlan(
                members=tuple(comp.get("members", [])),
                parent=comp.get("parent"),
                paths=paths,
                value=float(comp.get("value", 0.0)),
            )
        )
    return NetworkPlan(
        value=float(doc.get("value", 0.0)),
        components=components,
        tree=None,
        pivot_rewards={},
        stats=PlanStats(),
    )


def format_plan(plan: NetworkPlan) -> str:
    """Indented human-readable summary of a network plan."""
    lines = [f"network attack plan: expected value {plan.value:.6f}"]
    for comp in plan.components:
        members = ", ".join(sorted(comp.members))
        via = f" (entered from {comp.parent})" if comp.parent else ""
        lines.append(f"component [{members}]{via}: value {comp.value:.6f}")
        for path in comp.paths:
            lines.append(f"  path to {path.target}: value {path.value:.6f}")
            for step in path.steps:
                blocked = (
                    f" blocked={sorted(step.entry_blocked_ports)}"
                    if step.entry_blocked_ports
                    else ""
                )
                lines.append(
                    f"    subnetwork {step.subnetwork}{blocked}: value {step.value:.6f}"
                )
                if step.first is not None:
                    lines.append(
                        f"      break in via {step.first.machine_id} "
                        f"(composite reward {step.first.composite_reward:.6f}, "
                        f"value {step.first.value:.6f})"
                    )
                for other in step.others:
                    lines.append(
                        f"      then {other.machine_id} (value {other.value:.6f})"
                    )
    if plan.stats.solves or plan.stats.cache_hits:
        lines.append(
            f"solves: {plan.stats.solves}, cache hits: {plan.stats.cache_hits}, "
            f"wall time: {plan.stats.wall_time:.3f}s"
        )
    return "\n".join(lines)
