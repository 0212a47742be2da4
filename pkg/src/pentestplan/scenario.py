"""Scenario files: one YAML document describing a whole attack problem.

Sections: ``subnetworks``, ``machines``, ``arcs``, ``start``,
``elapsed_days``, ``costs``, ``programs`` (update chains, dependency
parents, port metadata), ``compatibility`` (allowed version tuples),
``templates`` (named machine configurations) and ``actions`` (the
scan/exploit catalog).  Emission is canonical (alphabetical ids, sorted
keys), so parse-emit round-trips are byte-stable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import yaml

from .belief import DependencyModel, MarkovChain, ProgramModel, initial_belief
from .netmodel import (
    Firewall,
    LogicalNetwork,
    Machine,
    ScenarioSyntaxError,
    ScenarioValidationError,
)
from .pomdp import ActionSpec, EXPLOIT, OS_DETECT, PORT_SCAN

DEFAULT_COSTS = {"port_scan": 10.0, "os_detect": 50.0, "exploit": 10.0, "detect_risk": 0.0}


@dataclass(frozen=True)
class ScenarioSpec:
    """Parsed and validated scenario: network, update model, action catalog."""

    net: LogicalNetwork
    model: DependencyModel
    templates: dict  # template id -> {program name: version}
    actions: tuple  # ActionSpec, alphabetical by id; terminate implicit
    costs: dict
    elapsed_days: int
    _belief_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def config_of(self, template_id: str) -> tuple:
        try:
            assignment = self.templates[template_id]
        except KeyError:
            raise ScenarioValidationError(f"unknown template {template_id!r}") from None
        return tuple(assignment[p.name] for p in self.model.programs)

    def machine_belief(self, machine: Machine) -> dict:
        """Initial configuration belief b0 for one machine (cached per template)."""
        if machine.template is None:
            raise ScenarioValidationError(
                f"machine {machine.id!r} has no known configuration"
            )
        cached = self._belief_cache.get(machine.template)
        if cached is None:
            cached = initial_belief(
                self.model, self.config_of(machine.template), self.elapsed_days
            )
            self._belief_cache[machine.template] = cached
        return cached


def _require(mapping, key, where):
    if key not in mapping:
        raise ScenarioValidationError(f"missing {key!r} in {where}")
    return mapping[key]


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario document."""
    try:
        doc = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioSyntaxError(f"scenario syntax error{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioSyntaxError("scenario document must be a mapping")

    elapsed_days = doc.get("elapsed_days", 0)
    if not isinstance(elapsed_days, int) or elapsed_days < 0:
        raise ScenarioValidationError("elapsed_days must be a non-negative integer")

    costs = dict(DEFAULT_COSTS)
    costs.update(doc.get("costs", {}))

    # programs and compatibility
    programs = []
    for name in sorted(doc.get("programs", {})):
        spec = doc["programs"][name]
        states = tuple(_require(spec, "states", f"program {name!r}"))
        rows = _require(spec, "transitions", f"program {name!r}")
        matrix = np.zeros((len(states), len(states)))
        for i, s in enumerate(states):
            row = rows.get(s, {})
            for t, p in row.items():
                if t not in states:
                    raise ScenarioValidationError(
                        f"program {name!r}: transition to unknown version {t!r}"
                    )
                matrix[i][states.index(t)] = float(p)
        programs.append(
            ProgramModel(
                name=name,
                chain=MarkovChain(states, matrix),
                parents=tuple(spec.get("parents", [])),
                port=spec.get("port"),
                open_states=frozenset(spec.get("open_states", [])),
                is_os=bool(spec.get("os", False)),
            )
        )
    compatibility = {
        name: {tuple(t) for t in tuples}
        for name, tuples in doc.get("compatibility", {}).items()
    }
    model = DependencyModel(programs=tuple(programs), compatibility=compatibility)

    # templates
    templates = {}
    for tid in sorted(doc.get("templates", {})):
        assignment = doc["templates"][tid]
        missing = set(model.names) - set(assignment)
        extra = set(assignment) - set(model.names)
        if missing or extra:
            raise ScenarioValidationError(
                f"template {tid!r}: missing programs {sorted(missing)}, "
                f"unknown programs {sorted(extra)}"
            )
        for pname, version in assignment.items():
            model.program(pname).chain.index(version)
        templates[tid] = dict(assignment)

    # network
    subnet_ids = doc.get("subnetworks", [])
    if len(set(subnet_ids)) != len(subnet_ids):
        raise ScenarioValidationError("duplicate subnetwork ids")
    machines_by_subnet = {sn: [] for sn in subnet_ids}
    for m in doc.get("machines", []):
        sn = _require(m, "subnetwork", f"machine {m.get('id')!r}")
        if sn not in machines_by_subnet:
            raise ScenarioValidationError(
                f"machine {m.get('id')!r} placed in unknown subnetwork {sn!r}"
            )
        template = m.get("template")
        if template is not None and template not in templates:
            raise ScenarioValidationError(
                f"machine {m.get('id')!r} uses unknown template {template!r}"
            )
        machines_by_subnet[sn].append(
            Machine(
                id=_require(m, "id", "machine entry"),
                template=template,
                reward=float(m.get("reward", 0.0)),
            )
        )
    arcs = {}
    for arc in doc.get("arcs", []):
        src = _require(arc, "from", "arc entry")
        dst = _require(arc, "to", "arc entry")
        if (src, dst) in arcs:
            raise ScenarioValidationError(f"duplicate arc ({src!r}, {dst!r})")
        arcs[(src, dst)] = Firewall(frozenset(arc.get("blocked_ports", [])))
    net = LogicalNetwork(
        subnetworks={sn: tuple(sorted(ms, key=lambda m: m.id)) for sn, ms in machines_by_subnet.items()},
        arcs=arcs,
        start=_require(doc, "start", "scenario"),
    )

    # action catalog
    actions = []
    for a in doc.get("actions", []):
        kind = _require(a, "kind", f"action {a.get('id')!r}")
        cost_key = kind if kind in costs else "exploit"
        cost_time = float(a.get("cost_time", costs.get(cost_key, 0.0)))
        cost_detect = float(a.get("cost_detect", costs.get("detect_risk", 0.0)))
        program = a.get("program")
        if program is not None and program not in model.names:
            raise ScenarioValidationError(
                f"action {a.get('id')!r} targets unknown program {program!r}"
            )
        for pred_name in ("success", "crash"):
            for pname, versions in a.get(pred_name, {}).items():
                prog = model.program(pname) if pname in model.names else None
                if prog is None:
                    raise ScenarioValidationError(
                        f"action {a.get('id')!r}: {pred_name} predicate on unknown "
                        f"program {pname!r}"
                    )
                for v in versions:
                    prog.chain.index(v)
        actions.append(
            ActionSpec(
                id=_require(a, "id", "action entry"),
                kind=kind,
                port=a.get("port"),
                program=program,
                success={p: frozenset(v) for p, v in a.get("success", {}).items()},
                crash={p: frozenset(v) for p, v in a.get("crash", {}).items()},
                r_t=-cost_time,
                r_d=-cost_detect,
            )
        )
    ids = [a.id for a in actions]
    if len(set(ids)) != len(ids):
        raise ScenarioValidationError("duplicate action ids")
    actions.sort(key=lambda a: a.id)

    return ScenarioSpec(
        net=net,
        model=model,
        templates=templates,
        actions=tuple(actions),
        costs=costs,
        elapsed_days=elapsed_days,
    )


def emit_scenario(spec: ScenarioSpec) -> str:
    """Canonical serialization; ``parse_scenario`` round-trips it."""
    programs = {}
    for p in spec.model.programs:
        rows = {}
        for i, s in enumerate(p.chain.states):
            row = {
                p.chain.states[j]: float(p.chain.transition[i][j])
                for j in range(len(p.chain.states))
                if p.chain.transition[i][j] > 0.0
            }
            rows[s] = row
        entry = {"states": list(p.chain.states), "transitions": rows}
        if p.parents:
            entry["parents"] = list(p.parents)
        if p.port is not None:
            entry["port"] = p.port
        if p.open_states:
            entry["open_states"] = sorted(p.open_states)
        if p.is_os:
            entry["os"] = True
        programs[p.name] = entry

    machines = []
    for sn in sorted(spec.net.subnetworks):
        for m in spec.net.subnetworks[sn]:
            entry = {"id": m.id, "subnetwork": sn, "reward": float(m.reward)}
            if m.template is not None:
                entry["template"] = m.template
            machines.append(entry)
    machines.sort(key=lambda e: e["id"])

    arcs = [
        {"from": src, "to": dst, "blocked_ports": sorted(fw.blocked_ports)}
        for (src, dst), fw in sorted(spec.net.arcs.items())
    ]

    actions = []
    for a in sorted(spec.actions, key=lambda a: a.id):
        entry = {"id": a.id, "kind": a.kind, "cost_time": -a.r_t, "cost_detect": -a.r_d}
        if a.port is not None:
            entry["port"] = a.port
        if a.program is not None:
            entry["program"] = a.program
        if a.success:
            entry["success"] = {p: sorted(v) for p, v in a.success.items()}
        if a.crash:
            entry["crash"] = {p: sorted(v) for p, v in a.crash.items()}
        actions.append(entry)

    doc = {
        "start": spec.net.start,
        "elapsed_days": spec.elapsed_days,
        "costs": {k: float(v) for k, v in sorted(spec.costs.items())},
        "subnetworks": sorted(spec.net.subnetworks),
        "machines": machines,
        "arcs": arcs,
        "programs": programs,
        "templates": {
            tid: dict(sorted(assignment.items()))
            for tid, assignment in sorted(spec.templates.items())
        },
        "actions": actions,
    }
    if spec.model.compatibility:
        doc["compatibility"] = {
            name: sorted(list(t) for t in tuples)
            for name, tuples in sorted(spec.model.compatibility.items())
        }
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)
