"""Whole-network attack planning by decomposition.

The logical network is split into a tree of biconnected components rooted
at the attacker's foothold.  Components are processed leaves-first; the
value of attacking a component is added to the pivoting reward of its
parent subnetwork.  Inside a component, simple attack paths to each
rewarded subnetwork are enumerated and evaluated by composing per-subnetwork
attacks, which in turn compose per-machine POMDP solves (cached).  The
computed value never exceeds the optimum of the global model; on networks
that are trees of singleton subnetworks it is exact.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import networkx as nx

from .netmodel import EMPTY_FIREWALL, Firewall, LogicalNetwork
from .scenario import ScenarioSpec
from .solver import PolicyNode, solve
from .pomdp import TERMINATE_ACTION, build_machine_pomdp

R_QUANTUM = 6  # decimals kept in the machine-solve cache key


class PlannerError(Exception):
    pass


class ComponentSizeError(PlannerError):
    """Path enumeration refused: component larger than the configured limit."""


def biconnected_decomposition(nodes, edges):
    """Biconnected components and cut vertices of an undirected graph.

    ``edges`` are unordered pairs; isolated nodes belong to no component.
    """
    g = nx.Graph()
    g.add_nodes_from(nodes)
    g.add_edges_from(edges)
    components = [frozenset(c) for c in nx.biconnected_components(g)]
    cuts = set(nx.articulation_points(g))
    return components, cuts


@dataclass
class ComponentTree:
    """Tree of cleaned-up biconnected components, root = the foothold vertex."""

    components: list  # list of frozensets of subnetwork ids, topological order
    parent: dict  # component index -> parent subnetwork id (None for the root)
    cut_vertices: set
    arcs: dict  # surviving arcs: (src, dst) -> Firewall
    pruned: set  # subnetworks dropped as unreachable from the foothold

    def component_of(self, subnetwork: str) -> int:
        for i, comp in enumerate(self.components):
            if subnetwork in comp:
                return i
        raise KeyError(subnetwork)


def decompose(net: LogicalNetwork) -> ComponentTree:
    """Decompose the undirected view, root at the foothold, and clean up.

    Clean-up: the foothold becomes its own component; each cut vertex is
    assigned to the component closest to the foothold; vertices not
    directed-reachable from the foothold are pruned; arcs between
    components other than the unique parent-entry arcs are removed.
    """
    start = net.start
    nodes = list(net.subnetworks)
    undirected = {frozenset(a) for a in net.arcs}
    raw_components, cuts = biconnected_decomposition(
        nodes, [tuple(e) for e in undirected]
    )

    # directed reachability from the foothold
    reachable = {start}
    frontier = [start]
    while frontier:
        u = frontier.pop()
        for (src, dst) in net.arcs:
            if src == u and dst not in reachable:
                reachable.add(dst)
                frontier.append(dst)
    pruned = set(nodes) - reachable

    # walk the block-cut structure outward from the foothold
    components = [frozenset({start})]
    parent = {0: None}
    assigned = {start}
    visited_comps = set()
    frontier = [start]  # cut vertices (or the foothold) to expand from
    while frontier:
        via = frontier.pop(0)
        for ci, comp in enumerate(raw_components):
            if ci in visited_comps or via not in comp:
                continue
            visited_comps.add(ci)
            members = frozenset(
                n for n in comp if n != via and n not in assigned and n in reachable
            )
            if not members:
                continue
            components.append(members)
            parent[len(components) - 1] = via
            assigned |= members
            for n in members:
                if n in cuts:
                    frontier.append(n)

    surviving = set().union(*components)
    member_of = {}
    for i, comp in enumerate(components):
        for n in comp:
            member_of[n] = i
    arcs = {}
    for (src, dst), fw in net.arcs.items():
        if src not in surviving or dst not in surviving:
            continue
        same = member_of[src] == member_of[dst]
        entry = parent.get(member_of[dst]) == src
        if same or entry:
            arcs[(src, dst)] = fw
    return ComponentTree(
        components=components,
        parent=parent,
        cut_vertices=cuts & surviving,
        arcs=arcs,
        pruned=pruned,
    )


# --- plan data model --------------------------------------------------------


@dataclass
class MachineAttack:
    machine_id: str
    blocked_ports: frozenset
    composite_reward: float
    value: float
    policy: PolicyNode


@dataclass
class SubnetworkPlan:
    subnetwork: str
    entry_blocked_ports: frozenset
    first: MachineAttack | None
    others: list = field(default_factory=list)  # follow-up MachineAttacks inside N
    value: float = 0.0


@dataclass
class PathPlan:
    target: str
    steps: list  # SubnetworkPlans along the path, entry first
    value: float = 0.0


@dataclass
class ComponentPlan:
    members: tuple  # sorted subnetwork ids
    parent: str | None
    paths: list = field(default_factory=list)
    value: float = 0.0


@dataclass
class PlanStats:
    solves: int = 0
    cache_hits: int = 0
    shortcut_zero_reward: int = 0
    wall_time: float = 0.0


@dataclass
class NetworkPlan:
    """The executable whole-network attack and its conservative value."""

    value: float
    components: list  # ComponentPlans in execution (topological) order
    tree: ComponentTree
    pivot_rewards: dict
    stats: PlanStats


class DecompositionPlanner:
    """Plans an attack on a scenario by component decomposition."""

    def __init__(self, spec: ScenarioSpec, component_size_limit: int = 12):
        self.spec = spec
        self.component_size_limit = component_size_limit
        self.stats = PlanStats()
        self._cache = {}  # (machine id, blocked ports, quantized R) -> (value, policy)
        self._template_cache = {}  # (template, blocked ports, quantized R) -> same
        self._rewards = {m.id: m.reward for m in spec.net.machines()}

    # Level 4: attack one machine through one firewall
    def attack_machine(self, machine, firewall: Firewall, reward: float):
        if reward < 0:
            raise PlannerError("composite machine reward must be non-negative")
        key = (machine.id, firewall.blocked_ports, round(reward, R_QUANTUM))
        hit = self._cache.get(key)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit
        if machine.template is None or round(reward, R_QUANTUM) == 0.0:
            # no positive reward reachable: terminate immediately, value 0
            self.stats.shortcut_zero_reward += 1
            result = (0.0, PolicyNode(TERMINATE_ACTION, {}, 0.0))
            self._cache[key] = result
            return result
        tkey = (machine.template, firewall.blocked_ports, round(reward, R_QUANTUM))
        hit = self._template_cache.get(tkey)
        if hit is not None:
            self.stats.cache_hits += 1
            self._cache[key] = hit
            return hit
        pomdp = build_machine_pomdp(
            machine,
            firewall,
            reward,
            self.spec.machine_belief(machine),
            self.spec.actions,
            self.spec.model,
            prune_inert_actions=True,
        )
        solved = solve(pomdp)
        self.stats.solves += 1
        result = (solved.value, solved.policy)
        self._cache[key] = result
        self._template_cache[tkey] = result
        return result

    # Level 3: attack one subnetwork through one firewall
    def attack_subnetwork(
        self, subnetwork: str, firewall: Firewall, pivot_reward: float, path_reward: float
    ):
        machines = sorted(self.spec.net.subnetworks[subnetwork], key=lambda m: m.id)
        best_value = 0.0
        best_plan = SubnetworkPlan(subnetwork, firewall.blocked_ports, None, [], 0.0)
        for m in machines:
            composite = self._rewards[m.id] + pivot_reward + path_reward
            others = []
            for sibling in machines:
                if sibling.id == m.id:
                    continue
                v, pol = self.attack_machine(sibling, EMPTY_FIREWALL, self._rewards[sibling.id])
                composite += v
                if v > 0:
                    others.append(
                        MachineAttack(sibling.id, frozenset(), self._rewards[sibling.id], v, pol)
                    )
            value, policy = self.attack_machine(m, firewall, composite)
            if value > best_value:
                best_value = value
                best_plan = SubnetworkPlan(
                    subnetwork,
                    firewall.blocked_ports,
                    MachineAttack(m.id, firewall.blocked_ports, composite, value, policy),
                    others,
                    value,
                )
        return best_value, best_plan

    # Level 2: attack one component
    def attack_component(self, comp_index: int, tree: ComponentTree, pr: dict):
        comp = tree.components[comp_index]
        if len(comp) > self.component_size_limit:
            raise ComponentSizeError(
                f"component with {len(comp)} subnetworks exceeds the "
                f"path-enumeration limit of {self.component_size_limit}"
            )
        plan = ComponentPlan(
            members=tuple(sorted(comp)), parent=tree.parent[comp_index]
        )
        total = 0.0
        while True:
            target = self._pick_target(comp, pr)
            if target is None:
                break
            best_value, best_path = 0.0, None
            for path in self._entry_paths(comp, comp_index, tree, target):
                value = 0.0
                for fw, vertex in reversed(path):
                    value, _ = self.attack_subnetwork(vertex, fw, pr[vertex], value)
                if best_path is None or value > best_value:
                    best_value, best_path = value, path
            if best_path is None:
                # target unreachable inside the component; drop its rewards
                pr[target] = 0.0
                for m in self.spec.net.subnetworks[target]:
                    self._rewards[m.id] = 0.0
                continue
            # re-run along the chosen path to capture the executable plan
            steps_rev = []
            value = 0.0
            for fw, vertex in reversed(best_path):
                value, sub_plan = self.attack_subnetwork(vertex, fw, pr[vertex], value)
                steps_rev.append(sub_plan)
            path_plan = PathPlan(target, list(reversed(steps_rev)), best_value)
            if best_value > 0:
                plan.paths.append(path_plan)
                total += best_value
            for _, vertex in best_path:
                pr[vertex] = 0.0
                for m in self.spec.net.subnetworks[vertex]:
                    self._rewards[m.id] = 0.0
        plan.value = total
        return total, plan

    def _pick_target(self, comp, pr):
        """Next rewarded subnetwork: largest outstanding reward, then id order."""
        candidates = []
        for n in comp:
            own = sum(self._rewards[m.id] for m in self.spec.net.subnetworks[n])
            if own > 0 or pr[n] > 0:
                candidates.append((-(own + pr[n]), n))
        if not candidates:
            return None
        return min(candidates)[1]

    def _entry_paths(self, comp, comp_index, tree: ComponentTree, target: str):
        """All simple paths [(firewall, vertex), ...] from an entry vertex to target."""
        entry_arcs = sorted(
            (dst, src)
            for (src, dst), _ in tree.arcs.items()
            if dst in comp and src not in comp
        )
        inner = {}
        for (src, dst), fw in tree.arcs.items():
            if src in comp and dst in comp:
                inner.setdefault(src, []).append((dst, fw))
        for dsts in inner.values():
            dsts.sort()
        paths = []

        def extend(path, seen):
            vertex = path[-1][1]
            if vertex == target:
                paths.append(list(path))
                return
            for dst, fw in inner.get(vertex, []):
                if dst in seen:
                    continue
                path.append((fw, dst))
                seen.add(dst)
                extend(path, seen)
                seen.discard(dst)
                path.pop()

        for dst, src in entry_arcs:
            fw = tree.arcs[(src, dst)]
            extend([(fw, dst)], {dst})
        return paths

    # Level 1: the whole network
    def plan(self) -> NetworkPlan:
        started = time.perf_counter()
        tree = decompose(self.spec.net)
        pr = {n: 0.0 for comp in tree.components for n in comp}
        order = range(len(tree.components))
        component_plans = {}
        for i in reversed(order):
            if tree.parent[i] is None:
                continue  # the root component holds only the foothold
            value, comp_plan = self.attack_component(i, tree, pr)
            component_plans[i] = comp_plan
            pr[tree.parent[i]] = pr.get(tree.parent[i], 0.0) + value
        self.stats.wall_time = time.perf_counter() - started
        return NetworkPlan(
            value=pr[self.spec.net.start],
            components=[component_plans[i] for i in order if i in component_plans],
            tree=tree,
            pivot_rewards=pr,
            stats=self.stats,
        )


def plan_attack(spec: ScenarioSpec, component_size_limit: int = 12) -> NetworkPlan:
    return DecompositionPlanner(spec, component_size_limit).plan()
