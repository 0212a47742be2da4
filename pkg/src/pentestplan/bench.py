"""Benchmark scenarios, the global-POMDP baseline, and experiment runs.

The generated benchmark mirrors a corporate layout: the attack starts on
the Internet, an Exposed and a Sensitive area are single fully connected
subnetworks behind firewalls, and a User area is a tree of subnetworks
joined by empty firewalls.  Two machines carry rewards (9000 in Sensitive,
5000 in a User leaf); scans and exploits cost 10, OS detection costs 50.

The global baseline encodes the entire network attack as one cross-product
POMDP solved by the same exact solver; it is only feasible at desk scale
and refuses to build beyond a configurable state bound.
"""

from __future__ import annotations

import csv
import io
import itertools
import time
from dataclasses import dataclass, replace

import numpy as np

from .belief import MarkovChain, ProgramModel
from .netmodel import EMPTY_FIREWALL, action_usable
from .planner import plan_attack
from .pomdp import (
    CONTROLLED,
    ConfigState,
    EXPLOIT,
    MachinePOMDP,
    ModelError,
    OBS_NONE,
    OBS_SUCCEEDED,
    OS_DETECT,
    PORT_SCAN,
    TERMINAL,
    TERMINATE_ACTION,
    informative_actions,
    local_outcome,
)
from .scenario import DEFAULT_COSTS, ScenarioSpec
from .sim import monte_carlo, rollout_pomdp, sample_ground_truth, scenario_beliefs
from .solver import solve

DEFAULT_GLOBAL_STATE_BOUND = 200_000
TEMPLATE_COUNT = 13


class BenchmarkError(Exception):
    pass


class ResourceBoundError(BenchmarkError):
    """A requested computation exceeds its configured resource bound."""


@dataclass(frozen=True)
class BenchmarkParams:
    machines: int
    exploits: int
    elapsed_days: int = 50
    seed: int = 0
    user_subnet_size: int = 4
    exposed_blocked_fraction: float = 0.30
    sensitive_blocked_fraction: float = 0.60

    def __post_init__(self):
        if self.machines < 1 or self.exploits < 1 or self.elapsed_days < 0:
            raise BenchmarkError("need machines >= 1, exploits >= 1, elapsed_days >= 0")


def _service_port(index: int) -> int:
    return 2000 + index


def generate_benchmark(params: BenchmarkParams) -> ScenarioSpec:
    """Deterministic benchmark scenario for the given size parameters."""
    rng = np.random.default_rng(params.seed)

    programs = {}
    programs["os_base"] = {
        "states": ["stable"],
        "transitions": {"stable": {"stable": 1.0}},
        "os": True,
    }
    actions = [
        {"id": "detect_os", "kind": OS_DETECT, "cost_time": DEFAULT_COSTS["os_detect"]}
    ]
    for j in range(params.exploits):
        name = f"svc{j:03d}"
        patch_daily = float(rng.uniform(0.005, 0.03))
        programs[name] = {
            "states": ["vulnerable", "patched"],
            "transitions": {
                "vulnerable": {"vulnerable": 1.0 - patch_daily, "patched": patch_daily},
                "patched": {"patched": 1.0},
            },
            "port": _service_port(j),
            # patching removes the vulnerable service, closing its port
            "open_states": ["vulnerable"],
        }
        exploit = {
            "id": f"exploit{j:03d}",
            "kind": EXPLOIT,
            "port": _service_port(j),
            "program": name,
            "success": {name: ["vulnerable"]},
        }
        if j % 7 == 6:
            # a minority of exploits crash the patched service on failure
            exploit["crash"] = {name: ["patched"]}
        actions.append(exploit)
        actions.append(
            {"id": f"scan{j:03d}", "kind": PORT_SCAN, "port": _service_port(j)}
        )

    # 13 templates; exploit j belongs to template j mod 13, capped at three
    # vulnerable services per template so per-machine belief spaces stay
    # small at large exploit counts.  Machines draw from the templates that
    # actually contain an exploit so every machine stays attackable.
    templates = {}
    for t in range(TEMPLATE_COUNT):
        vulnerable = [j for j in range(params.exploits) if j % TEMPLATE_COUNT == t][:3]
        assignment = {"os_base": "stable"}
        for j in range(params.exploits):
            assignment[f"svc{j:03d}"] = "vulnerable" if j in vulnerable else "patched"
        templates[f"t{t:02d}"] = assignment
    populated = min(TEMPLATE_COUNT, params.exploits)

    # machine placement: of every 40 machines the first goes to Exposed,
    # the second to Sensitive, and the remaining 38 to the User tree
    placement = []
    for i in range(params.machines):
        area = "exposed" if i % 40 == 0 else ("sensitive" if i % 40 == 1 else "user")
        placement.append((f"m{i:03d}", area, f"t{i % populated:02d}"))
    user_machines = [p for p in placement if p[1] == "user"]
    n_user_subnets = max(1, -(-len(user_machines) // params.user_subnet_size)) if user_machines else 0

    subnetworks = ["internet", "exposed"]
    machines = [{"id": "attacker", "subnetwork": "internet", "reward": 0.0}]
    arcs = []
    if any(p[1] == "sensitive" for p in placement):
        subnetworks.append("sensitive")
    for k in range(n_user_subnets):
        subnetworks.append(f"user{k:02d}")

    ports = [_service_port(j) for j in range(params.exploits)]
    exposed_blocked = sorted(
        int(p)
        for p in rng.choice(
            ports, size=int(params.exposed_blocked_fraction * len(ports)), replace=False
        )
    )
    sensitive_blocked = sorted(
        int(p)
        for p in rng.choice(
            ports, size=int(params.sensitive_blocked_fraction * len(ports)), replace=False
        )
    )
    arcs.append({"from": "internet", "to": "exposed", "blocked_ports": exposed_blocked})
    if "sensitive" in subnetworks:
        arcs.append(
            {"from": "exposed", "to": "sensitive", "blocked_ports": sensitive_blocked}
        )
        user_parent = "sensitive"
    else:
        user_parent = "exposed"
    for k in range(n_user_subnets):
        parent = user_parent if k == 0 else f"user{(k - 1) // 2:02d}"
        arcs.append({"from": parent, "to": f"user{k:02d}", "blocked_ports": []})

    sensitive_reward_given = False
    user_slots = iter(
        f"user{k:02d}" for k in range(n_user_subnets) for _ in range(params.user_subnet_size)
    )
    for mid, area, template in placement:
        if area == "user":
            subnet = next(user_slots)
        else:
            subnet = area
        machines.append(
            {"id": mid, "subnetwork": subnet, "template": template, "reward": 0.0}
        )
    by_id = {m["id"]: m for m in machines}
    sensitive_ids = [p[0] for p in placement if p[1] == "sensitive"]
    if sensitive_ids:
        by_id[sensitive_ids[0]]["reward"] = 9000.0
        sensitive_reward_given = True
    if not sensitive_reward_given:
        by_id[placement[0][0]]["reward"] = 9000.0
    if user_machines:
        # deepest user subnetwork is the last one generated
        leaf = f"user{n_user_subnets - 1:02d}"
        leaf_ids = [m["id"] for m in machines if m["subnetwork"] == leaf]
        by_id[leaf_ids[0]]["reward"] = 5000.0

    doc = {
        "start": "internet",
        "elapsed_days": params.elapsed_days,
        "costs": dict(DEFAULT_COSTS),
        "subnetworks": subnetworks,
        "machines": machines,
        "arcs": arcs,
        "programs": programs,
        "templates": templates,
        "actions": actions,
    }
    from .scenario import parse_scenario
    import yaml

    return parse_scenario(yaml.safe_dump(doc, sort_keys=True))


# --- global cross-product baseline ------------------------------------------


@dataclass
class GlobalPomdp:
    """Whole-network POMDP: states are tuples of per-machine local states."""

    pomdp: MachinePOMDP
    machine_order: tuple  # machine ids in state-tuple order (foothold excluded)

    def state_from_configs(self, configs: dict) -> tuple:
        return tuple(ConfigState(configs[mid]) for mid in self.machine_order)


def build_global_pomdp(
    spec: ScenarioSpec, max_states: int = DEFAULT_GLOBAL_STATE_BOUND
) -> GlobalPomdp:
    """Exact cross-product model; refuses to exceed ``max_states``."""
    net = spec.net
    foothold = net.start_machine
    machines = sorted(
        (m for m in net.machines() if m.id != foothold.id), key=lambda m: m.id
    )
    subnet_of = {m.id: net.subnetwork_of(m.id) for m in net.machines()}
    beliefs = {}
    supports = {}
    per_machine_actions = {}
    estimate = 1
    for m in machines:
        b = spec.machine_belief(m)
        beliefs[m.id] = b
        supports[m.id] = sorted(b, key=str)
        usable = [a for a in spec.actions if a.kind != "terminate"]
        per_machine_actions[m.id] = informative_actions(
            spec.model, [ConfigState(c) for c in b], usable
        )
        estimate *= len(b) + 1
        if estimate > max_states:
            raise ResourceBoundError(
                f"estimated global state count exceeds {max_states}; "
                "use the decomposition planner"
            )

    # global action catalog: one entry per (machine, relevant catalog action)
    global_actions = []
    action_target = {}
    for i, m in enumerate(machines):
        for a in per_machine_actions[m.id]:
            ga = replace(a, id=f"{m.id}.{a.id}")
            global_actions.append(ga)
            action_target[ga.id] = (i, a)
    global_actions.append(TERMINATE_ACTION)

    rewards = {m.id: m.reward for m in machines}

    def routes(state, i):
        """(reached, usable-firewalls) for attacking machine i in this state."""
        controlled_subnets = {subnet_of[foothold.id]}
        for j, local in enumerate(state):
            if local is CONTROLLED:
                controlled_subnets.add(subnet_of[machines[j].id])
        target_subnet = subnet_of[machines[i].id]
        fws = []
        if target_subnet in controlled_subnets:
            fws.append(EMPTY_FIREWALL)
        for (src, dst), fw in net.arcs.items():
            if dst == target_subnet and src in controlled_subnets:
                fws.append(fw)
        return bool(fws), fws

    def outcome(state, ga_id):
        i, a = action_target[ga_id]
        m = machines[i]
        local = state[i]
        cost = a.r_t + a.r_d
        if local is CONTROLLED:
            obs = OBS_SUCCEEDED if a.kind == EXPLOIT else OBS_NONE
            return state, obs, cost
        reached, fws = routes(state, i)
        if not reached or not any(action_usable(a, fw) for fw in fws):
            return state, OBS_NONE, cost
        nxt_local, obs, success = local_outcome(spec.model, a, local)
        if success:
            nxt = state[:i] + (CONTROLLED,) + state[i + 1 :]
            return nxt, obs, cost + rewards[m.id]
        if nxt_local != local:
            nxt = state[:i] + (nxt_local,) + state[i + 1 :]
            return nxt, obs, cost
        return state, obs, cost

    initial = [
        tuple(combo)
        for combo in itertools.product(
            *[[ConfigState(c) for c in supports[m.id]] for m in machines]
        )
    ]
    states = set(initial)
    frontier = list(initial)
    while frontier:
        s = frontier.pop()
        for ga in global_actions:
            if ga.kind == "terminate":
                continue
            nxt, _, _ = outcome(s, ga.id)
            if nxt not in states:
                states.add(nxt)
                frontier.append(nxt)
                if len(states) > max_states:
                    raise ResourceBoundError(
                        f"global model exceeds {max_states} states; "
                        "use the decomposition planner"
                    )

    ordered = [TERMINAL] + sorted(states, key=str)
    transition, observation, reward = {}, {}, {}
    for ga in global_actions:
        if ga.kind == "terminate":
            for s in ordered:
                transition[(s, ga.id)] = TERMINAL
                reward[(s, ga.id, TERMINAL)] = 0.0
            observation[(TERMINAL, ga.id)] = OBS_NONE
            continue
        transition[(TERMINAL, ga.id)] = TERMINAL
        observation[(TERMINAL, ga.id)] = OBS_NONE
        reward[(TERMINAL, ga.id, TERMINAL)] = 0.0
        for s in states:
            nxt, obs, r = outcome(s, ga.id)
            transition[(s, ga.id)] = nxt
            prev = observation.get((nxt, ga.id))
            if prev is not None and prev != obs:
                raise ModelError(
                    f"global observation for ({ga.id!r}) is not deterministic"
                )
            observation[(nxt, ga.id)] = obs
            reward[(s, ga.id, nxt)] = r

    b0 = {}
    for combo in initial:
        mass = 1.0
        for m, local in zip(machines, combo):
            mass *= beliefs[m.id][local.config]
        b0[combo] = mass

    observations = sorted({o for o in observation.values()}, key=str)
    pomdp = MachinePOMDP(
        machine_id="global",
        model=spec.model,
        states=tuple(ordered),
        actions=tuple(global_actions),
        observations=tuple(observations),
        transition=transition,
        observation=observation,
        reward=reward,
        b0=b0,
    )
    return GlobalPomdp(pomdp=pomdp, machine_order=tuple(m.id for m in machines))


# --- chain calibration -------------------------------------------------------


class CalibrationError(BenchmarkError):
    pass


@dataclass(frozen=True)
class CalibrationTargets:
    """Probability targets for the worked single-machine scenario at T=30."""

    protection_enabled: float = 0.706  # Pr(DEP enabled) after 30 days
    exploit_given_open: float = 0.20  # Pr(CAU works | port 2967 open)
    exploit_given_open_and_fail: float = 0.05  # ... and a failed SA attempt
    tolerance: float = 0.03


@dataclass(frozen=True)
class CalibrationResult:
    dep_enable_daily: float
    sa_keep_daily: float
    sa_patch_share: float
    cau_keep_daily: float
    achieved: tuple  # the three achieved probabilities at T=30
    days: int = 30

    def programs(self) -> tuple:
        """Calibrated ProgramModels for the DEP/SA/CAU machine."""
        p = self.dep_enable_daily
        dep = ProgramModel(
            name="DEP",
            chain=MarkovChain(("disabled", "enabled"), [[1 - p, p], [0.0, 1.0]]),
        )

        def service(name, port, keep, patch_share):
            leave = 1.0 - keep
            return ProgramModel(
                name=name,
                chain=MarkovChain(
                    ("vulnerable", "present", "absent"),
                    [
                        [keep, leave * patch_share, leave * (1 - patch_share)],
                        [0.0, 1.0, 0.0],
                        [0.0, 0.0, 1.0],
                    ],
                ),
                port=port,
                open_states=frozenset({"vulnerable", "present"}),
            )

        sa = service("SA", 2967, self.sa_keep_daily, self.sa_patch_share)
        cau = service("CAU", 6668, self.cau_keep_daily, 0.5)
        return dep, sa, cau


def calibrate_chains(targets: CalibrationTargets | None = None) -> CalibrationResult:
    """Grid-search daily chain parameters reproducing the target probabilities.

    The three 30-day marginals have closed forms: with d = Pr(DEP still
    disabled), sv/sp the SA vulnerable/patched-but-present masses and cv
    the CAU vulnerable mass,

        Pr(enabled)             = 1 - d
        Pr(CAU | open)          = cv * d
        Pr(CAU | open, SA fail) = cv * d * sp / (sv + sp - sv * d)
    """
    t = targets or CalibrationTargets()
    days = 30
    best = None
    for dep_daily in np.linspace(0.02, 0.08, 31):
        d = (1.0 - dep_daily) ** days
        a1 = 1.0 - d
        for sa_keep in np.linspace(0.975, 0.995, 21):
            sv = sa_keep**days
            for sa_share in np.linspace(0.1, 0.9, 17):
                sp = (1.0 - sv) * sa_share
                for cau_keep in np.linspace(0.975, 0.995, 21):
                    cv = cau_keep**days
                    a2 = cv * d
                    a3 = cv * d * sp / (sv + sp - sv * d)
                    err = (
                        (a1 - t.protection_enabled) ** 2
                        + (a2 - t.exploit_given_open) ** 2
                        + (a3 - t.exploit_given_open_and_fail) ** 2
                    )
                    if best is None or err < best[0]:
                        best = (err, dep_daily, sa_keep, sa_share, cau_keep, (a1, a2, a3))
    err, dep_daily, sa_keep, sa_share, cau_keep, achieved = best
    result = CalibrationResult(
        dep_enable_daily=float(dep_daily),
        sa_keep_daily=float(sa_keep),
        sa_patch_share=float(sa_share),
        cau_keep_daily=float(cau_keep),
        achieved=achieved,
        days=days,
    )
    deviations = (
        abs(achieved[0] - t.protection_enabled),
        abs(achieved[1] - t.exploit_given_open),
        abs(achieved[2] - t.exploit_given_open_and_fail),
    )
    if max(deviations) > t.tolerance:
        raise CalibrationError(
            f"no two-state chain family member reaches the targets "
            f"(best deviations {deviations})"
        )
    return result


def worked_example_scenario(
    calibration: CalibrationResult | None = None, reward: float = 100.0
) -> ScenarioSpec:
    """Single machine with the DEP-gated SA/CAU exploits and calibrated chains."""
    cal = calibration or calibrate_chains()
    dep, sa, cau = cal.programs()
    import yaml

    doc = {
        "start": "foothold",
        "elapsed_days": cal.days,
        "costs": {"port_scan": 10.0, "os_detect": 50.0, "exploit": 10.0, "detect_risk": 0.0},
        "subnetworks": ["foothold", "office"],
        "machines": [
            {"id": "attacker", "subnetwork": "foothold", "reward": 0.0},
            {"id": "m", "subnetwork": "office", "template": "last_pentest", "reward": reward},
        ],
        "arcs": [{"from": "foothold", "to": "office", "blocked_ports": []}],
        "programs": {
            p.name: {
                "states": list(p.chain.states),
                "transitions": {
                    s: {
                        p.chain.states[j]: float(p.chain.transition[i][j])
                        for j in range(len(p.chain.states))
                        if p.chain.transition[i][j] > 0
                    }
                    for i, s in enumerate(p.chain.states)
                },
                **({"port": p.port, "open_states": sorted(p.open_states)} if p.port else {}),
            }
            for p in (dep, sa, cau)
        },
        "templates": {
            "last_pentest": {"DEP": "disabled", "SA": "vulnerable", "CAU": "vulnerable"}
        },
        "actions": [
            {
                "id": "exploit_SA",
                "kind": EXPLOIT,
                "port": 2967,
                "program": "SA",
                "success": {"SA": ["vulnerable"], "DEP": ["disabled"]},
            },
            {
                "id": "exploit_CAU",
                "kind": EXPLOIT,
                "port": 6668,
                "program": "CAU",
                "success": {"CAU": ["vulnerable"], "DEP": ["disabled"]},
            },
            {"id": "scan_port_2967", "kind": PORT_SCAN, "port": 2967},
            {"id": "scan_port_6668", "kind": PORT_SCAN, "port": 6668},
        ],
    }
    from .scenario import parse_scenario

    return parse_scenario(yaml.safe_dump(doc, sort_keys=True))


# --- random small scenarios (conservativeness / decomposition testing) -------


def random_scenario(
    seed: int,
    max_machines: int = 5,
    max_exploits: int = 7,
    max_subnetworks: int = 4,
    cycle_probability: float = 0.35,
    singleton_tree: bool = False,
) -> ScenarioSpec:
    """Seeded random small scenario, suitable for the global baseline.

    Networks are randomly shaped (chains, trees, occasional extra arcs that
    create biconnected components); machines draw random templates over
    two-state service programs.  With ``singleton_tree`` the network is a
    tree of one-machine subnetworks, the shape on which the decomposition
    matches the exact whole-network optimum.
    """
    rng = np.random.default_rng(seed)
    n_sub = int(rng.integers(1, max_subnetworks + 1))
    n_machines = int(rng.integers(1, max_machines + 1))
    n_exploits = int(rng.integers(1, max_exploits + 1))
    if singleton_tree:
        n_sub = min(n_machines, max_subnetworks)
        n_machines = n_sub
        cycle_probability = 0.0
    import yaml

    programs = {}
    actions = []
    for j in range(n_exploits):
        name = f"svc{j}"
        patch = float(rng.uniform(0.005, 0.04))
        programs[name] = {
            "states": ["vulnerable", "patched"],
            "transitions": {
                "vulnerable": {"vulnerable": 1.0 - patch, "patched": patch},
                "patched": {"patched": 1.0},
            },
            "port": 3000 + j,
            "open_states": ["vulnerable"],
        }
        exploit = {
            "id": f"x{j}",
            "kind": EXPLOIT,
            "port": 3000 + j,
            "program": name,
            "success": {name: ["vulnerable"]},
        }
        if rng.random() < 0.2:
            exploit["crash"] = {name: ["patched"]}
        actions.append(exploit)
        actions.append({"id": f"s{j}", "kind": PORT_SCAN, "port": 3000 + j})

    # at most two vulnerable services per template so the cross-product
    # baseline stays buildable for these sizes
    n_templates = int(rng.integers(1, 4))
    templates = {}
    for t in range(n_templates):
        n_vulnerable = int(rng.integers(0, min(2, n_exploits) + 1))
        vulnerable = set(
            int(j) for j in rng.choice(n_exploits, size=n_vulnerable, replace=False)
        )
        templates[f"t{t}"] = {
            f"svc{j}": ("vulnerable" if j in vulnerable else "patched")
            for j in range(n_exploits)
        }

    subnetworks = ["start"] + [f"n{k}" for k in range(n_sub)]
    arcs = []
    seen_pairs = set()

    def add_arc(src, dst):
        if src == dst or (src, dst) in seen_pairs:
            return
        seen_pairs.add((src, dst))
        blocked = sorted(
            int(3000 + j) for j in range(n_exploits) if rng.random() < 0.2
        )
        arcs.append({"from": src, "to": dst, "blocked_ports": blocked})

    for k in range(n_sub):
        parent = "start" if k == 0 else f"n{int(rng.integers(0, k))}"
        add_arc(parent, f"n{k}")
    while rng.random() < cycle_probability and n_sub >= 2:
        a, b = rng.choice(n_sub, size=2, replace=False)
        add_arc(f"n{a}", f"n{b}")

    machines = [{"id": "attacker", "subnetwork": "start", "reward": 0.0}]
    for i in range(n_machines):
        subnet = f"n{i}" if singleton_tree else f"n{int(rng.integers(0, n_sub))}"
        machines.append(
            {
                "id": f"m{i}",
                "subnetwork": subnet,
                "template": f"t{int(rng.integers(0, n_templates))}",
                "reward": float(rng.choice([0.0, 50.0, 100.0, 500.0])),
            }
        )
    if all(m["reward"] == 0.0 for m in machines):
        machines[-1]["reward"] = 100.0

    doc = {
        "start": "start",
        "elapsed_days": int(rng.integers(0, 60)),
        "costs": {"port_scan": 10.0, "os_detect": 50.0, "exploit": 10.0, "detect_risk": 0.0},
        "subnetworks": subnetworks,
        "machines": machines,
        "arcs": arcs,
        "programs": programs,
        "templates": templates,
        "actions": actions,
    }
    from .scenario import parse_scenario

    return parse_scenario(yaml.safe_dump(doc, sort_keys=True))


# --- experiment runner -------------------------------------------------------


@dataclass
class ExperimentCell:
    machines: int
    exploits: int
    seed: int
    decomposed_value: float = float("nan")
    decomposed_mean: float = float("nan")
    decomposed_stderr: float = float("nan")
    decomposed_seconds: float = float("nan")
    global_value: float = float("nan")
    global_mean: float = float("nan")
    global_stderr: float = float("nan")
    global_seconds: float = float("nan")
    gap_percent: float = float("nan")


def run_experiment(
    mode: str,
    machine_counts,
    exploit_counts,
    repetitions: int = 2000,
    elapsed_days: int = 50,
    seed: int = 0,
    max_global_states: int = DEFAULT_GLOBAL_STATE_BOUND,
    component_size_limit: int = 12,
):
    """Run the planner(s) over a size grid and report quality and runtime.

    ``mode`` is ``decomposed``, ``global`` or ``both``; the quality gap is
    (global mean - decomposed mean) in percent of the global mean, both
    estimated from ``repetitions`` simulated attacks (0 skips simulation).
    """
    if mode not in ("decomposed", "global", "both"):
        raise BenchmarkError(f"unknown mode {mode!r}")
    cells = []
    for n_machines, n_exploits in itertools.product(machine_counts, exploit_counts):
        params = BenchmarkParams(
            machines=n_machines,
            exploits=n_exploits,
            elapsed_days=elapsed_days,
            seed=seed,
        )
        spec = generate_benchmark(params)
        cell = ExperimentCell(machines=n_machines, exploits=n_exploits, seed=seed)

        if mode in ("decomposed", "both"):
            started = time.perf_counter()
            plan = plan_attack(spec, component_size_limit=component_size_limit)
            cell.decomposed_seconds = time.perf_counter() - started
            cell.decomposed_value = plan.value
            if repetitions > 0:
                cell.decomposed_mean, cell.decomposed_stderr = monte_carlo(
                    spec, plan, repetitions, seed
                )

        if mode in ("global", "both"):
            started = time.perf_counter()
            gp = build_global_pomdp(spec, max_states=max_global_states)
            solved = solve(gp.pomdp)
            cell.global_seconds = time.perf_counter() - started
            cell.global_value = solved.value
            if repetitions > 0:
                beliefs = scenario_beliefs(spec)
                seeds = np.random.SeedSequence(seed).generate_state(repetitions)
                totals = np.empty(repetitions)
                for i in range(repetitions):
                    truth = sample_ground_truth(beliefs, int(seeds[i]))
                    configs = {
                        mid: cfg for mid, cfg in truth.configs.items() if cfg is not None
                    }
                    state = gp.state_from_configs(configs)
                    totals[i] = rollout_pomdp(gp.pomdp, solved.policy, state).total
                cell.global_mean = float(totals.mean())
                cell.global_stderr = float(
                    totals.std(ddof=1) / np.sqrt(repetitions) if repetitions > 1 else 0.0
                )

        if mode == "both" and repetitions > 0:
            if cell.global_mean > 0:
                cell.gap_percent = (
                    100.0 * (cell.global_mean - cell.decomposed_mean) / cell.global_mean
                )
            else:
                cell.gap_percent = 0.0
        cells.append(cell)
    return cells


def experiment_csv(cells) -> str:
    """Comma-separated table, one row per grid cell."""
    out = io.StringIO()
    fields = [
        "machines",
        "exploits",
        "seed",
        "decomposed_value",
        "decomposed_mean",
        "decomposed_stderr",
        "decomposed_seconds",
        "global_value",
        "global_mean",
        "global_stderr",
        "global_seconds",
        "gap_percent",
    ]
    writer = csv.DictWriter(out, fieldnames=fields)
    writer.writeheader()
    for c in cells:
        writer.writerow({f: getattr(c, f) for f in fields})
    return out.getvalue()
