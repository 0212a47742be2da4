"""Single-machine attack POMDP with deterministic action outcomes.

States are the machine's candidate configurations (plus crash variants, a
``controlled`` state and a ``terminal`` state).  Scans, exploits and the
terminate action induce deterministic transitions and observations, so the
transition and observation functions are plain maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .belief import DependencyModel, check_normalized
from .netmodel import Firewall, Machine, action_usable, check_port

TERMINAL = "terminal"
CONTROLLED = "controlled"

OBS_SUCCEEDED = "succeeded"
OBS_FAILED = "failed"
OBS_OPEN = "open"
OBS_CLOSED = "closed"
OBS_NONE = "none"

PORT_SCAN = "port_scan"
OS_DETECT = "os_detect"
EXPLOIT = "exploit"
TERMINATE = "terminate"

TERMINATE_ID = "terminate"


class ModelError(Exception):
    pass


def os_report(label: str) -> tuple:
    return ("os", label)


@dataclass(frozen=True)
class ConfigState:
    """A candidate configuration together with the set of crashed programs."""

    config: tuple
    crashed: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "config", tuple(self.config))
        object.__setattr__(self, "crashed", frozenset(self.crashed))


@dataclass(frozen=True)
class ActionSpec:
    """A scan, OS-detection, exploit or terminate action.

    For exploits, ``success`` and ``crash`` are conjunctive predicates
    mapping program names to the version labels they accept; ``program``
    names the targeted program (marked crashed on a crashing failure).
    Costs are stored as the non-positive reward components r_t and r_d.
    """

    id: str
    kind: str
    port: int | None = None
    program: str | None = None
    success: dict = field(default_factory=dict)
    crash: dict = field(default_factory=dict)
    r_t: float = 0.0
    r_d: float = 0.0

    def __post_init__(self):
        if self.kind not in (PORT_SCAN, OS_DETECT, EXPLOIT, TERMINATE):
            raise ModelError(f"unknown action kind {self.kind!r}")
        if self.kind in (PORT_SCAN, EXPLOIT):
            if self.port is None:
                raise ModelError(f"action {self.id!r} ({self.kind}) needs a target port")
            check_port(self.port)
        if self.kind == EXPLOIT and self.program is None:
            raise ModelError(f"exploit {self.id!r} needs a target program")
        if self.r_t > 0 or self.r_d > 0:
            raise ModelError(f"action {self.id!r}: cost components must be non-positive")
        object.__setattr__(
            self, "success", {p: frozenset(v) for p, v in self.success.items()}
        )
        object.__setattr__(
            self, "crash", {p: frozenset(v) for p, v in self.crash.items()}
        )

    def matches(self, predicate: dict, model: DependencyModel, config: tuple) -> bool:
        if not predicate:
            return False
        return all(model.version(config, p) in versions for p, versions in predicate.items())


TERMINATE_ACTION = ActionSpec(id=TERMINATE_ID, kind=TERMINATE)


@dataclass(frozen=True)
class RewardSpec:
    """Additive reward components: success value, duration cost, detection cost."""

    r_e: dict = field(default_factory=dict)  # exploit id -> success reward
    r_t: dict = field(default_factory=dict)  # action id -> non-positive duration cost
    r_d: dict = field(default_factory=dict)  # action id -> non-positive detection cost

    @classmethod
    def from_actions(cls, actions, success_reward: float) -> "RewardSpec":
        return cls(
            r_e={a.id: success_reward for a in actions if a.kind == EXPLOIT},
            r_t={a.id: a.r_t for a in actions},
            r_d={a.id: a.r_d for a in actions},
        )

    def cost(self, action_id: str) -> float:
        return self.r_t.get(action_id, 0.0) + self.r_d.get(action_id, 0.0)


@dataclass(frozen=True)
class MachinePOMDP:
    """Explicit tabular POMDP for attacking one machine through one firewall."""

    machine_id: str
    model: DependencyModel
    states: tuple
    actions: tuple  # firewall-filtered; terminate always present
    observations: tuple
    transition: dict  # (state, action id) -> state
    observation: dict  # (next state, action id) -> observation
    reward: dict  # (state, action id, next state) -> reward
    b0: dict  # state -> probability

    def action(self, action_id: str) -> ActionSpec:
        for a in self.actions:
            if a.id == action_id:
                return a
        raise KeyError(action_id)


def local_outcome(model: DependencyModel, action: ActionSpec, state: ConfigState):
    """Deterministic outcome of a scan/exploit on one configuration state.

    Returns ``(next_state, observation, success)`` where ``next_state`` is
    ``CONTROLLED`` on a successful exploit.  Crashed programs read as
    closed ports and can no longer be exploited.
    """
    config, crashed = state.config, state.crashed
    if action.kind == PORT_SCAN:
        is_open = False
        for p in model.programs:
            if p.port == action.port and p.name not in crashed:
                if model.version(config, p.name) in p.open_states:
                    is_open = True
                    break
        return state, (OBS_OPEN if is_open else OBS_CLOSED), False
    if action.kind == OS_DETECT:
        label = "unknown"
        for p in model.programs:
            if p.is_os:
                label = model.version(config, p.name)
                break
        return state, os_report(label), False
    if action.kind == EXPLOIT:
        alive = action.program not in crashed
        succeeds = alive and action.matches(action.success, model, config)
        crashes = alive and action.matches(action.crash, model, config)
        if succeeds and crashes:
            raise ModelError(
                f"exploit {action.id!r}: success and crash predicates overlap "
                f"on configuration {config!r}"
            )
        if succeeds:
            return CONTROLLED, OBS_SUCCEEDED, True
        if crashes:
            return ConfigState(config, crashed | {action.program}), OBS_FAILED, False
        return state, OBS_FAILED, False
    raise ModelError(f"no outcome semantics for action kind {action.kind!r}")


def informative_actions(model: DependencyModel, states, actions):
    """Drop actions that are provably valueless on every given configuration state.

    An exploit that can neither succeed nor crash anywhere, or a scan whose
    observation is the same constant everywhere, changes no reachable belief
    and can only cost.  An exploit that never succeeds but sometimes crashes
    is also dropped when the crash is invisible: no action in the catalog
    observes the crashed program differently afterwards (checked only when
    the program's port is unshared, which keeps the argument sound).  Large
    shared catalogs shrink to the per-machine relevant few.
    """
    kept = []
    for a in actions:
        outcomes = set()
        can_succeed = False
        crashes = False
        for s in states:
            nxt, obs, success = local_outcome(model, a, s)
            outcomes.add(obs)
            if success:
                can_succeed = True
            elif nxt != s:
                crashes = True
        if can_succeed or len(outcomes) > 1:
            kept.append(a)
            continue
        if crashes and not _crash_invisible(model, states, actions, a):
            kept.append(a)
    return kept


def _crash_invisible(model: DependencyModel, states, actions, action) -> bool:
    """Whether crashing ``action.program`` can never change any later observation.

    Compares, for every state and every catalog action, the one-step
    observation and success flag with and without the extra crash flag.
    Crash flags accumulate monotonically, so one-step agreement everywhere
    implies the crashed and uncrashed runs stay indistinguishable forever.
    The check is skipped (reported visible) when another program shares the
    crashed program's port, where the one-step argument does not hold.
    """
    crashed_program = model.program(action.program)
    if crashed_program.port is not None and any(
        p.port == crashed_program.port and p.name != crashed_program.name
        for p in model.programs
    ):
        return False
    for s in states:
        flagged = ConfigState(s.config, s.crashed | {action.program})
        for b in actions:
            _, obs0, suc0 = local_outcome(model, b, s)
            _, obs1, suc1 = local_outcome(model, b, flagged)
            if obs0 != obs1 or suc0 != suc1:
                return False
    return True


def build_machine_pomdp(
    machine: Machine,
    firewall: Firewall,
    break_in_reward: float,
    belief: dict,
    actions,
    model: DependencyModel,
    rewards: RewardSpec | None = None,
    prune_inert_actions: bool = False,
) -> MachinePOMDP:
    """Assemble the POMDP for attacking ``machine`` through ``firewall``.

    ``belief`` is the machine's configuration belief; ``break_in_reward``
    is credited once, on the transition into the controlled state.  With
    ``prune_inert_actions`` the action set additionally drops catalog
    entries that provably do nothing on this machine's belief support.
    """
    if break_in_reward < 0:
        raise ModelError("break-in reward must be non-negative")
    if not belief:
        raise ModelError("empty belief support")
    check_normalized(belief)

    catalog = [a for a in actions if a.kind != TERMINATE and action_usable(a, firewall)]
    usable = catalog
    if prune_inert_actions:
        # pre-prune on the belief support so that valueless crash-only
        # exploits never inflate the crash closure computed next
        usable = informative_actions(model, [ConfigState(c) for c in belief], catalog)

    def crash_closure(active):
        frontier = [ConfigState(c) for c in belief]
        closed = set(frontier)
        while frontier:
            s = frontier.pop()
            for a in active:
                if a.kind != EXPLOIT:
                    continue
                nxt, _, _ = local_outcome(model, a, s)
                if isinstance(nxt, ConfigState) and nxt not in closed:
                    closed.add(nxt)
                    frontier.append(nxt)
        return closed

    config_states = crash_closure(usable)
    if prune_inert_actions:
        # re-judge the full catalog on the closure: scans that only become
        # informative after a crash are revived here
        usable = informative_actions(model, config_states, catalog)
        config_states = crash_closure(usable)
    usable = list(usable)
    usable.append(TERMINATE_ACTION)
    if rewards is None:
        rewards = RewardSpec.from_actions(usable, break_in_reward)

    ordered_configs = sorted(config_states, key=lambda s: (s.config, sorted(s.crashed)))
    states = (TERMINAL, CONTROLLED) + tuple(ordered_configs)

    transition, observation, reward = {}, {}, {}
    observations = set()
    for a in usable:
        cost = rewards.cost(a.id)
        if a.kind == TERMINATE:
            for s in states:
                transition[(s, a.id)] = TERMINAL
                reward[(s, a.id, TERMINAL)] = 0.0
            observation[(TERMINAL, a.id)] = OBS_NONE
            observations.add(OBS_NONE)
            continue
        # terminal and controlled are absorbing
        transition[(TERMINAL, a.id)] = TERMINAL
        observation[(TERMINAL, a.id)] = OBS_NONE
        reward[(TERMINAL, a.id, TERMINAL)] = 0.0
        transition[(CONTROLLED, a.id)] = CONTROLLED
        observation[(CONTROLLED, a.id)] = (
            OBS_SUCCEEDED if a.kind == EXPLOIT else OBS_NONE
        )
        reward[(CONTROLLED, a.id, CONTROLLED)] = cost
        observations.update({OBS_NONE, observation[(CONTROLLED, a.id)]})
        for s in ordered_configs:
            nxt, obs, success = local_outcome(model, a, s)
            transition[(s, a.id)] = nxt
            prev = observation.get((nxt, a.id))
            if prev is not None and prev != obs:
                raise ModelError(
                    f"observation for ({nxt!r}, {a.id!r}) is not deterministic"
                )
            observation[(nxt, a.id)] = obs
            observations.add(obs)
            r = cost + (rewards.r_e.get(a.id, break_in_reward) if success else 0.0)
            reward[(s, a.id, nxt)] = r

    b0 = {ConfigState(c): m for c, m in belief.items()}
    return MachinePOMDP(
        machine_id=machine.id,
        model=model,
        states=states,
        actions=tuple(usable),
        observations=tuple(sorted(observations, key=str)),
        transition=transition,
        observation=observation,
        reward=reward,
        b0=b0,
    )


def step(pomdp: MachinePOMDP, state, action: ActionSpec):
    """Apply one action to a concrete state: ``(next state, observation, reward)``."""
    if all(a.id != action.id for a in pomdp.actions):
        raise ModelError(f"action {action.id!r} not available (firewall-filtered?)")
    if state not in pomdp.states:
        raise ModelError(f"unknown state {state!r}")
    nxt = pomdp.transition[(state, action.id)]
    obs = pomdp.observation[(nxt, action.id)]
    return nxt, obs, pomdp.reward[(state, action.id, nxt)]


def belief_step(pomdp: MachinePOMDP, belief: dict, action: ActionSpec):
    """Group the deterministic outcomes of ``action`` over a belief.

    Returns one ``(observation, posterior, probability, expected reward)``
    entry per observation with positive mass; probabilities sum to 1 and
    the expected reward of an entry is conditioned on its observation.
    """
    check_normalized(belief)
    grouped = {}  # obs -> [posterior dict, prob, reward mass]
    for s, mass in belief.items():
        nxt = pomdp.transition[(s, action.id)]
        obs = pomdp.observation[(nxt, action.id)]
        r = pomdp.reward[(s, action.id, nxt)]
        post, prob, rmass = grouped.setdefault(obs, [{}, 0.0, 0.0])
        post[nxt] = post.get(nxt, 0.0) + mass
        grouped[obs][1] = prob + mass
        grouped[obs][2] = rmass + mass * r
    out = []
    for obs in sorted(grouped, key=str):
        post, prob, rmass = grouped[obs]
        out.append((obs, {s: m / prob for s, m in post.items()}, prob, rmass / prob))
    return out


def merge_indistinguishable(pomdp: MachinePOMDP) -> MachinePOMDP:
    """Optional canonicalization: merge states no action can tell apart.

    Two states are merged when, for every action, they yield the same
    observation, the same reward and successor states in the same class
    (a bisimulation quotient).  Off by default in the builder to keep the
    explicit configuration enumeration inspectable.
    """
    action_ids = [a.id for a in pomdp.actions]
    # initial partition: by per-action (observation, reward) signature
    def signature(s, classes):
        sig = []
        for aid in action_ids:
            nxt = pomdp.transition[(s, aid)]
            sig.append(
                (
                    pomdp.observation[(nxt, aid)],
                    round(pomdp.reward[(s, aid, nxt)], 12),
                    classes[nxt] if classes else None,
                )
            )
        return tuple(sig)

    classes = {s: 0 for s in pomdp.states}
    classes[TERMINAL] = 1
    classes[CONTROLLED] = 2
    while True:
        sigs = {}
        new_classes = {}
        for s in pomdp.states:
            key = (classes[s], signature(s, classes))
            if key not in sigs:
                sigs[key] = len(sigs)
            new_classes[s] = sigs[key]
        if new_classes == classes:
            break
        classes = new_classes

    reps = {}
    for s in pomdp.states:  # first state of each class is its representative
        reps.setdefault(classes[s], s)
    rep_of = {s: reps[classes[s]] for s in pomdp.states}
    states = tuple(dict.fromkeys(rep_of[s] for s in pomdp.states))
    transition, observation, reward = {}, {}, {}
    for s in states:
        for aid in action_ids:
            nxt = rep_of[pomdp.transition[(s, aid)]]
            transition[(s, aid)] = nxt
            observation[(nxt, aid)] = pomdp.observation[(pomdp.transition[(s, aid)], aid)]
            reward[(s, aid, nxt)] = pomdp.reward[(s, aid, pomdp.transition[(s, aid)])]
    b0 = {}
    for s, m in pomdp.b0.items():
        r = rep_of[s]
        b0[r] = b0.get(r, 0.0) + m
    return MachinePOMDP(
        machine_id=pomdp.machine_id,
        model=pomdp.model,
        states=states,
        actions=pomdp.actions,
        observations=pomdp.observations,
        transition=transition,
        observation=observation,
        reward=reward,
        b0=b0,
    )


def dump_tables(pomdp: MachinePOMDP) -> str:
    """Explicit tabular dump (states, transitions, observations, rewards)."""
    lines = [f"machine {pomdp.machine_id}: {len(pomdp.states)} states"]
    index = {s: i + 1 for i, s in enumerate(pomdp.states)}
    for s in pomdp.states:
        lines.append(f"  state {index[s]}: {_state_label(s)}  b0={pomdp.b0.get(s, 0.0):.6f}")
    for a in pomdp.actions:
        lines.append(f"  action {a.id} ({a.kind})")
        for s in pomdp.states:
            nxt = pomdp.transition[(s, a.id)]
            obs = pomdp.observation[(nxt, a.id)]
            r = pomdp.reward[(s, a.id, nxt)]
            lines.append(f"    {index[s]} -> {index[nxt]}  obs={obs}  r={r:g}")
    return "\n".join(lines)


def _state_label(state) -> str:
    if isinstance(state, ConfigState):
        crashed = f" crashed={sorted(state.crashed)}" if state.crashed else ""
        return "/".join(state.config) + crashed
    return str(state)
