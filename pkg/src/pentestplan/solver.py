"""Exact policy search over the finite reachable belief space.

Because every action outcome is deterministic in the hidden configuration,
conditioning can only shrink a belief's support or advance its crash flags,
so depth-first expectimax with belief memoization terminates and is exact.
The undiscounted value is floored at 0 by the terminate action.

``brute_force_value`` is an independent depth-bounded policy enumeration
used as an oracle in tests; it shares no traversal code with ``solve``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .pomdp import MachinePOMDP, ActionSpec, TERMINATE, TERMINATE_ACTION

BELIEF_ROUND = 12  # probability rounding before memoization


class SolverError(Exception):
    pass


@dataclass
class PolicyNode:
    """Observation-branching decision tree; leaves carry the terminate action."""

    action: ActionSpec
    branches: dict = field(default_factory=dict)  # observation -> PolicyNode
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.action.kind == TERMINATE


@dataclass
class SolveStats:
    nodes_expanded: int = 0
    cache_hits: int = 0


@dataclass
class SolveResult:
    value: float
    policy: PolicyNode
    stats: SolveStats


def _belief_key(belief: dict) -> tuple:
    return tuple(sorted(((i, round(p, BELIEF_ROUND)) for i, p in belief.items())))


class _Search:
    """One solve run: indexed tables, memo table, policy reconstruction."""

    def __init__(self, pomdp: MachinePOMDP):
        self.pomdp = pomdp
        self.index = {s: i for i, s in enumerate(pomdp.states)}
        self.actions = [a for a in pomdp.actions if a.kind != TERMINATE]
        # outcome[a][state index] = (next index, observation, reward)
        self.outcome = []
        for a in self.actions:
            row = {}
            for s in pomdp.states:
                nxt = pomdp.transition[(s, a.id)]
                row[self.index[s]] = (
                    self.index[nxt],
                    pomdp.observation[(nxt, a.id)],
                    pomdp.reward[(s, a.id, nxt)],
                )
            self.outcome.append(row)
        self.memo = {}  # belief key -> (value, best action position or None)
        self.stats = SolveStats()

    def split(self, belief: dict, apos: int):
        """Outcome groups for one action: {obs: (posterior, prob, mean reward)}."""
        row = self.outcome[apos]
        grouped = {}
        for i, mass in belief.items():
            nidx, obs, r = row[i]
            entry = grouped.get(obs)
            if entry is None:
                entry = grouped[obs] = [{}, 0.0, 0.0]
            post, _, _ = entry
            post[nidx] = post.get(nidx, 0.0) + mass
            entry[1] += mass
            entry[2] += mass * r
        return {
            obs: ({i: m / prob for i, m in post.items()}, prob, rmass / prob)
            for obs, (post, prob, rmass) in grouped.items()
        }

    def value(self, belief: dict) -> float:
        key = _belief_key(belief)
        hit = self.memo.get(key)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit[0]
        self.stats.nodes_expanded += 1
        self.memo[key] = (0.0, None)  # placeholder; cycles are impossible by construction
        best, best_pos = 0.0, None
        for apos in range(len(self.actions)):
            groups = self.split(belief, apos)
            if len(groups) == 1:
                (post, _, _) = next(iter(groups.values()))
                if _belief_key(post) == key:
                    continue  # no new information, no state change: provably valueless
            v = 0.0
            for obs in groups:
                post, prob, r = groups[obs]
                v += prob * (r + self.value(post))
            if v > best:
                best, best_pos = v, apos
        self.memo[key] = (best, best_pos)
        return best

    def extract_policy(self, belief: dict) -> PolicyNode:
        value, best_pos = self.memo[_belief_key(belief)]
        if best_pos is None:
            return PolicyNode(TERMINATE_ACTION, {}, 0.0)
        node = PolicyNode(self.actions[best_pos], {}, value)
        for obs, (post, _, _) in sorted(
            self.split(belief, best_pos).items(), key=lambda kv: str(kv[0])
        ):
            node.branches[obs] = self.extract_policy(post)
        return node


def solve(pomdp: MachinePOMDP, from_belief: dict | None = None) -> SolveResult:
    """Optimal undiscounted value and policy, starting from ``b0`` by default."""
    search = _Search(pomdp)
    belief = pomdp.b0 if from_belief is None else from_belief
    belief_idx = {search.index[s]: p for s, p in belief.items()}
    value = search.value(belief_idx)
    policy = search.extract_policy(belief_idx)
    return SolveResult(value=value, policy=policy, stats=search.stats)


def evaluate_policy(pomdp: MachinePOMDP, policy: PolicyNode, from_belief: dict | None = None) -> float:
    """Exact expected total reward of a policy by forward belief propagation."""
    belief = pomdp.b0 if from_belief is None else from_belief

    def walk(node: PolicyNode, b: dict) -> float:
        if node.is_leaf:
            return 0.0
        grouped = {}
        for s, mass in b.items():
            nxt = pomdp.transition[(s, node.action.id)]
            obs = pomdp.observation[(nxt, node.action.id)]
            r = pomdp.reward[(s, node.action.id, nxt)]
            entry = grouped.setdefault(obs, [{}, 0.0, 0.0])
            entry[0][nxt] = entry[0].get(nxt, 0.0) + mass
            entry[1] += mass
            entry[2] += mass * r
        total = 0.0
        for obs, (post, prob, rmass) in grouped.items():
            child = node.branches.get(obs)
            if child is None:
                raise SolverError(f"policy has no branch for observation {obs!r}")
            total += rmass + prob * walk(child, {s: m / prob for s, m in post.items()})
        return total

    return walk(policy, belief)


def brute_force_value(pomdp: MachinePOMDP, max_depth: int) -> float:
    """Oracle: exhaustive depth-bounded enumeration of contingent policies.

    Considers every action at every history (no memoization, no pruning
    other than flooring each subtree's value at 0 via terminate) and
    returns the best expected value.  Intentionally independent of
    ``solve``: exponential, usable only on small instances.
    """
    actions = [a for a in pomdp.actions if a.kind != TERMINATE]
    if len(pomdp.states) > 32 or len(actions) > 8 or max_depth > 16:
        raise SolverError(
            "brute-force oracle limited to small instances "
            "(<= 32 states, <= 8 actions, depth <= 16)"
        )
    trans = pomdp.transition
    obs_of = pomdp.observation
    rew = pomdp.reward

    def best(belief_items, depth):
        value = 0.0  # terminate
        if depth == 0:
            return value
        for a in actions:
            grouped = {}
            for s, mass in belief_items:
                nxt = trans[(s, a.id)]
                o = obs_of[(nxt, a.id)]
                entry = grouped.setdefault(o, [{}, 0.0, 0.0])
                entry[0][nxt] = entry[0].get(nxt, 0.0) + mass
                entry[1] += mass
                entry[2] += mass * rew[(s, a.id, nxt)]
            v = 0.0
            for post, prob, rmass in grouped.values():
                v += rmass + prob * best(
                    tuple((s, m / prob) for s, m in post.items()), depth - 1
                )
            if v > value:
                value = v
        return value

    return best(tuple(pomdp.b0.items()), max_depth)


# --- policy text format -----------------------------------------------------
#
# node       := action-id " value=" fixed6 NEWLINE branch*
# branch     := indent observation ": " node          (indent = 2 spaces/level)
# observation:= "succeeded" | "failed" | "open" | "closed" | "none" | "os=" label


def obs_to_str(obs) -> str:
    if isinstance(obs, tuple) and len(obs) == 2 and obs[0] == "os":
        return f"os={obs[1]}"
    return str(obs)


def obs_from_str(text: str):
    if text.startswith("os="):
        return ("os", text[3:])
    return text


def format_policy(node: PolicyNode, indent: int = 0) -> str:
    pad = "  " * indent
    lines = [f"{pad}{node.action.id} value={node.value:.6f}"]
    for obs in sorted(node.branches, key=str):
        child = format_policy(node.branches[obs], indent + 1)
        child_first, _, child_rest = child.partition("\n")
        lines.append(f"{pad}  {obs_to_str(obs)}: {child_first.strip()}")
        if child_rest:
            lines.append(child_rest)
    return "\n".join(lines)


def parse_policy(text: str, actions) -> PolicyNode:
    """Inverse of ``format_policy``; ``actions`` resolves action ids."""
    catalog = {a.id: a for a in actions}
    catalog.setdefault(TERMINATE_ACTION.id, TERMINATE_ACTION)
    lines = [ln for ln in text.splitlines() if ln.strip()]

    def parse_node(pos, level):
        line = lines[pos]
        depth = (len(line) - len(line.lstrip())) // 2
        if depth != level:
            raise SolverError(f"bad indentation at line {pos + 1}: {line!r}")
        body = line.strip()
        obs = None
        if ": " in body and level > 0:
            obs_text, body = body.split(": ", 1)
            obs = obs_from_str(obs_text)
        try:
            action_id, value_text = body.rsplit(" value=", 1)
        except ValueError:
            raise SolverError(f"malformed policy line: {line!r}") from None
        if action_id not in catalog:
            raise SolverError(f"unknown action id {action_id!r} in policy")
        node = PolicyNode(catalog[action_id], {}, float(value_text))
        pos += 1
        while pos < len(lines):
            nxt = lines[pos]
            nxt_depth = (len(nxt) - len(nxt.lstrip())) // 2
            if nxt_depth <= level:
                break
            child_obs, child, pos = parse_node(pos, level + 1)
            node.branches[child_obs] = child
        return obs, node, pos

    if not lines:
        raise SolverError("empty policy text")
    _, root, pos = parse_node(0, 0)
    if pos != len(lines):
        raise SolverError(f"trailing content at line {pos + 1}")
    return root
