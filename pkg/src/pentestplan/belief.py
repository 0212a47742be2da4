"""Initial-belief construction from per-program update models.

Each program's uncertain evolution between pentests is a daily Markov chain
over its version labels.  Programs are composed into a dependency DBN whose
per-step joint is filtered by a compatibility predicate; unrolling the DBN
from the last known configuration for the elapsed number of days yields the
initial belief over a machine's configurations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ROW_SUM_TOL = 1e-12
BELIEF_SUM_TOL = 1e-9


class BeliefError(Exception):
    pass


@dataclass(frozen=True)
class MarkovChain:
    """Row-stochastic daily transition model over version labels."""

    states: tuple
    transition: np.ndarray  # transition[i][j] = Pr(next=states[j] | now=states[i])

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        t = np.asarray(self.transition, dtype=float)
        object.__setattr__(self, "transition", t)
        if t.shape != (len(self.states), len(self.states)):
            raise BeliefError(
                f"transition matrix shape {t.shape} does not match "
                f"{len(self.states)} states"
            )
        if np.any(t < 0) or np.any(t > 1):
            raise BeliefError("transition entries must lie in [0, 1]")
        if np.any(np.abs(t.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise BeliefError("transition rows must sum to 1")

    def index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise BeliefError(f"unknown version label {label!r}") from None


@dataclass(frozen=True)
class ProgramModel:
    """A program: its update chain, dependency parents, and port metadata.

    ``port``/``open_states`` describe which versions leave the program's
    port open to scans; ``is_os`` marks the operating system (reported by
    OS-detection actions).
    """

    name: str
    chain: MarkovChain
    parents: tuple = ()
    port: int | None = None
    open_states: frozenset = frozenset()
    is_os: bool = False

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "open_states", frozenset(self.open_states))


@dataclass(frozen=True)
class DependencyModel:
    """Programs plus a compatibility predicate over joint configurations.

    ``compatibility`` maps a program name to the set of allowed tuples
    (program version, parent1 version, ...); programs without an entry are
    unconstrained.  The parent graph must be acyclic.
    """

    programs: tuple
    compatibility: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "programs", tuple(self.programs))
        names = [p.name for p in self.programs]
        if len(set(names)) != len(names):
            raise BeliefError("duplicate program names")
        known = set(names)
        for p in self.programs:
            for parent in p.parents:
                if parent not in known:
                    raise BeliefError(
                        f"program {p.name!r} depends on unknown program {parent!r}"
                    )
        self._check_acyclic()
        for name in self.compatibility:
            if name not in known:
                raise BeliefError(f"compatibility constraint on unknown program {name!r}")

    def _check_acyclic(self):
        parents = {p.name: set(p.parents) for p in self.programs}
        seen, stack = set(), set()

        def visit(n):
            if n in stack:
                raise BeliefError("program dependency graph has a cycle")
            if n in seen:
                return
            stack.add(n)
            for q in parents[n]:
                visit(q)
            stack.discard(n)
            seen.add(n)

        for n in parents:
            visit(n)

    @property
    def names(self) -> tuple:
        return tuple(p.name for p in self.programs)

    def program(self, name: str) -> ProgramModel:
        for p in self.programs:
            if p.name == name:
                return p
        raise KeyError(name)

    def version(self, config: tuple, name: str) -> str:
        return config[self.names.index(name)]

    def compatible(self, config: tuple) -> bool:
        """Whether a configuration tuple satisfies every dependency constraint."""
        by_name = dict(zip(self.names, config))
        for p in self.programs:
            allowed = self.compatibility.get(p.name)
            if allowed is None:
                continue
            key = (by_name[p.name],) + tuple(by_name[q] for q in p.parents)
            if key not in allowed:
                return False
        return True


def evolve_chain(chain: MarkovChain, start: str, days: int) -> dict:
    """Distribution over version labels after ``days`` daily steps from ``start``."""
    if days < 0:
        raise BeliefError("days must be non-negative")
    i = chain.index(start)
    row = np.linalg.matrix_power(chain.transition, days)[i]
    return {s: p for s, p in zip(chain.states, row) if p > 0.0}


def initial_belief(
    model: DependencyModel,
    start_config: tuple,
    days: int,
    renormalize_each_day: bool = True,
) -> dict:
    """Joint belief over configuration tuples after unrolling the DBN.

    Each day every program takes one chain step, mass on incompatible
    tuples is zeroed, and (by default) the distribution is renormalized
    before the next day.  With ``renormalize_each_day=False`` the filtered
    mass is renormalized once at the end instead.
    """
    if days < 0:
        raise BeliefError("days must be non-negative")
    if len(start_config) != len(model.programs):
        raise BeliefError(
            f"configuration has {len(start_config)} entries, expected "
            f"{len(model.programs)}"
        )
    for p, v in zip(model.programs, start_config):
        p.chain.index(v)
    if not model.compatible(start_config):
        raise BeliefError(f"start configuration {start_config!r} is incompatible")

    if not model.compatibility:
        # independent programs: the joint is exactly the product of the
        # per-chain marginals, no day-by-day joint expansion needed
        marginals = [
            evolve_chain(p.chain, v, days) for p, v in zip(model.programs, start_config)
        ]
        belief = {(): 1.0}
        for marginal in marginals:
            belief = {
                prefix + (version,): mass * q
                for prefix, mass in belief.items()
                for version, q in marginal.items()
            }
        total = sum(belief.values())
        return {c: m / total for c, m in belief.items()}

    belief = {tuple(start_config): 1.0}
    rows = {p.name: p.chain.transition for p in model.programs}
    for _ in range(days):
        stepped = {}
        for config, mass in belief.items():
            # one-day product expansion over per-program transitions
            partial = [((), mass)]
            for p, v in zip(model.programs, config):
                row = rows[p.name][p.chain.index(v)]
                nxt = []
                for prefix, pm in partial:
                    for j, q in enumerate(row):
                        if q > 0.0:
                            nxt.append((prefix + (p.chain.states[j],), pm * q))
                partial = nxt
            for new_config, pm in partial:
                stepped[new_config] = stepped.get(new_config, 0.0) + pm
        belief = {c: m for c, m in stepped.items() if m > 0.0 and model.compatible(c)}
        if not belief:
            raise BeliefError("all probability mass filtered out; dependency model inconsistent")
        if renormalize_each_day:
            total = sum(belief.values())
            belief = {c: m / total for c, m in belief.items()}
    total = sum(belief.values())
    return {c: m / total for c, m in belief.items()}


def condition(belief: dict, predicate: Callable[[tuple], bool]) -> dict:
    """Bayesian conditioning: keep satisfying configurations, renormalize."""
    kept = {c: m for c, m in belief.items() if predicate(c)}
    total = sum(kept.values())
    if total <= 0.0:
        raise BeliefError("conditioning on a zero-probability observation")
    return {c: m / total for c, m in kept.items()}


def check_normalized(belief: dict, tol: float = BELIEF_SUM_TOL):
    total = sum(belief.values())
    if abs(total - 1.0) > tol or any(m < 0 for m in belief.values()):
        raise BeliefError(f"belief not normalized (sum={total})")
