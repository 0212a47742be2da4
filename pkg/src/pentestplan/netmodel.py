"""Logical network model: subnetworks, firewalls, machines, attacker-visible status.

The network is a directed graph whose vertices are fully connected
subnetworks and whose arcs carry firewalls (sets of blocked ports).  The
attacker starts on a dedicated vertex holding a single zero-reward machine.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

PORT_MIN = 1
PORT_MAX = 65535


class ScenarioError(Exception):
    """Base class for scenario-file problems."""


class ScenarioSyntaxError(ScenarioError):
    """Malformed scenario text (position carried in the message)."""


class ScenarioValidationError(ScenarioError):
    """Well-formed text violating a semantic invariant."""


def check_port(number: int) -> int:
    if not isinstance(number, int) or isinstance(number, bool):
        raise ScenarioValidationError(f"port must be an integer, got {number!r}")
    if not PORT_MIN <= number <= PORT_MAX:
        raise ScenarioValidationError(
            f"port {number} out of range [{PORT_MIN}, {PORT_MAX}]"
        )
    return number


@dataclass(frozen=True)
class Firewall:
    """A set of blocked ports.  The empty firewall blocks nothing."""

    blocked_ports: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self, "blocked_ports", frozenset(check_port(p) for p in self.blocked_ports)
        )

    def blocks(self, port: int) -> bool:
        return port in self.blocked_ports


EMPTY_FIREWALL = Firewall()


class MachineStatus(enum.Enum):
    CONTROLLED = "controlled"
    REACHED = "reached"
    NOT_REACHED = "not_reached"


@dataclass(frozen=True)
class Machine:
    """A machine with its last known configuration and its break-in value."""

    id: str
    template: str | None  # last known configuration at time 0; None for the foothold
    reward: float = 0.0

    def __post_init__(self):
        if self.reward < 0:
            raise ScenarioValidationError(
                f"machine {self.id!r} has negative reward {self.reward}"
            )


@dataclass(frozen=True)
class LogicalNetwork:
    """Graph of subnetworks joined by firewall-labelled directed arcs.

    ``subnetworks`` maps a subnetwork id to the tuple of machines inside it,
    ``arcs`` maps an ordered (source, destination) pair to the firewall on
    that connection (at most one arc per ordered pair), and ``start`` names
    the attacker's foothold vertex.
    """

    subnetworks: dict = field(default_factory=dict)
    arcs: dict = field(default_factory=dict)  # (src, dst) -> Firewall
    start: str = "start"

    def __post_init__(self):
        seen = set()
        for sn, machines in self.subnetworks.items():
            for m in machines:
                if m.id in seen:
                    raise ScenarioValidationError(f"duplicate machine id {m.id!r}")
                seen.add(m.id)
        if self.start not in self.subnetworks:
            raise ScenarioValidationError(f"start subnetwork {self.start!r} not defined")
        start_machines = self.subnetworks[self.start]
        if len(start_machines) != 1 or start_machines[0].reward != 0:
            raise ScenarioValidationError(
                "start subnetwork must contain exactly one machine with reward 0"
            )
        for (src, dst), fw in self.arcs.items():
            if src == dst:
                raise ScenarioValidationError(f"self-arc on subnetwork {src!r}")
            for end in (src, dst):
                if end not in self.subnetworks:
                    raise ScenarioValidationError(
                        f"arc ({src!r}, {dst!r}) references unknown subnetwork {end!r}"
                    )
            if not isinstance(fw, Firewall):
                raise ScenarioValidationError(f"arc ({src!r}, {dst!r}) carries no firewall")

    @property
    def start_machine(self) -> Machine:
        return self.subnetworks[self.start][0]

    def machines(self):
        for sn in self.subnetworks:
            yield from self.subnetworks[sn]

    def machine(self, machine_id: str) -> Machine:
        for m in self.machines():
            if m.id == machine_id:
                return m
        raise KeyError(machine_id)

    def subnetwork_of(self, machine_id: str) -> str:
        for sn, machines in self.subnetworks.items():
            if any(m.id == machine_id for m in machines):
                return sn
        raise KeyError(machine_id)


def compute_status(net: LogicalNetwork, controlled: set) -> dict:
    """Status of every machine given the set of controlled machine ids.

    A machine is reached when it shares a subnetwork with a controlled
    machine or sits in a subnetwork with an incoming arc from one; all
    remaining machines are not reached.
    """
    all_ids = {m.id for m in net.machines()}
    unknown = set(controlled) - all_ids
    if unknown:
        raise KeyError(f"unknown machine ids: {sorted(unknown)}")
    if not controlled:
        raise ValueError("controlled set may not be empty (the foothold is always controlled)")

    controlled_subnets = {net.subnetwork_of(mid) for mid in controlled}
    reached_subnets = set(controlled_subnets)
    for (src, dst) in net.arcs:
        if src in controlled_subnets:
            reached_subnets.add(dst)

    status = {}
    for sn, machines in net.subnetworks.items():
        for m in machines:
            if m.id in controlled:
                status[m.id] = MachineStatus.CONTROLLED
            elif sn in reached_subnets:
                status[m.id] = MachineStatus.REACHED
            else:
                status[m.id] = MachineStatus.NOT_REACHED
    return status


def action_usable(action, fw: Firewall) -> bool:
    """Whether an action can be used through a firewall.

    Port-free actions (OS detection, terminate) always pass; scans and
    exploits pass iff their target port is not blocked.
    """
    port = getattr(action, "port", None)
    if port is None:
        return True
    return not fw.blocks(port)
