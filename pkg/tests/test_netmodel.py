import pytest
from hypothesis import given, strategies as st

from pentestplan.netmodel import (
    EMPTY_FIREWALL,
    Firewall,
    LogicalNetwork,
    Machine,
    MachineStatus,
    ScenarioValidationError,
    action_usable,
    check_port,
    compute_status,
)
from pentestplan.pomdp import ActionSpec


def simple_network():
    return LogicalNetwork(
        subnetworks={
            "start": (Machine("attacker", None, 0.0),),
            "dmz": (Machine("web", "t0", 100.0), Machine("mail", "t0", 0.0)),
            "lan": (Machine("db", "t0", 500.0),),
        },
        arcs={
            ("start", "dmz"): Firewall(frozenset({80})),
            ("dmz", "lan"): EMPTY_FIREWALL,
        },
        start="start",
    )


class TestFirewall:
    def test_empty_firewall_blocks_nothing(self):
        assert not EMPTY_FIREWALL.blocks(80)
        assert not EMPTY_FIREWALL.blocks(65535)

    def test_blocks_listed_ports_only(self):
        fw = Firewall(frozenset({80, 443}))
        assert fw.blocks(80)
        assert fw.blocks(443)
        assert not fw.blocks(22)

    def test_rejects_out_of_range_ports(self):
        with pytest.raises(ScenarioValidationError):
            Firewall(frozenset({0}))
        with pytest.raises(ScenarioValidationError):
            Firewall(frozenset({70000}))


@given(st.integers())
def test_check_port_accepts_exactly_the_valid_range(port):
    if 1 <= port <= 65535:
        assert check_port(port) == port
    else:
        with pytest.raises(ScenarioValidationError):
            check_port(port)


def test_check_port_rejects_bool():
    with pytest.raises(ScenarioValidationError):
        check_port(True)


class TestNetworkValidation:
    def test_valid_network(self):
        net = simple_network()
        assert net.start_machine.id == "attacker"
        assert net.subnetwork_of("db") == "lan"
        assert net.machine("web").reward == 100.0

    def test_duplicate_machine_id(self):
        with pytest.raises(ScenarioValidationError, match="duplicate"):
            LogicalNetwork(
                subnetworks={
                    "start": (Machine("a", None, 0.0),),
                    "x": (Machine("a", "t0", 0.0),),
                },
                start="start",
            )

    def test_start_must_exist(self):
        with pytest.raises(ScenarioValidationError):
            LogicalNetwork(subnetworks={"x": (Machine("a", None, 0.0),)}, start="start")

    def test_start_machine_must_have_zero_reward(self):
        with pytest.raises(ScenarioValidationError):
            LogicalNetwork(
                subnetworks={"start": (Machine("a", None, 5.0),)}, start="start"
            )

    def test_no_self_arcs(self):
        with pytest.raises(ScenarioValidationError, match="self-arc"):
            LogicalNetwork(
                subnetworks={"start": (Machine("a", None, 0.0),)},
                arcs={("start", "start"): EMPTY_FIREWALL},
                start="start",
            )

    def test_arc_endpoints_must_exist(self):
        with pytest.raises(ScenarioValidationError, match="unknown subnetwork"):
            LogicalNetwork(
                subnetworks={"start": (Machine("a", None, 0.0),)},
                arcs={("start", "nowhere"): EMPTY_FIREWALL},
                start="start",
            )

    def test_negative_machine_reward(self):
        with pytest.raises(ScenarioValidationError):
            Machine("m", "t0", -1.0)


class TestComputeStatus:
    def test_foothold_reaches_adjacent_subnetwork(self):
        net = simple_network()
        status = compute_status(net, {"attacker"})
        assert status["attacker"] is MachineStatus.CONTROLLED
        assert status["web"] is MachineStatus.REACHED
        assert status["mail"] is MachineStatus.REACHED
        assert status["db"] is MachineStatus.NOT_REACHED

    def test_pivoting_extends_reach(self):
        net = simple_network()
        status = compute_status(net, {"attacker", "web"})
        assert status["web"] is MachineStatus.CONTROLLED
        assert status["mail"] is MachineStatus.REACHED  # same subnetwork as web
        assert status["db"] is MachineStatus.REACHED  # via the dmz -> lan arc

    def test_arcs_are_directed(self):
        net = LogicalNetwork(
            subnetworks={
                "start": (Machine("a", None, 0.0),),
                "x": (Machine("m", "t0", 0.0),),
            },
            arcs={("x", "start"): EMPTY_FIREWALL},  # wrong direction
            start="start",
        )
        assert compute_status(net, {"a"})["m"] is MachineStatus.NOT_REACHED

    def test_empty_controlled_set_rejected(self):
        with pytest.raises(ValueError):
            compute_status(simple_network(), set())

    def test_unknown_controlled_id_rejected(self):
        with pytest.raises(KeyError):
            compute_status(simple_network(), {"ghost"})


class TestActionUsable:
    def test_port_action_through_blocking_firewall(self):
        scan = ActionSpec(id="s", kind="port_scan", port=80)
        assert not action_usable(scan, Firewall(frozenset({80})))
        assert action_usable(scan, Firewall(frozenset({81})))
        assert action_usable(scan, EMPTY_FIREWALL)

    def test_port_free_action_always_usable(self):
        detect = ActionSpec(id="d", kind="os_detect")
        assert action_usable(detect, Firewall(frozenset({80, 443})))
