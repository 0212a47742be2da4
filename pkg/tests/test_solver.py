import pytest
from hypothesis import given, settings, strategies as st

from pentestplan.belief import DependencyModel, MarkovChain, ProgramModel
from pentestplan.netmodel import EMPTY_FIREWALL, Machine
from pentestplan.pomdp import ActionSpec, OBS_OPEN, build_machine_pomdp
from pentestplan.solver import (
    PolicyNode,
    SolverError,
    brute_force_value,
    evaluate_policy,
    format_policy,
    obs_from_str,
    obs_to_str,
    parse_policy,
    solve,
)


def gated_model():
    """A service exploit gated on a protection program being off."""
    gate = MarkovChain(("off", "on"), [[0.96, 0.04], [0.0, 1.0]])
    svc = MarkovChain(("vulnerable", "patched"), [[0.95, 0.05], [0.0, 1.0]])
    return DependencyModel(
        programs=(
            ProgramModel("guard", gate),
            ProgramModel(
                "svc", svc, port=9000, open_states=frozenset({"vulnerable"})
            ),
        )
    )


def gated_pomdp(p_off=0.5, p_vuln=0.5, reward=100.0, cost=10.0):
    model = gated_model()
    belief = {}
    for guard, pg in (("off", p_off), ("on", 1 - p_off)):
        for svc, ps in (("vulnerable", p_vuln), ("patched", 1 - p_vuln)):
            if pg * ps > 0:
                belief[(guard, svc)] = pg * ps
    actions = [
        ActionSpec(
            id="x", kind="exploit", port=9000, program="svc",
            success={"svc": ["vulnerable"], "guard": ["off"]}, r_t=-cost,
        ),
        ActionSpec(id="s", kind="port_scan", port=9000, r_t=-cost),
    ]
    return build_machine_pomdp(
        Machine("m", "t", reward), EMPTY_FIREWALL, reward, belief, actions, model
    )


class TestSolveOnHandCases:
    def test_hand_computed_value(self):
        # oracle, derived by hand: success needs guard=off AND svc=vulnerable,
        # probability 0.25. Exploiting blindly: 0.25*100 - 10 = 15. Scanning
        # first costs 10 and leaves exploit EV 0.5*100-10 = 40 on the open
        # half: -10 + 0.5*40 = 10. Blind exploiting wins with value 15.
        result = solve(gated_pomdp())
        assert result.value == pytest.approx(15.0, abs=1e-9)
        assert result.policy.action.id == "x"

    def test_worthless_attack_terminates(self):
        # success probability 0.25, reward 30: best EV 0.25*30-10 < 0
        result = solve(gated_pomdp(reward=30.0))
        assert result.value == 0.0
        assert result.policy.action.kind == "terminate"

    def test_every_action_too_expensive(self):
        # oracle by hand with every action costing 30: blind exploit gives
        # 0.25*100 - 30 = -5; scan then exploit the open half gives
        # -30 + 0.5*(0.5*100 - 30) = -20; floored at 0 -> terminate.
        result = solve(gated_pomdp(cost=30.0))
        assert result.value == pytest.approx(0.0, abs=1e-9)
        assert result.policy.action.kind == "terminate"

    def test_from_belief_override(self):
        from pentestplan.pomdp import ConfigState

        pomdp = gated_pomdp()
        belief = {ConfigState(("off", "vulnerable")): 1.0}
        result = solve(pomdp, from_belief=belief)
        assert result.value == pytest.approx(90.0, abs=1e-9)


class TestAgainstBruteForce:
    @pytest.mark.parametrize("p_off,p_vuln,reward,cost", [
        (0.5, 0.5, 100.0, 10.0),
        (0.3, 0.7, 100.0, 10.0),
        (0.9, 0.2, 60.0, 5.0),
        (0.2939, 0.6755, 100.0, 10.0),
        (1.0, 0.5, 45.0, 10.0),
    ])
    def test_solve_equals_brute_force(self, p_off, p_vuln, reward, cost):
        pomdp = gated_pomdp(p_off, p_vuln, reward, cost)
        assert solve(pomdp).value == pytest.approx(
            brute_force_value(pomdp, 6), abs=1e-9
        )

    def test_brute_force_guards_large_instances(self):
        pomdp = gated_pomdp()
        with pytest.raises(SolverError):
            brute_force_value(pomdp, 17)


class TestEvaluatePolicy:
    def test_optimal_policy_evaluates_to_solve_value(self):
        pomdp = gated_pomdp()
        result = solve(pomdp)
        assert evaluate_policy(pomdp, result.policy) == pytest.approx(
            result.value, abs=1e-12
        )

    def test_terminate_policy_is_worth_zero(self):
        pomdp = gated_pomdp()
        from pentestplan.pomdp import TERMINATE_ACTION

        assert evaluate_policy(pomdp, PolicyNode(TERMINATE_ACTION, {}, 0.0)) == 0.0

    def test_missing_branch_raises(self):
        pomdp = gated_pomdp()
        headless = PolicyNode(pomdp.action("s"), {}, 0.0)
        with pytest.raises(SolverError, match="no branch"):
            evaluate_policy(pomdp, headless)


class TestPolicyTextFormat:
    def test_round_trip(self):
        pomdp = gated_pomdp()
        policy = solve(pomdp).policy
        text = format_policy(policy)
        parsed = parse_policy(text, pomdp.actions)
        assert format_policy(parsed) == text
        assert evaluate_policy(pomdp, parsed) == pytest.approx(
            evaluate_policy(pomdp, policy), abs=1e-12
        )

    def test_observation_spellings(self):
        assert obs_to_str("open") == "open"
        assert obs_to_str(("os", "linux")) == "os=linux"
        assert obs_from_str("os=linux") == ("os", "linux")
        assert obs_from_str("failed") == "failed"

    def test_unknown_action_rejected(self):
        with pytest.raises(SolverError, match="unknown action"):
            parse_policy("ghost value=1.000000", [])

    def test_malformed_line_rejected(self):
        with pytest.raises(SolverError):
            parse_policy("not a policy at all", [])

    def test_empty_text_rejected(self):
        with pytest.raises(SolverError):
            parse_policy("   \n", [])


@settings(max_examples=40, deadline=None)
@given(
    p_off=st.floats(0.05, 0.95),
    p_vuln=st.floats(0.05, 0.95),
    reward=st.floats(10.0, 300.0),
)
def test_solver_invariants(p_off, p_vuln, reward):
    pomdp = gated_pomdp(p_off, p_vuln, reward)
    result = solve(pomdp)
    # value floored at 0 and bounded by winning the full reward for free
    assert 0.0 <= result.value <= reward + 1e-9
    # the returned policy achieves exactly the reported value
    assert evaluate_policy(pomdp, result.policy) == pytest.approx(
        result.value, abs=1e-9
    )
