import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pentestplan.belief import (
    BeliefError,
    DependencyModel,
    MarkovChain,
    ProgramModel,
    check_normalized,
    condition,
    evolve_chain,
    initial_belief,
)


def two_state_chain(stay=0.9):
    return MarkovChain(("old", "new"), [[stay, 1 - stay], [0.0, 1.0]])


class TestMarkovChain:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(BeliefError):
            MarkovChain(("a", "b"), [[0.5, 0.4], [0.0, 1.0]])

    def test_entries_must_be_probabilities(self):
        with pytest.raises(BeliefError):
            MarkovChain(("a", "b"), [[1.5, -0.5], [0.0, 1.0]])

    def test_shape_must_match_states(self):
        with pytest.raises(BeliefError):
            MarkovChain(("a", "b", "c"), [[1.0, 0.0], [0.0, 1.0]])

    def test_unknown_label(self):
        with pytest.raises(BeliefError):
            two_state_chain().index("missing")


class TestEvolveChain:
    def test_zero_days_is_a_point_mass(self):
        assert evolve_chain(two_state_chain(), "old", 0) == {"old": 1.0}

    def test_matches_independent_matrix_power(self):
        # oracle: plain numpy matrix power, computed right here
        stay, days = 0.93, 17
        expected_old = stay**days
        dist = evolve_chain(two_state_chain(stay), "old", days)
        assert dist["old"] == pytest.approx(expected_old, abs=1e-12)
        assert dist["new"] == pytest.approx(1 - expected_old, abs=1e-12)

    def test_absorbing_state_stays_put(self):
        assert evolve_chain(two_state_chain(), "new", 40) == {"new": 1.0}

    def test_negative_days_rejected(self):
        with pytest.raises(BeliefError):
            evolve_chain(two_state_chain(), "old", -1)


class TestDependencyModel:
    def test_duplicate_names_rejected(self):
        p = ProgramModel("a", two_state_chain())
        with pytest.raises(BeliefError):
            DependencyModel(programs=(p, p))

    def test_unknown_parent_rejected(self):
        p = ProgramModel("a", two_state_chain(), parents=("ghost",))
        with pytest.raises(BeliefError):
            DependencyModel(programs=(p,))

    def test_dependency_cycle_rejected(self):
        a = ProgramModel("a", two_state_chain(), parents=("b",))
        b = ProgramModel("b", two_state_chain(), parents=("a",))
        with pytest.raises(BeliefError, match="cycle"):
            DependencyModel(programs=(a, b))

    def test_compatibility_filters_tuples(self):
        os = ProgramModel("os", two_state_chain())
        app = ProgramModel("app", two_state_chain(), parents=("os",))
        model = DependencyModel(
            programs=(app, os),
            compatibility={"app": {("old", "old"), ("new", "new")}},
        )
        assert model.compatible(("old", "old"))
        assert not model.compatible(("old", "new"))


class TestInitialBelief:
    def test_independent_programs_are_a_product(self):
        a = ProgramModel("a", two_state_chain(0.8))
        b = ProgramModel("b", two_state_chain(0.6))
        model = DependencyModel(programs=(a, b))
        belief = initial_belief(model, ("old", "old"), 3)
        # oracle: closed-form product of the two marginals
        pa, pb = 0.8**3, 0.6**3
        assert belief[("old", "old")] == pytest.approx(pa * pb, abs=1e-12)
        assert belief[("new", "new")] == pytest.approx((1 - pa) * (1 - pb), abs=1e-12)
        check_normalized(belief)

    def test_fast_path_agrees_with_daily_expansion(self):
        # an all-permissive constraint forces the day-by-day joint expansion
        a = ProgramModel("a", two_state_chain(0.8))
        b = ProgramModel("b", two_state_chain(0.6))
        free = DependencyModel(programs=(a, b))
        every = {("old", ), ("new", )}
        constrained = DependencyModel(programs=(a, b), compatibility={"a": every})
        fast = initial_belief(free, ("old", "old"), 7)
        slow = initial_belief(constrained, ("old", "old"), 7)
        assert set(fast) == set(slow)
        for config in fast:
            assert fast[config] == pytest.approx(slow[config], abs=1e-9)

    def test_incompatible_start_rejected(self):
        os = ProgramModel("os", two_state_chain())
        app = ProgramModel("app", two_state_chain(), parents=("os",))
        model = DependencyModel(
            programs=(app, os), compatibility={"app": {("new", "new")}}
        )
        with pytest.raises(BeliefError, match="incompatible"):
            initial_belief(model, ("old", "old"), 1)

    def test_filtering_renormalizes(self):
        # app must track os exactly; surviving mass is renormalized daily
        os = ProgramModel("os", two_state_chain(0.5))
        app = ProgramModel("app", two_state_chain(0.5), parents=("os",))
        model = DependencyModel(
            programs=(app, os),
            compatibility={"app": {("old", "old"), ("new", "new")}},
        )
        belief = initial_belief(model, ("old", "old"), 5)
        check_normalized(belief)
        for config in belief:
            assert config in {("old", "old"), ("new", "new")}

    def test_end_renormalization_variant(self):
        os = ProgramModel("os", two_state_chain(0.5))
        app = ProgramModel("app", two_state_chain(0.5), parents=("os",))
        model = DependencyModel(
            programs=(app, os),
            compatibility={"app": {("old", "old"), ("new", "new")}},
        )
        once = initial_belief(model, ("old", "old"), 5, renormalize_each_day=False)
        check_normalized(once)


@settings(max_examples=50, deadline=None)
@given(
    stay_a=st.floats(0.05, 0.95),
    stay_b=st.floats(0.05, 0.95),
    days=st.integers(0, 40),
)
def test_initial_belief_is_always_normalized(stay_a, stay_b, days):
    model = DependencyModel(
        programs=(
            ProgramModel("a", two_state_chain(stay_a)),
            ProgramModel("b", two_state_chain(stay_b)),
        )
    )
    check_normalized(initial_belief(model, ("old", "old"), days))


class TestCondition:
    def test_keeps_and_renormalizes(self):
        belief = {("a",): 0.25, ("b",): 0.75}
        cond = condition(belief, lambda c: c == ("a",))
        assert cond == {("a",): 1.0}

    def test_zero_probability_observation_rejected(self):
        with pytest.raises(BeliefError):
            condition({("a",): 1.0}, lambda c: False)
