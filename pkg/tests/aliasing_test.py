from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hasa_mdp.aliasing import (
    conditioned_bounds,
    delay_probability,
    delay_vector,
    fixed_probability_bounds,
    induce_stochastic,
)
from hasa_mdp.domains import RandomModelConfig, make_random_model
from hasa_mdp.model import UNDECIDED, DeterministicPolicy, PartialPolicy, UncertaintyEvent, UncertaintyModel


@st.composite
def model_and_policy(draw, max_states=5, max_actions=3):
    n_states = draw(st.integers(1, max_states))
    n_actions = draw(st.integers(1, max_actions))
    seed = draw(st.integers(0, 2**16))
    model = make_random_model(RandomModelConfig(n_states=n_states, n_actions=n_actions, seed=seed))
    actions = draw(st.lists(st.integers(0, n_actions - 1), min_size=n_states, max_size=n_states))
    return model, DeterministicPolicy(tuple(actions))


def test_conflicting_event_delays(tiny):
    # s0 -> go, s1 -> stay: the {s0, s1} event at s0 conflicts
    policy = DeterministicPolicy((0, 1))
    assert delay_probability(tiny, policy, 0) == pytest.approx(0.8 * 0.5)
    assert delay_probability(tiny, policy, 1) == 0.0


def test_induced_policy_by_hand(tiny):
    stoch = induce_stochastic(tiny, DeterministicPolicy((0, 1)))
    expected = np.array([[0.6 * 0.9, 0.6 * 0.1, 0.4], [0.2, 0.8, 0.0]])
    np.testing.assert_allclose(stoch.prob, expected)


def test_uniform_policy_never_delays(warehouse):
    for a in range(warehouse.n_actions):
        assert not delay_vector(warehouse, DeterministicPolicy.uniform(warehouse, a)).any()


def test_patience_zero_never_delays(grid2x2):
    calm = replace(grid2x2, patience=np.zeros(grid2x2.n_states))
    stoch = induce_stochastic(calm, DeterministicPolicy((3, 1, 3, 0)))
    assert not stoch.non_policy.any()


@settings(max_examples=60, deadline=None)
@given(model_and_policy())
def test_induced_rows_are_distributions(pair):
    model, policy = pair
    prob = induce_stochastic(model, policy).prob
    assert (prob >= 0).all()
    np.testing.assert_allclose(prob.sum(axis=1), 1.0, atol=1e-9)


def test_bounds_of_empty_partial(random_model):
    bounds = fixed_probability_bounds(random_model, PartialPolicy.empty(random_model.n_states))
    assert not bounds.non_policy.any()
    assert not bounds.actions.any()
    np.testing.assert_allclose(bounds.residual, 1.0)


def test_bounds_of_total_policy_match_induced(random_model):
    policy = DeterministicPolicy((1, 0, 1))
    bounds = fixed_probability_bounds(random_model, PartialPolicy(policy.actions))
    stoch = induce_stochastic(random_model, policy)
    np.testing.assert_allclose(bounds.as_matrix(), stoch.prob, atol=1e-12)
    np.testing.assert_allclose(bounds.max_delay, stoch.non_policy, atol=1e-12)
    np.testing.assert_allclose(bounds.residual, 0.0, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(model_and_policy(max_states=4), st.data())
def test_bounds_hold_for_every_completion(pair, data):
    model, policy = pair
    decided = data.draw(st.sets(st.integers(0, model.n_states - 1)))
    partial = PartialPolicy.from_policy(policy, decided)
    bounds = fixed_probability_bounds(model, partial)
    assert (bounds.residual >= 0).all()
    for completion in partial.completions(model.n_actions):
        prob = induce_stochastic(model, completion).prob
        assert (bounds.as_matrix() <= prob + 1e-12).all()
        assert (prob[:, -1] <= bounds.max_delay + 1e-12).all()


def test_probability_laws_on_ten_thousand_pairs():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n_states, n_actions = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        config = RandomModelConfig(n_states=n_states, n_actions=n_actions, seed=int(rng.integers(2**31)))
        model = make_random_model(config)
        calm = replace(model, patience=np.zeros(n_states))
        for _ in range(50):
            policy = DeterministicPolicy(tuple(int(a) for a in rng.integers(n_actions, size=n_states)))
            prob = induce_stochastic(model, policy).prob
            assert (prob >= 0).all()
            assert np.abs(prob.sum(axis=1) - 1.0).max() <= 1e-9
            assert not induce_stochastic(calm, policy).non_policy.any()
        for a in range(n_actions):
            assert not delay_vector(model, DeterministicPolicy((a,) * n_states)).any()


def test_conditioned_bounds_by_hand(tiny):
    # s1 -> stay; s0 going would conflict with it inside the {s0, s1} event
    bounds = conditioned_bounds(tiny, PartialPolicy((UNDECIDED, 1)))
    assert bounds.valid.tolist() == [[True, True], [False, True]]
    assert bounds.non_policy[0, 0] == bounds.max_delay[0, 0] == pytest.approx(0.4)
    assert bounds.non_policy[0, 1] == bounds.max_delay[0, 1] == 0.0
    np.testing.assert_allclose(bounds.decided_mass[0], [[0.9, 0.1], [0.0, 1.0]])
    np.testing.assert_allclose(bounds.free_mass, [0.0, 0.2])
    # the fixed bounds cannot tell yet
    assert fixed_probability_bounds(tiny, PartialPolicy((UNDECIDED, 1))).non_policy[0] == 0.0


def test_events_waiting_on_one_state_share_the_conflict(random_model):
    # At s0 one event pairs s0 with s2, another pairs s1 with s2. s0 and s1
    # disagree, so whatever s2 does one of the two events conflicts.
    events = (
        UncertaintyEvent(0, 0, frozenset({2}), 0.5),
        UncertaintyEvent(0, 1, frozenset({2}), 0.5),
        UncertaintyEvent(1, 1, frozenset({1}), 1.0),
        UncertaintyEvent(2, 2, frozenset({2}), 1.0),
    )
    model = replace(random_model, uncertainty=UncertaintyModel(events), patience=np.ones(3))
    partial = PartialPolicy((0, 1, UNDECIDED))
    bounds = conditioned_bounds(model, partial)
    assert bounds.non_policy[0, 0] == pytest.approx(0.5)
    assert bounds.max_delay[0, 0] == pytest.approx(1.0)
    assert fixed_probability_bounds(model, partial).non_policy[0] == 0.0
    for completion in partial.completions(model.n_actions):
        assert delay_vector(model, completion)[0] == pytest.approx(0.5)


@settings(max_examples=80, deadline=None)
@given(model_and_policy(max_states=4), st.data())
def test_conditioned_bounds_hold_for_every_completion(pair, data):
    model, policy = pair
    decided = data.draw(st.sets(st.integers(0, model.n_states - 1)))
    partial = PartialPolicy.from_policy(policy, decided)
    bounds = conditioned_bounds(model, partial)
    states = np.arange(model.n_states)
    for completion in partial.completions(model.n_actions):
        acts = completion.as_array()
        prob = induce_stochastic(model, completion).prob
        assert bounds.valid[states, acts].all()
        assert (bounds.non_policy[states, acts] <= prob[:, -1] + 1e-12).all()
        assert (prob[:, -1] <= bounds.max_delay[states, acts] + 1e-12).all()
        floor = (1.0 - bounds.max_delay[states, acts])[:, None] * bounds.decided_mass[states, acts]
        assert (floor <= prob[:, :-1] + 1e-12).all()
