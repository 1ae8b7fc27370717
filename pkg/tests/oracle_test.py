from dataclasses import replace

import numpy as np
import pytest

from hasa_mdp.aliasing import induce_stochastic
from hasa_mdp.domains import GridworldConfig, RandomModelConfig, make_gridworld, make_random_model
from hasa_mdp.errors import EnumerationCapError
from hasa_mdp.model import DeterministicPolicy
from hasa_mdp.oracle import (
    action_frequencies,
    default_horizon,
    enumerate_optimal,
    simulate_policy,
    truncation_bias,
)
from hasa_mdp.sapi import sapi_restarts
from hasa_mdp.valuation import policy_value


def _agrees(model, policy, episodes=10_000, seed=0):
    est = simulate_policy(model, policy, episodes=episodes, seed=seed)
    exact = policy_value(model, policy)
    slack = 3 * est.std_error + truncation_bias(model, est.horizon)
    return abs(est.mean - exact) <= slack, est, exact


def test_enumerate_counts_every_policy():
    model = make_random_model(RandomModelConfig(n_states=1, n_actions=2, seed=0))
    _, _, count = enumerate_optimal(model)
    assert count == 2


def test_enumerate_refuses_large_spaces(grid2x2):
    with pytest.raises(EnumerationCapError) as excinfo:
        enumerate_optimal(grid2x2, cap=100)
    assert excinfo.value.size == 256


def test_enumerate_breaks_ties_lexicographically(grid2x2):
    quiet = replace(grid2x2, reward=np.zeros_like(grid2x2.reward))
    policy, value, _ = enumerate_optimal(quiet)
    assert value == 0.0
    assert policy == DeterministicPolicy((0, 0, 0, 0))


@pytest.mark.parametrize("seed", range(5))
def test_sapi_never_beats_enumeration(seed):
    model = make_random_model(RandomModelConfig(n_states=4, n_actions=3, seed=seed))
    _, optimum, _ = enumerate_optimal(model)
    best, _ = sapi_restarts(model, n_restarts=3, seed=seed)
    assert best.value <= optimum + 1e-9


def test_zero_reward_simulates_to_zero(grid2x2):
    quiet = replace(grid2x2, reward=np.zeros_like(grid2x2.reward))
    est = simulate_policy(quiet, DeterministicPolicy((3, 1, 3, 0)), episodes=100)
    assert est.mean == 0.0 and est.std_error == 0.0


@pytest.mark.parametrize(
    "fixture, actions",
    [
        ("tiny", (0, 1)),
        ("tiny", (1, 1)),
        ("grid2x2", (3, 1, 3, 0)),
        ("grid2x2", (1, 1, 3, 3)),
        ("random_model", (0, 1, 1)),
        ("random_model", (1, 1, 1)),
        ("warehouse", (5, 5, 5, 5, 5, 5)),
        ("warehouse", (0, 1, 2, 3, 4, 5)),
        ("warehouse", (5, 5, 5, 5, 4, 4)),
    ],
)
def test_simulation_agrees_with_exact_value(fixture, actions, request):
    model = request.getfixturevalue(fixture)
    ok, est, exact = _agrees(model, DeterministicPolicy(actions))
    assert ok, (est, exact)


def test_simulation_on_aliased_grid():
    model = make_gridworld(GridworldConfig(width=3, height=3, rnr=1.0))
    ok, est, exact = _agrees(model, DeterministicPolicy((3, 3, 1, 3, 3, 1, 3, 3, 3)))
    assert ok, (est, exact)


def test_simulation_is_seeded(random_model):
    policy = DeterministicPolicy((0, 1, 0))
    first = simulate_policy(random_model, policy, episodes=500, seed=4)
    second = simulate_policy(random_model, policy, episodes=500, seed=4)
    assert first == second


def test_simulation_workers_are_reproducible(random_model):
    policy = DeterministicPolicy((0, 1, 0))
    first = simulate_policy(random_model, policy, episodes=1000, seed=4, workers=2)
    second = simulate_policy(random_model, policy, episodes=1000, seed=4, workers=2)
    assert first == second
    assert first.episodes == 1000


def test_executed_actions_follow_induced_policy(grid2x2):
    policy = DeterministicPolicy((3, 1, 3, 0))
    prob = induce_stochastic(grid2x2, policy).prob
    draws = 100_000
    for state in range(grid2x2.n_states):
        freq = action_frequencies(grid2x2, policy, state, draws=draws, seed=state)
        tolerance = 4 * np.sqrt(prob[state] * (1 - prob[state]) / draws) + 1e-12
        assert (np.abs(freq - prob[state]) <= tolerance).all()


def test_horizon_and_bias(grid2x2):
    horizon = default_horizon(grid2x2)
    assert grid2x2.discount**horizon <= 1e-6 < grid2x2.discount ** (horizon - 1)
    assert truncation_bias(grid2x2, horizon) <= 1e-6 * 100 / (1 - grid2x2.discount)


def test_bad_episode_count(tiny):
    with pytest.raises(ValueError):
        simulate_policy(tiny, DeterministicPolicy((0, 0)), episodes=0)
