import numpy as np
import pytest

from hasa_mdp.domains import RandomModelConfig, make_random_model
from hasa_mdp.model import DeterministicPolicy
from hasa_mdp.oracle import enumerate_optimal
from hasa_mdp.sapi import BEST_STEP, IMPROVEMENT_TOL, PER_STATE, random_policy, sapi_restarts, sapi_run, seed_streams
from hasa_mdp.valuation import policy_value, solve_mdp


def test_trace_is_strictly_increasing(grid2x2):
    result = sapi_run(grid2x2, seed=3)
    assert result.trace[-1] == result.value
    assert all(b > a for a, b in zip(result.trace, result.trace[1:]))
    assert result.steps == len(result.trace) - 1
    assert result.value == pytest.approx(policy_value(grid2x2, result.policy))


def test_start_policy_comes_from_seed(grid2x2):
    result = sapi_run(grid2x2, seed=7)
    assert result.trace[0] == pytest.approx(policy_value(grid2x2, random_policy(grid2x2, 7)))


def test_explicit_start_policy(tiny):
    result = sapi_run(tiny, initial=DeterministicPolicy((1, 1)))
    assert result.trace[0] == pytest.approx(policy_value(tiny, DeterministicPolicy((1, 1))))
    assert result.value >= result.trace[0]


@pytest.mark.parametrize("seed", range(4))
def test_without_aliasing_reaches_mdp_optimum(seed):
    # Dirichlet initial distributions give every state positive weight
    model = make_random_model(RandomModelConfig(n_states=5, n_actions=3, seed=seed)).without_aliasing()
    values, _ = solve_mdp(model)
    assert sapi_run(model, seed=seed).value == pytest.approx(model.initial_dist @ values, abs=1e-6)


def test_restarts_find_enumerated_optimum(grid2x2):
    best, results = sapi_restarts(grid2x2, n_restarts=30, seed=0)
    _, optimum, count = enumerate_optimal(grid2x2)
    assert count == 4**4
    assert best.value == pytest.approx(optimum, abs=1e-6)
    assert all(r.value <= optimum + 1e-9 for r in results)


def test_restart_i_uses_seed_plus_i(grid2x2):
    _, results = sapi_restarts(grid2x2, n_restarts=3, seed=5)
    for i, result in enumerate(results):
        assert result.restart == i
        assert result.trace == sapi_run(grid2x2, seed=5 + i).trace


def test_restarts_are_deterministic(random_model):
    first, _ = sapi_restarts(random_model, n_restarts=4, seed=2)
    second, _ = sapi_restarts(random_model, n_restarts=4, seed=2)
    assert first == second


def test_worker_pool_gives_same_results(random_model):
    _, sequential = sapi_restarts(random_model, n_restarts=4, seed=1)
    _, pooled = sapi_restarts(random_model, n_restarts=4, seed=1, workers=2)
    assert [r.value for r in sequential] == [r.value for r in pooled]
    assert [r.policy for r in sequential] == [r.policy for r in pooled]


def test_per_state_mode(grid2x2):
    result = sapi_run(grid2x2, seed=0, mode=PER_STATE)
    assert np.all(np.diff(result.trace) > 0)
    assert result.value == pytest.approx(policy_value(grid2x2, result.policy))


def test_single_action_model_has_nothing_to_improve():
    model = make_random_model(RandomModelConfig(n_states=3, n_actions=1, seed=0))
    result = sapi_run(model)
    assert result.steps == 0
    assert result.policy == DeterministicPolicy((0, 0, 0))


@pytest.mark.parametrize("kwargs", [{"n_restarts": 0}, {"mode": "annealing"}])
def test_bad_arguments(random_model, kwargs):
    with pytest.raises(ValueError):
        sapi_restarts(random_model, **kwargs)


@pytest.mark.parametrize("mode", [BEST_STEP, PER_STATE])
@pytest.mark.parametrize("seed", range(5))
def test_result_has_no_improving_neighbour(mode, seed):
    model = make_random_model(RandomModelConfig(n_states=4, n_actions=3, seed=seed))
    result = sapi_run(model, seed=seed, mode=mode)
    for s in range(model.n_states):
        for a in range(model.n_actions):
            neighbour = policy_value(model, result.policy.with_action(s, a))
            assert neighbour <= result.value + IMPROVEMENT_TOL + 1e-12


@pytest.mark.parametrize("mode", [BEST_STEP, PER_STATE])
def test_grid_result_has_no_improving_neighbour(grid2x2, mode):
    result = sapi_run(grid2x2, seed=11, mode=mode)
    neighbours = [
        policy_value(grid2x2, result.policy.with_action(s, a))
        for s in range(grid2x2.n_states)
        for a in range(grid2x2.n_actions)
    ]
    assert max(neighbours) <= result.value + 2e-12


@pytest.mark.parametrize("seed", range(10))
def test_start_and_sweep_order_use_separate_streams(seed):
    start, order = seed_streams(seed)
    assert not np.array_equal(start.integers(4, size=25), order.integers(4, size=25))
    again, _ = seed_streams(seed)
    assert np.array_equal(again.integers(4, size=25), seed_streams(seed)[0].integers(4, size=25))
