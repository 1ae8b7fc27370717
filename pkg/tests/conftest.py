import numpy as np
import pytest

from hasa_mdp.domains import (
    GridworldConfig,
    RandomModelConfig,
    make_gridworld,
    make_random_model,
    make_warehouse,
)
from hasa_mdp.model import HasaMdp, UncertaintyEvent, UncertaintyModel


def two_state_model(psi: float = 0.8, conflict_weight: float = 0.5) -> HasaMdp:
    """
    Two states, two actions. "go" swaps state, "stay" keeps it; being in s1 pays 1
    per step. At s0 the human is unsure between s0 and s1 with `conflict_weight`.
    """
    T = np.zeros((2, 3, 2))
    T[0, 0, 1] = T[1, 0, 0] = 1.0  # go
    T[0, 1, 0] = T[1, 1, 1] = 1.0  # stay
    T[0, 2, 0] = T[1, 2, 1] = 1.0  # wait
    R = np.array([[0.0, 0.0, -0.1], [1.0, 1.0, -0.1]])
    events = (
        UncertaintyEvent(0, 0, frozenset({1}), conflict_weight),
        UncertaintyEvent(0, 0, frozenset({0}), 1.0 - conflict_weight),
        UncertaintyEvent(1, 1, frozenset({1}), 1.0),
    )
    return HasaMdp(
        states=("s0", "s1"),
        actions=("go", "stay"),
        non_policy_action="wait",
        transition=T,
        reward=R,
        discount=0.9,
        initial_dist=np.array([1.0, 0.0]),
        classification=np.array([[0.9, 0.1], [0.2, 0.8]]),
        uncertainty=UncertaintyModel(events),
        patience=np.array([psi, psi]),
    )


@pytest.fixture
def tiny():
    return two_state_model()


@pytest.fixture
def grid2x2():
    return make_gridworld(GridworldConfig(width=2, height=2))


@pytest.fixture
def warehouse():
    return make_warehouse()


@pytest.fixture
def random_model():
    return make_random_model(RandomModelConfig(n_states=3, n_actions=2, seed=1))


@pytest.fixture
def tiny_factory():
    return two_state_model
