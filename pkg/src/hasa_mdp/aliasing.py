# hasa_mdp/aliasing.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import UNDECIDED, DeterministicPolicy, HasaMdp, PartialPolicy, StochasticPolicy


@dataclass(frozen=True, eq=False)
class FixedProbabilityBounds:
    """
    Per-state action probabilities that every completion of a partial policy is
    guaranteed to reach, plus the worst-case delay and the mass left unassigned.
    """

    non_policy: np.ndarray  # (S,) lower bound on P(a_np)
    actions: np.ndarray  # (S, A) lower bound per policy action
    max_delay: np.ndarray  # (S,) upper bound on P(a_np)
    residual: np.ndarray  # (S,) 1 - sum of the lower bounds

    def as_matrix(self) -> np.ndarray:
        """Lower bounds laid out like StochasticPolicy.prob (a_np last)."""
        return np.column_stack([self.actions, self.non_policy])


def conflicting_events(model: HasaMdp, actions: np.ndarray) -> np.ndarray:
    # An event conflicts when any alternate's action differs from the best guess's.
    ev = model.events
    differs = actions[None, :] != actions[ev.best][:, None]
    return (ev.alternates & differs).any(axis=1)


def _per_state(model: HasaMdp, mask: np.ndarray) -> np.ndarray:
    ev = model.events
    mass = np.bincount(ev.true, weights=ev.weight * mask, minlength=model.n_states)
    return model.patience * mass


def delay_vector(model: HasaMdp, policy: DeterministicPolicy) -> np.ndarray:
    """Probability of the non-policy action at every state under `policy`."""
    return _per_state(model, conflicting_events(model, policy.as_array()))


def delay_probability(model: HasaMdp, policy: DeterministicPolicy, state: int) -> float:
    """
    ψ(state) times the total weight of the uncertainty events at `state` whose
    alternates prescribe an action different from their best guess.
    """
    return float(delay_vector(model, policy)[state])


def _classified_mass(model: HasaMdp, actions: np.ndarray, decided: np.ndarray) -> np.ndarray:
    # (S, A): sum over decided guesses g of p_c(g | s) * 1[actions[g] = a]
    onehot = np.zeros((model.n_states, model.n_actions))
    rows = np.nonzero(decided)[0]
    onehot[rows, actions[rows]] = 1.0
    return model.classification @ onehot


def induce_stochastic(model: HasaMdp, policy: DeterministicPolicy) -> StochasticPolicy:
    """The stochastic policy a state-aliased human actually executes when handed `policy`."""
    acts = policy.as_array()
    delay = delay_vector(model, policy)
    mixed = _classified_mass(model, acts, np.ones(model.n_states, dtype=bool))
    prob = np.empty((model.n_states, model.n_actions + 1))
    prob[:, :-1] = (1.0 - delay)[:, None] * mixed
    prob[:, -1] = delay
    return StochasticPolicy(prob)


def fixed_probability_bounds(model: HasaMdp, partial: PartialPolicy) -> FixedProbabilityBounds:
    acts = partial.as_array()
    decided = acts != UNDECIDED
    ev = model.events

    involved = ev.alternates.copy()
    involved[np.arange(len(ev.best)), ev.best] = True
    settled = ~(involved & ~decided[None, :]).any(axis=1)

    conflict = conflicting_events(model, acts) & settled
    conflict_free = ev.confident | (settled & ~conflict)

    lb_np = _per_state(model, conflict)
    max_delay = _per_state(model, ~conflict_free)
    lb_actions = (1.0 - max_delay)[:, None] * _classified_mass(model, acts, decided)
    residual = np.clip(1.0 - lb_np - lb_actions.sum(axis=1), 0.0, 1.0)
    return FixedProbabilityBounds(lb_np, lb_actions, max_delay, residual)


@dataclass(frozen=True, eq=False)
class ConditionedBounds:
    """
    Bounds on the executed action distribution at each state, conditioned on
    the action the state itself is given. `valid[s, a]` is False where a
    decided state already holds another action.
    """

    valid: np.ndarray  # (S, A)
    non_policy: np.ndarray  # (S, A) lower bound on P(a_np)
    max_delay: np.ndarray  # (S, A) upper bound on P(a_np)
    decided_mass: np.ndarray  # (S, A, A) classified mass on decided guesses, per action
    free_mass: np.ndarray  # (S,) classified mass on the other undecided guesses


def _coupled_conflicts(
    weight: np.ndarray, free_state: np.ndarray, held: np.ndarray, n_states: int, n_actions: int
) -> float:
    # Events waiting on one undecided state u whose decided members agree on b.
    # u takes a single action, so all but the heaviest b group conflict.
    grouped = np.bincount(free_state * n_actions + held, weights=weight, minlength=n_states * n_actions)
    grouped = grouped.reshape(n_states, n_actions)
    return float((grouped.sum(axis=1) - grouped.max(axis=1)).sum())


def conditioned_bounds(model: HasaMdp, partial: PartialPolicy) -> ConditionedBounds:
    """
    Tighter companion of fixed_probability_bounds. For every state and every
    action it could take, an event is counted as a certain conflict as soon as
    two of its decided members disagree, and events that hinge on one undecided
    state are charged the conflicts that state cannot avoid whatever it picks.
    """
    acts = partial.as_array()
    decided = acts != UNDECIDED
    n_states, n_actions = model.n_states, model.n_actions
    ev = model.events

    involved = ev.alternates.copy()
    involved[np.arange(len(ev.best)), ev.best] = True
    onehot = np.zeros((n_states, n_actions))
    rows = np.nonzero(decided)[0]
    onehot[rows, acts[rows]] = 1.0
    own = np.eye(n_actions, dtype=bool)

    valid = np.zeros((n_states, n_actions), dtype=bool)
    valid[~decided] = True
    valid[rows, acts[rows]] = True

    lb_np = np.zeros((n_states, n_actions))
    max_delay = np.zeros((n_states, n_actions))
    for s in range(n_states):
        idx = np.nonzero(ev.true == s)[0]
        if not len(idx):
            continue
        members = involved[idx]
        others = members.copy()
        others[:, s] = False
        held_by_others = (others.astype(float) @ onehot) > 0  # (E, A)
        # (own action, event, action held)
        held = held_by_others[None] | (members[:, s][None, :, None] & own[:, None, :])
        distinct = held.sum(axis=2)
        free = others & ~decided[None, :]
        n_free = free.sum(axis=1)
        weight = ev.weight[idx]
        confident = ev.confident[idx]

        certain = distinct >= 2
        conflict_free = confident[None] | ((n_free == 0)[None] & (distinct <= 1))
        coupled = ~confident[None] & (n_free == 1)[None] & (distinct == 1)
        free_state = free.argmax(axis=1)
        for a in range(n_actions):
            pick = coupled[a]
            extra = _coupled_conflicts(
                weight[pick], free_state[pick], held[a, pick].argmax(axis=1), n_states, n_actions
            )
            lb_np[s, a] = float((weight * certain[a]).sum()) + extra
            max_delay[s, a] = float((weight * ~conflict_free[a]).sum())
    lb_np *= model.patience[:, None]
    max_delay *= model.patience[:, None]

    self_mass = np.diag(model.classification)
    others_mass = model.classification @ onehot - self_mass[:, None] * onehot
    decided_mass = others_mass[:, None, :] + self_mass[:, None, None] * own[None]
    free_mass = model.classification @ (~decided).astype(float) - self_mass * ~decided
    return ConditionedBounds(valid, lb_np, max_delay, decided_mass, np.clip(free_mass, 0.0, None))
