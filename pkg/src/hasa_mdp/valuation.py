# hasa_mdp/valuation.py
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .aliasing import (
    ConditionedBounds,
    FixedProbabilityBounds,
    conditioned_bounds,
    fixed_probability_bounds,
    induce_stochastic,
)
from .errors import NumericError
from .model import DeterministicPolicy, HasaMdp, PartialPolicy, StochasticPolicy

# One value per state, indexed like HasaMdp.states.
ValueVector = np.ndarray

RESIDUAL_TOL = 1e-8
MAX_REFINEMENTS = 3
DEFAULT_VI_ITERS = 1000
DEFAULT_EPSILON = 1e-10

# The non-policy action becomes a PC-MDP candidate only when the delay is not pinned down.
NP_SLACK = 1e-12


def _solve_mrp(P: np.ndarray, r: np.ndarray, gamma: float) -> ValueVector:
    M = np.eye(len(r)) - gamma * P
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            lu = linalg.lu_factor(M)
    except (linalg.LinAlgError, linalg.LinAlgWarning, ValueError) as exc:
        raise NumericError(f"cannot factorise I - γP: {exc}") from exc
    v = linalg.lu_solve(lu, r)
    for _ in range(MAX_REFINEMENTS):
        resid = r - M @ v
        if np.all(np.isfinite(resid)) and np.abs(resid).max() <= RESIDUAL_TOL:
            return v
        v = v + linalg.lu_solve(lu, resid)
    resid = np.abs(r - M @ v).max()
    if not np.isfinite(resid) or resid > RESIDUAL_TOL:
        raise NumericError(f"MRP solve residual {resid:.3g} exceeds {RESIDUAL_TOL}")
    return v


def mrp_value(model: HasaMdp, stoch: StochasticPolicy) -> ValueVector:
    """
    Exact state values of the Markov reward process obtained by running `stoch`:
    v = (I - γP)^-1 r, with P and r mixed over policy actions and a_np.
    """
    P = np.einsum("sa,sat->st", stoch.prob, model.transition)
    r = np.einsum("sa,sa->s", stoch.prob, model.reward)
    return _solve_mrp(P, r, model.discount)


def policy_value(model: HasaMdp, policy: DeterministicPolicy) -> float:
    """Initial-distribution-weighted value of handing `policy` to the human."""
    return float(model.initial_dist @ mrp_value(model, induce_stochastic(model, policy)))


@dataclass(frozen=True, eq=False)
class PcMdp:
    """
    Partially-controlled MDP for a branch-and-bound node. Each state keeps the
    lower-bound action mass of its partial policy fixed; the residual mass picks
    one candidate action. `transition[s, c]` and `reward[s, c]` are the effective
    row and reward of candidate c. `branch_action[c]` is the policy action the
    state itself takes under candidate c, or -1 when that is left open.
    """

    bounds: FixedProbabilityBounds | ConditionedBounds
    transition: np.ndarray  # (S, C, S)
    reward: np.ndarray  # (S, C)
    candidates: np.ndarray  # (S, C) bool
    discount: float
    branch_action: np.ndarray  # (C,)

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]


def build_pc_mdp(model: HasaMdp, partial: PartialPolicy) -> PcMdp:
    bounds = fixed_probability_bounds(model, partial)
    lb = bounds.as_matrix()
    fixed_T = np.einsum("sb,sbt->st", lb, model.transition)
    fixed_r = (lb * model.reward).sum(axis=1)
    res = bounds.residual
    candidates = np.ones(model.reward.shape, dtype=bool)
    candidates[:, -1] = bounds.max_delay - bounds.non_policy > NP_SLACK
    return PcMdp(
        bounds=bounds,
        transition=fixed_T[:, None, :] + res[:, None, None] * model.transition,
        reward=fixed_r[:, None] + res[:, None] * model.reward,
        candidates=candidates,
        discount=model.discount,
        branch_action=np.append(np.arange(model.n_actions), -1),
    )


def build_conditioned_pc_mdp(model: HasaMdp, partial: PartialPolicy) -> PcMdp:
    """
    PC-MDP over conditioned_bounds. Candidate (a, d, f) lets the state take
    action a, wait with probability d at one end of its delay interval and
    send all undecided classified mass to action f. Every completion executes a
    mixture of the candidates sharing its own action, so value iteration over
    them still bounds the node from above.
    """
    bounds = conditioned_bounds(model, partial)
    n_states, n_actions = model.n_states, model.n_actions
    delay = np.stack([bounds.non_policy, bounds.max_delay], axis=2)  # (S, a, d)
    own = np.eye(n_actions)

    # (S, a, d, f, A + 1)
    prob = np.zeros((n_states, n_actions, 2, n_actions, n_actions + 1))
    mass = bounds.decided_mass[:, :, None, :] + bounds.free_mass[:, None, None, None] * own[None, None]
    prob[..., :-1] = (1.0 - delay)[..., None, None] * mass[:, :, None]
    prob[..., -1] = delay[..., None]
    prob = prob.reshape(n_states, -1, n_actions + 1)

    keep = np.broadcast_to(bounds.valid[:, :, None, None], (n_states, n_actions, 2, n_actions)).copy()
    keep[:, :, 1] &= (bounds.max_delay - bounds.non_policy > NP_SLACK)[:, :, None]
    keep[:, :, :, 1:] &= (bounds.free_mass > 0)[:, None, None, None]
    return PcMdp(
        bounds=bounds,
        transition=np.einsum("scb,sbt->sct", prob, model.transition),
        reward=np.einsum("scb,sb->sc", prob, model.reward),
        candidates=keep.reshape(n_states, -1),
        discount=model.discount,
        branch_action=np.repeat(np.arange(n_actions), 2 * n_actions),
    )


@dataclass(frozen=True, eq=False)
class PcSolution:
    upper: ValueVector  # v_k + εγ/(1-γ)
    values: ValueVector  # v_k
    iterations: int
    epsilon: float

    def q_values(self, pc: PcMdp, state: int) -> np.ndarray:
        """One-step lookahead on v_k at `state`; -inf for non-candidates."""
        q = pc.reward[state] + pc.discount * pc.transition[state] @ self.values
        return np.where(pc.candidates[state], q, -np.inf)

    def action_values(self, pc: PcMdp, state: int, n_actions: int) -> np.ndarray:
        """Best candidate q-value per own action at `state`."""
        q = self.q_values(pc, state)
        out = np.full(n_actions, -np.inf)
        own = pc.branch_action >= 0
        np.maximum.at(out, pc.branch_action[own], q[own])
        return out


def solve_pc_mdp(
    pc: PcMdp,
    max_iters: int = DEFAULT_VI_ITERS,
    epsilon_target: float = DEFAULT_EPSILON,
) -> PcSolution:
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    gamma = pc.discount
    reward = np.where(pc.candidates, pc.reward, -np.inf)
    v = np.zeros(pc.n_states)
    eps = 0.0
    k = 0
    for k in range(1, max_iters + 1):
        v_next = (reward + gamma * (pc.transition @ v)).max(axis=1)
        eps = float(np.abs(v_next - v).max())
        v = v_next
        if eps <= epsilon_target:
            break
    return PcSolution(upper=v + eps * gamma / (1.0 - gamma), values=v, iterations=k, epsilon=eps)


def vi_upper_bound(
    pc: PcMdp,
    max_iters: int = DEFAULT_VI_ITERS,
    epsilon_target: float = DEFAULT_EPSILON,
) -> tuple[ValueVector, int]:
    """
    Value iteration on the PC-MDP from v_0 = 0. Returns per-state upper bounds
    v_k + εγ/(1-γ), ε = ||v_k - v_(k-1)||_inf, and the iterations used.
    """
    sol = solve_pc_mdp(pc, max_iters, epsilon_target)
    return sol.upper, sol.iterations


def iterations_for_epsilon(model: HasaMdp, epsilon: float) -> int:
    """Closed-form number of value-iteration sweeps that reaches error `epsilon`."""
    gamma = model.discount
    r_max = float(np.abs(model.reward).max()) if model.reward.size else 0.0
    if gamma == 0.0 or r_max == 0.0:
        return 1
    return max(1, math.ceil(math.log(2 * r_max / (epsilon * (1 - gamma))) / math.log(1 / gamma)))


def solve_mdp(model: HasaMdp, max_iters: int = 100_000, epsilon: float = 1e-12) -> tuple[ValueVector, DeterministicPolicy]:
    """
    Plain value iteration on the underlying MDP over the policy actions only;
    the no-aliasing oracle.
    """
    T = model.transition[:, : model.n_actions]
    R = model.reward[:, : model.n_actions]
    v = np.zeros(model.n_states)
    for _ in range(max_iters):
        q = R + model.discount * (T @ v)
        v_next = q.max(axis=1)
        done = np.abs(v_next - v).max() <= epsilon
        v = v_next
        if done:
            break
    q = R + model.discount * (T @ v)
    return v, DeterministicPolicy(tuple(int(a) for a in q.argmax(axis=1)))
