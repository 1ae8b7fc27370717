# hasa_mdp/oracle.py
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .aliasing import conflicting_events
from .errors import EnumerationCapError
from .model import DeterministicPolicy, HasaMdp
from .valuation import policy_value

DEFAULT_CAP = 10**6
DEFAULT_EPISODES = 10_000
HORIZON_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    episodes: int
    horizon: int
    seed: int


def enumerate_optimal(model: HasaMdp, cap: int = DEFAULT_CAP) -> tuple[DeterministicPolicy, float, int]:
    """
    Evaluate every deterministic policy. Policies are visited in lexicographic
    order and only a strictly better value replaces the best, so ties go to the
    lexicographically smallest policy.
    """
    size = model.n_actions**model.n_states
    if size > cap:
        raise EnumerationCapError(size, cap)
    best_policy, best_value = None, -math.inf
    count = 0
    for actions in itertools.product(range(model.n_actions), repeat=model.n_states):
        policy = DeterministicPolicy(actions)
        value = policy_value(model, policy)
        count += 1
        if value > best_value:
            best_policy, best_value = policy, value
    return best_policy, best_value, count


def _max_reward(model: HasaMdp) -> float:
    return float(np.abs(model.reward).max()) if model.reward.size else 0.0


def default_horizon(model: HasaMdp, tolerance: float = HORIZON_TOLERANCE) -> int:
    """Smallest horizon h with γ^h ≤ tolerance, so the tail is that fraction of Rmax/(1-γ)."""
    gamma = model.discount
    if gamma == 0.0 or _max_reward(model) == 0.0:
        return 1
    return max(1, math.ceil(math.log(tolerance) / math.log(gamma)))


def truncation_bias(model: HasaMdp, horizon: int) -> float:
    """Largest possible |value| of the rewards a truncated episode leaves out."""
    gamma = model.discount
    return gamma**horizon * _max_reward(model) / (1.0 - gamma)


def _sample_rows(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # cdf: (N, K) running sums of (possibly unnormalised) rows, u: (N,) in [0, 1)
    picked = (cdf < (u * cdf[:, -1])[:, None]).sum(axis=1)
    return np.minimum(picked, cdf.shape[1] - 1)


class _ExecutionSampler:
    """Draws the action a state-aliased human executes, one step at a time."""

    def __init__(self, model: HasaMdp, policy: DeterministicPolicy):
        self.model = model
        self.actions = policy.as_array()
        ev = model.events
        conflict = conflicting_events(model, self.actions)
        self.event_cdf = []
        self.event_conflict = []
        for s in range(model.n_states):
            mine = np.nonzero(ev.true == s)[0]
            self.event_cdf.append(np.cumsum(ev.weight[mine]))
            self.event_conflict.append(conflict[mine])
        self.guess_cdf = np.cumsum(model.classification, axis=1)

    def executed(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = len(states)
        u_event, u_delay, u_guess = rng.random(n), rng.random(n), rng.random(n)
        delayed = np.zeros(n, dtype=bool)
        for s in np.unique(states):
            cdf = self.event_cdf[s]
            if not len(cdf):
                continue
            idx = np.nonzero(states == s)[0]
            k = np.minimum(np.searchsorted(cdf, u_event[idx] * cdf[-1], side="right"), len(cdf) - 1)
            delayed[idx] = self.event_conflict[s][k] & (u_delay[idx] < self.model.patience[s])
        guesses = _sample_rows(self.guess_cdf[states], u_guess)
        return np.where(delayed, self.model.np_index, self.actions[guesses])


def _rollouts(model: HasaMdp, policy: DeterministicPolicy, episodes: int, horizon: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    sampler = _ExecutionSampler(model, policy)
    next_cdf = np.cumsum(model.transition, axis=2)
    start_cdf = np.cumsum(model.initial_dist)
    states = _sample_rows(np.broadcast_to(start_cdf, (episodes, model.n_states)), rng.random(episodes))
    returns = np.zeros(episodes)
    weight = 1.0
    for _ in range(horizon):
        acts = sampler.executed(states, rng)
        returns += weight * model.reward[states, acts]
        states = _sample_rows(next_cdf[states, acts], rng.random(episodes))
        weight *= model.discount
    return returns


def _rollout_job(args) -> np.ndarray:
    return _rollouts(*args)


def simulate_policy(
    model: HasaMdp,
    policy: DeterministicPolicy,
    episodes: int = DEFAULT_EPISODES,
    horizon: int | None = None,
    seed: int = 0,
    workers: int = 1,
    debug: bool = False,
) -> SimEstimate:
    """
    Monte Carlo estimate of handing `policy` to the human. Every step draws an
    uncertainty event for the true state; a conflicting event delays with
    probability ψ, otherwise a guess drawn from p_c picks the policy action.

    With `workers` > 1 the episodes are split into contiguous shares, each
    seeded from a SeedSequence spawned off `seed`; the estimate then depends on
    `seed` and `workers` only.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    policy.check(model)
    horizon = default_horizon(model) if horizon is None else horizon
    if horizon < 1:
        raise ValueError("horizon must be at least 1")

    if workers > 1:
        shares = np.array_split(np.arange(episodes), workers)
        seeds = np.random.SeedSequence(seed).spawn(workers)
        jobs = [(model, policy, len(share), horizon, ss) for share, ss in zip(shares, seeds) if len(share)]
        with Pool(workers) as pool:
            returns = np.concatenate(pool.map(_rollout_job, jobs))
    else:
        returns = _rollouts(model, policy, episodes, horizon, seed)

    mean = float(returns.mean())
    se = float(returns.std(ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    if debug:
        print(f"[DEBUG] simulated {episodes} episodes x {horizon} steps: {mean:.12g} ± {se:.3g}")
    return SimEstimate(mean=mean, std_error=se, episodes=episodes, horizon=horizon, seed=seed)


def action_frequencies(
    model: HasaMdp,
    policy: DeterministicPolicy,
    state: int,
    draws: int = 100_000,
    seed: int = 0,
) -> np.ndarray:
    """Empirical distribution over the A + 1 executed actions at `state`."""
    rng = np.random.default_rng(seed)
    acts = _ExecutionSampler(model, policy).executed(np.full(draws, state), rng)
    return np.bincount(acts, minlength=model.n_actions + 1) / draws
