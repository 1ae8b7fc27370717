# hasa_mdp/domains.py
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import DeterministicPolicy, HasaMdp, UncertaintyEvent, UncertaintyModel

GRID_ACTIONS = ("up", "down", "left", "right")
GRID_MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}
ARROWS = {"U": "up", "D": "down", "L": "left", "R": "right"}
NON_POLICY = "wait"

SIZES = ("small", "medium", "large")

# Share of best guesses landing on one wrap variant of each box size, by true
# order size. Wrap is guessed at random, so both variants of a size get this
# share and each row sums to one half.
WAREHOUSE_SIZE_GUESS = {
    "large": {"large": 0.3268, "medium": 0.1634, "small": 0.0098},
    "medium": {"large": 0.1250, "medium": 0.2500, "small": 0.1250},
    "small": {"large": 0.0098, "medium": 0.1634, "small": 0.3268},
}


@dataclass(frozen=True)
class GridworldConfig:
    width: int = 5
    height: int = 5
    m: float = 5.0
    discount: float = 0.7
    rnr: float = 0.0
    slip: float = 0.05
    goal_reward: float = 100.0
    non_policy_reward: float = -0.1
    psi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.slip <= 1.0:
            raise ValueError(f"slip must lie in [0, 1], got {self.slip}")
        if self.rnr < 0:
            raise ValueError(f"rnr must be non-negative, got {self.rnr}")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if not 0.0 <= self.psi <= 1.0:
            raise ValueError(f"psi must lie in [0, 1], got {self.psi}")


@dataclass(frozen=True)
class WarehouseConfig:
    rnr: float = 0.0
    discount: float = 0.7
    slip: float = 0.05
    order_dist: tuple | None = None  # over warehouse_states(); uniform when None
    psi: float = 1.0
    non_policy_reward: float = -0.1
    partial_reward: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.rnr < 0:
            raise ValueError(f"rnr must be non-negative, got {self.rnr}")
        if not 0.0 <= self.slip <= 1.0:
            raise ValueError(f"slip must lie in [0, 1], got {self.slip}")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if not 0.0 <= self.psi <= 1.0:
            raise ValueError(f"psi must lie in [0, 1], got {self.psi}")
        if self.order_dist is not None:
            dist = np.asarray(self.order_dist, dtype=float)
            if dist.shape != (6,) or (dist < 0).any() or abs(dist.sum() - 1.0) > 1e-9:
                raise ValueError("order_dist must be 6 non-negative probabilities summing to 1")
            object.__setattr__(self, "order_dist", tuple(float(p) for p in dist))


@dataclass(frozen=True)
class RandomModelConfig:
    n_states: int = 4
    n_actions: int = 3
    discount: float = 0.7
    psi: float | None = None  # drawn per state from U[0, 1] when None
    max_alternates: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_states < 1 or self.n_actions < 1:
            raise ValueError("random models need at least one state and one action")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if self.psi is not None and not 0.0 <= self.psi <= 1.0:
            raise ValueError(f"psi must lie in [0, 1], got {self.psi}")


def pairwise_uncertainty(classification: np.ndarray) -> UncertaintyModel:
    """
    One event per unordered pair of distinct guesses, weighted by the mean of
    their classification probabilities and normalised per true state. The more
    likely guess of the pair is the best guess.
    """
    n = classification.shape[0]
    events = []
    for true in range(n):
        p = classification[true]
        for g1, g2 in itertools.combinations(range(n), 2):
            best, alt = (g1, g2) if p[g1] >= p[g2] else (g2, g1)
            events.append(UncertaintyEvent(true, best, frozenset({alt}), (p[g1] + p[g2]) / 2))
    return UncertaintyModel.normalized(events, n)


def gridworld_classification(width: int, height: int, m: float) -> np.ndarray:
    """p_c(guess | true) proportional to 1 / (L1(guess, true) + 1[guess = true])^m."""
    cells = np.array([(r, c) for r in range(height) for c in range(width)])
    dist = np.abs(cells[:, None, :] - cells[None, :, :]).sum(axis=2)
    weight = 1.0 / (dist + np.eye(len(cells))) ** m
    return weight / weight.sum(axis=1, keepdims=True)


def make_gridworld(config: GridworldConfig | None = None) -> HasaMdp:
    """
    Grid cells as states, goal in the bottom-right corner. Moves succeed with
    probability 1 - slip, otherwise a uniformly random move applies; moves off
    the grid stay put. Entering the goal pays goal_reward; the goal absorbs and
    pays nothing afterwards. Waiting stays put at non_policy_reward.
    """
    cfg = config or GridworldConfig()
    W, H = cfg.width, cfg.height
    S, A = W * H, len(GRID_ACTIONS)
    goal = S - 1
    names = [f"r{r}c{c}" for r in range(H) for c in range(W)]

    dest = np.empty((S, A), dtype=int)
    for s in range(S):
        r, c = divmod(s, W)
        for k, action in enumerate(GRID_ACTIONS):
            dr, dc = GRID_MOVES[action]
            nr, nc = r + dr, c + dc
            dest[s, k] = nr * W + nc if 0 <= nr < H and 0 <= nc < W else s

    T = np.zeros((S, A + 1, S))
    for s in range(S):
        T[s, A, s] = 1.0
        if s == goal:
            T[s, :, s] = 1.0
            continue
        for a in range(A):
            T[s, a, dest[s, a]] += 1.0 - cfg.slip
            for b in range(A):
                T[s, a, dest[s, b]] += cfg.slip / A

    rng = np.random.default_rng(cfg.seed)
    noise = rng.uniform(-cfg.rnr / 2, cfg.rnr / 2, size=(S, A))
    R = np.zeros((S, A + 1))
    R[:, :A] = cfg.goal_reward * T[:, :A, goal] + noise
    R[:, A] = cfg.non_policy_reward
    R[goal, :] = 0.0

    p0 = np.zeros(S)
    if S == 1:
        p0[0] = 1.0
    else:
        p0[:goal] = 1.0 / (S - 1)

    C = gridworld_classification(W, H, cfg.m)
    return HasaMdp(
        states=names,
        actions=GRID_ACTIONS,
        non_policy_action=NON_POLICY,
        transition=T,
        reward=R,
        discount=cfg.discount,
        initial_dist=p0,
        classification=C,
        uncertainty=pairwise_uncertainty(C),
        patience=np.full(S, cfg.psi),
    )


def gridworld_policy(rows: Sequence[str]) -> DeterministicPolicy:
    """Policy from arrow rows, e.g. ["RRD", "RRD"]; U/D/L/R per cell, row-major."""
    actions = [GRID_ACTIONS.index(ARROWS[ch]) for row in rows for ch in row.upper()]
    return DeterministicPolicy(tuple(actions))


def warehouse_states() -> list[str]:
    return [f"{size}{suffix}" for size in SIZES for suffix in ("", "-wrap")]


def warehouse_classification() -> np.ndarray:
    """The guess table read with true states as columns, renormalised onto the diagonal."""
    names = warehouse_states()
    C = np.zeros((6, 6))
    for t, true in enumerate(names):
        for g, guess in enumerate(names):
            C[t, g] = WAREHOUSE_SIZE_GUESS[true.split("-")[0]][guess.split("-")[0]]
        C[t, t] += 1.0 - C[t].sum()
    return C


def make_warehouse(config: WarehouseConfig | None = None) -> HasaMdp:
    """
    Orders of three sizes, each needing bubble wrap or not; the worker picks one
    of six packagings. Undersizing packs part of the order (partial_reward) and
    leaves the next smaller order, split 50/50 over wrap variants when the order
    needed wrap. Any other packaging completes the order and a fresh order
    arrives from order_dist. The exact packaging pays 1, every other choice pays
    its base reward minus U[0, rnr] noise. Slip replaces the chosen packaging's
    outcome with a random one's; the reward stays with the chosen packaging.
    """
    cfg = config or WarehouseConfig()
    names = warehouse_states()
    S = A = len(names)
    order_dist = np.full(S, 1.0 / S) if cfg.order_dist is None else np.array(cfg.order_dist)
    level = {size: i for i, size in enumerate(SIZES)}
    parsed = [(level[n.split("-")[0]], n.endswith("-wrap")) for n in names]
    index = {key: i for i, key in enumerate(parsed)}

    rng = np.random.default_rng(cfg.seed)
    noise = rng.uniform(0.0, cfg.rnr, size=(S, A))

    outcome = np.zeros((S, A, S))
    R = np.zeros((S, A + 1))
    for s, (size, wrap) in enumerate(parsed):
        for a, (asize, awrap) in enumerate(parsed):
            if asize < size:
                rest = size - 1
                if wrap:
                    outcome[s, a, index[(rest, False)]] = 0.5
                    outcome[s, a, index[(rest, True)]] = 0.5
                else:
                    outcome[s, a, index[(rest, False)]] = 1.0
                R[s, a] = cfg.partial_reward - noise[s, a]
            else:
                outcome[s, a] = order_dist
                R[s, a] = 1.0 if (asize, awrap) == (size, wrap) else 1.0 - noise[s, a]

    T = np.zeros((S, A + 1, S))
    T[:, :A] = (1.0 - cfg.slip) * outcome + cfg.slip * outcome.mean(axis=1, keepdims=True)
    T[:, A] = np.eye(S)
    R[:, A] = cfg.non_policy_reward

    C = warehouse_classification()
    return HasaMdp(
        states=names,
        actions=[f"pack-{n}" for n in names],
        non_policy_action=NON_POLICY,
        transition=T,
        reward=R,
        discount=cfg.discount,
        initial_dist=order_dist,
        classification=C,
        uncertainty=pairwise_uncertainty(C),
        patience=np.full(S, cfg.psi),
    )


def make_random_model(config: RandomModelConfig | None = None) -> HasaMdp:
    """Seeded Garnet-style instance: Dirichlet rows everywhere, random uncertainty sets."""
    cfg = config or RandomModelConfig()
    S, A = cfg.n_states, cfg.n_actions
    rng = np.random.default_rng(cfg.seed)

    T = rng.dirichlet(np.ones(S), size=(S, A + 1))
    R = rng.uniform(0.0, 1.0, size=(S, A + 1))
    R[:, A] = rng.uniform(-0.5, 0.0, size=S)
    p0 = rng.dirichlet(np.ones(S))
    C = 0.5 * np.eye(S) + 0.5 * rng.dirichlet(np.ones(S), size=S)
    psi = rng.uniform(0.0, 1.0, size=S) if cfg.psi is None else np.full(S, cfg.psi)

    events = []
    for true in range(S):
        for _ in range(rng.integers(1, 4)):
            best = int(rng.choice(S, p=C[true]))
            others = [s for s in range(S) if s != best]
            k = int(rng.integers(0, min(cfg.max_alternates, len(others)) + 1))
            alts = frozenset(int(s) for s in rng.choice(others, size=k, replace=False)) if k else frozenset({best})
            events.append(UncertaintyEvent(true, best, alts, rng.uniform(0.05, 1.0)))

    return HasaMdp(
        states=[f"s{i}" for i in range(S)],
        actions=[f"a{j}" for j in range(A)],
        non_policy_action=NON_POLICY,
        transition=T,
        reward=R,
        discount=cfg.discount,
        initial_dist=p0,
        classification=C,
        uncertainty=UncertaintyModel.normalized(events, S),
        patience=psi,
    )
