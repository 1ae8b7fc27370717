# hasa_mdp/bnb.py
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import DeterministicPolicy, HasaMdp, PartialPolicy
from .sapi import DEFAULT_RESTARTS, SapiResult, sapi_restarts
from .valuation import (
    DEFAULT_EPSILON,
    DEFAULT_VI_ITERS,
    PcMdp,
    build_conditioned_pc_mdp,
    build_pc_mdp,
    policy_value,
    solve_pc_mdp,
)

BEST_FIRST = "best-first"
DEPTH_FIRST = "depth-first"
NODE_ORDERS = (BEST_FIRST, DEPTH_FIRST)

CONDITIONED_BOUND = "conditioned"
FIXED_BOUND = "fixed"
BOUNDS = (CONDITIONED_BOUND, FIXED_BOUND)


@dataclass(frozen=True)
class BnbConfig:
    vi_max_iters: int = DEFAULT_VI_ITERS
    epsilon_target: float = DEFAULT_EPSILON
    prune_tolerance: float = 1e-12
    node_order: str = BEST_FIRST
    sapi_restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    use_bounds: bool = True
    bound: str = CONDITIONED_BOUND
    max_nodes: int | None = None

    def __post_init__(self):
        if self.node_order not in NODE_ORDERS:
            raise ValueError(f"node_order must be one of {NODE_ORDERS}, got {self.node_order!r}")
        if self.bound not in BOUNDS:
            raise ValueError(f"bound must be one of {BOUNDS}, got {self.bound!r}")
        if self.vi_max_iters < 1:
            raise ValueError("vi_max_iters must be at least 1")
        if self.sapi_restarts < 1:
            raise ValueError("sapi_restarts must be at least 1")
        if self.prune_tolerance < 0:
            raise ValueError("prune_tolerance must be non-negative")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ValueError("max_nodes must be at least 1")

    def build(self, model: HasaMdp, partial: PartialPolicy) -> PcMdp:
        if self.bound == FIXED_BOUND:
            return build_pc_mdp(model, partial)
        return build_conditioned_pc_mdp(model, partial)


@dataclass(frozen=True, eq=False)
class BnbNode:
    """
    A search-tree node. For a total policy `upper_bound` is its exact value.
    `child_order` lists the actions to try at the next state, best q first.
    """

    partial: PartialPolicy
    depth: int
    upper_bound: float
    child_order: tuple | None = None


@dataclass(frozen=True)
class BnbResult:
    """
    `complete` is False when the node budget ran out first; `upper_bound` is
    then the largest bound left on the frontier, and equals `value` otherwise.
    """

    policy: DeterministicPolicy
    value: float
    nodes_opened: int
    wall_time: float
    initial_incumbent: float
    incumbent_trace: tuple
    complete: bool = True
    upper_bound: float = math.nan


def order_states(model: HasaMdp) -> list[int]:
    """
    States by descending p_i(s) * sum_s' p_c(s | s') * max_a r(s', a), so that
    likely starting states that attract much confusion from rewarding states are
    decided first. Ties keep index order.
    """
    best_reward = model.reward[:, : model.n_actions].max(axis=1)
    score = model.initial_dist * (model.classification.T @ best_reward)
    return sorted(range(model.n_states), key=lambda s: (-score[s], s))


class _Frontier:
    def __init__(self, node_order: str):
        self.node_order = node_order
        self._items: list = []
        self._seq = itertools.count()

    def push_children(self, children: list[BnbNode]) -> None:
        # children arrive best-first
        if self.node_order == BEST_FIRST:
            for child in children:
                heapq.heappush(self._items, (-child.upper_bound, next(self._seq), child))
        else:
            self._items.extend(reversed(children))

    def pop(self) -> BnbNode:
        if self.node_order == BEST_FIRST:
            return heapq.heappop(self._items)[2]
        return self._items.pop()

    def nodes(self) -> list[BnbNode]:
        if self.node_order == BEST_FIRST:
            return [item[2] for item in self._items]
        return list(self._items)

    def __len__(self) -> int:
        return len(self._items)


def branch_and_bound(
    model: HasaMdp,
    config: BnbConfig | None = None,
    incumbent: SapiResult | None = None,
    debug: bool = False,
) -> BnbResult:
    """
    Optimal deterministic policy by branch and bound over state assignments in
    `order_states` order. Interior nodes are bounded by the initial-distribution
    weighted value-iteration upper bound of their PC-MDP (`config.bound` picks
    the construction); total policies are evaluated exactly. The incumbent
    starts from SAPI restarts unless given.

    Nodes opened counts every node whose bound or value was computed below the
    root. The root only orders its children and is not counted, so a
    single-state model opens at most one node per action.
    With `config.max_nodes` set, the search stops expanding once that many nodes
    are opened and reports the best policy found so far with `complete=False`.
    """
    config = config or BnbConfig()
    started = time.perf_counter()
    order = order_states(model)
    n_actions = model.n_actions
    tol = config.prune_tolerance

    if incumbent is None:
        incumbent, _ = sapi_restarts(model, config.sapi_restarts, config.seed, debug=debug)
    best_policy, best_value = incumbent.policy, incumbent.value
    trace = [best_value]
    opened = 0
    if debug:
        print(f"[DEBUG] BnB state order {order}; {config.bound} bound; incumbent {best_value:.12g}")

    def bounded(partial: PartialPolicy) -> BnbNode:
        pc = config.build(model, partial)
        sol = solve_pc_mdp(pc, config.vi_max_iters, config.epsilon_target)
        q = sol.action_values(pc, order[partial.depth], n_actions)
        child_order = tuple(sorted(range(n_actions), key=lambda a: (-q[a], a)))
        return BnbNode(partial, partial.depth, float(model.initial_dist @ sol.upper), child_order)

    def evaluate(partial: PartialPolicy) -> BnbNode:
        nonlocal opened
        opened += 1
        if partial.is_total:
            return BnbNode(partial, partial.depth, policy_value(model, partial.to_policy()))
        if not config.use_bounds:
            return BnbNode(partial, partial.depth, math.inf)
        return bounded(partial)

    frontier = _Frontier(config.node_order)
    if model.n_states:
        root = PartialPolicy.empty(model.n_states)
        frontier.push_children([bounded(root) if config.use_bounds else BnbNode(root, 0, math.inf)])

    while len(frontier):
        if config.max_nodes is not None and opened >= config.max_nodes:
            break
        node = frontier.pop()
        if config.use_bounds and node.upper_bound <= best_value + tol:
            continue
        state = order[node.depth]
        children = []
        for a in node.child_order or range(n_actions):
            child = evaluate(node.partial.assign(state, a))
            if child.partial.is_total:
                if child.upper_bound > best_value:
                    best_value, best_policy = child.upper_bound, child.partial.to_policy()
                    trace.append(best_value)
                    if debug:
                        print(f"[DEBUG] BnB new incumbent {best_value:.12g} after {opened} nodes")
                continue
            if config.use_bounds and child.upper_bound <= best_value + tol:
                if debug:
                    print(f"[DEBUG] BnB pruned depth {child.depth} bound {child.upper_bound:.12g}")
                continue
            children.append(child)
        frontier.push_children(children)

    open_bounds = [n.upper_bound for n in frontier.nodes() if n.upper_bound > best_value + tol]
    complete = not open_bounds
    wall = time.perf_counter() - started
    if debug:
        status = "done" if complete else f"stopped, {len(open_bounds)} nodes open"
        print(f"[DEBUG] BnB {status}: value {best_value:.12g}, {opened} nodes, {wall:.3f}s")
    return BnbResult(
        policy=best_policy,
        value=best_value,
        nodes_opened=opened,
        wall_time=wall,
        initial_incumbent=trace[0],
        incumbent_trace=tuple(trace),
        complete=complete,
        upper_bound=max(open_bounds, default=best_value),
    )


def node_bound(model: HasaMdp, partial: PartialPolicy, config: BnbConfig | None = None) -> float:
    """The upper bound branch_and_bound assigns to an interior node."""
    config = config or BnbConfig()
    sol = solve_pc_mdp(config.build(model, partial), config.vi_max_iters, config.epsilon_target)
    return float(np.dot(model.initial_dist, sol.upper))
