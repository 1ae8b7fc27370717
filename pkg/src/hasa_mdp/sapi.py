# hasa_mdp/sapi.py
from __future__ import annotations

from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .model import DeterministicPolicy, HasaMdp
from .valuation import policy_value

BEST_STEP = "best-step"
PER_STATE = "per-state"
MODES = (BEST_STEP, PER_STATE)

# Smallest gain that counts as an improvement.
IMPROVEMENT_TOL = 1e-12

DEFAULT_RESTARTS = 10


@dataclass(frozen=True)
class SapiResult:
    """
    Outcome of one hill climb. `trace` holds the value of the start policy and
    then the value after every accepted change, so it is strictly increasing and
    ends at `value`.
    """

    policy: DeterministicPolicy
    value: float
    trace: tuple
    steps: int
    restart: int = 0


def seed_streams(seed: int | None) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for the start policy and the per-state sweep order."""
    start, order = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(start), np.random.default_rng(order)


def random_policy(model: HasaMdp, seed: int | None) -> DeterministicPolicy:
    rng, _ = seed_streams(seed)
    return DeterministicPolicy(tuple(int(a) for a in rng.integers(model.n_actions, size=model.n_states)))


def _best_change(model: HasaMdp, policy: DeterministicPolicy, states) -> tuple[float, int, int] | None:
    # Scans in the given state order, actions ascending; earlier wins ties.
    best = None
    for s in states:
        for a in range(model.n_actions):
            if a == policy[s]:
                continue
            v = policy_value(model, policy.with_action(s, a))
            if best is None or v > best[0]:
                best = (v, int(s), a)
    return best


def sapi_run(
    model: HasaMdp,
    initial: DeterministicPolicy | None = None,
    seed: int | None = 0,
    mode: str = BEST_STEP,
    restart: int = 0,
    debug: bool = False,
) -> SapiResult:
    """
    State-Aliased Policy Improvement. From `initial` (or a policy drawn uniformly
    per state from `seed`), repeatedly apply the single state-action change with
    the largest aliased value until no change improves by more than
    IMPROVEMENT_TOL.

    mode="per-state" instead sweeps the states in random order and greedily
    re-picks the action of one state at a time.
    """
    if mode not in MODES:
        raise ValueError(f"unknown SAPI mode {mode!r}; expected one of {MODES}")
    if initial is None:
        initial = random_policy(model, seed)
    initial.check(model)

    policy = initial
    value = policy_value(model, policy)
    trace = [value]
    if debug:
        print(f"[DEBUG] SAPI restart {restart}: start value {value:.12g}")

    if mode == BEST_STEP:
        while True:
            best = _best_change(model, policy, range(model.n_states))
            if best is None or best[0] <= value + IMPROVEMENT_TOL:
                break
            value, s, a = best
            policy = policy.with_action(s, a)
            trace.append(value)
            if debug:
                print(f"[DEBUG] SAPI restart {restart}: state {s} -> action {a}, value {value:.12g}")
    else:
        _, rng = seed_streams(seed)
        improved = True
        while improved:
            improved = False
            for s in rng.permutation(model.n_states):
                best = _best_change(model, policy, [s])
                if best is None or best[0] <= value + IMPROVEMENT_TOL:
                    continue
                value, s, a = best
                policy = policy.with_action(s, a)
                trace.append(value)
                improved = True
                if debug:
                    print(f"[DEBUG] SAPI restart {restart}: state {s} -> action {a}, value {value:.12g}")

    return SapiResult(policy=policy, value=value, trace=tuple(trace), steps=len(trace) - 1, restart=restart)


def _restart_job(args) -> SapiResult:
    model, seed, mode, restart, debug = args
    return sapi_run(model, seed=seed, mode=mode, restart=restart, debug=debug)


def sapi_restarts(
    model: HasaMdp,
    n_restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    mode: str = BEST_STEP,
    workers: int = 1,
    debug: bool = False,
) -> tuple[SapiResult, list[SapiResult]]:
    """
    Run `n_restarts` independent climbs; restart i starts from the policy drawn
    with seed `seed + i`. Returns the best result (earliest restart on ties) and
    all results in restart order, identical for any `workers`.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be at least 1")
    jobs = [(model, seed + i, mode, i, debug) for i in range(n_restarts)]
    if workers > 1:
        with Pool(workers) as pool:
            results = pool.map(_restart_job, jobs)
    else:
        results = [_restart_job(job) for job in jobs]
    best = max(results, key=lambda r: (r.value, -r.restart))
    if debug:
        print(f"[DEBUG] SAPI best of {n_restarts} restarts: restart {best.restart}, value {best.value:.12g}")
    return best, results
