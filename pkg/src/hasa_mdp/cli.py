# hasa_mdp/cli.py
from __future__ import annotations

import functools
from dataclasses import replace
from pathlib import Path

import click
import numpy as np
import yaml

from .bnb import BEST_FIRST, BOUNDS, CONDITIONED_BOUND, NODE_ORDERS, BnbConfig, branch_and_bound
from .calibration import (
    estimate_classification,
    estimate_psi_per_state,
    estimate_psi_pooled,
    estimate_uncertainty,
    read_guess_records,
    read_retry_records,
    record_states,
)
from .document import load_model, serialize_model
from .domains import (
    GridworldConfig,
    RandomModelConfig,
    WarehouseConfig,
    make_gridworld,
    make_random_model,
    make_warehouse,
)
from .errors import HasaError
from .experiment import ExperimentSpec, run_experiment
from .model import DeterministicPolicy, HasaMdp, validate_model
from .oracle import DEFAULT_CAP, DEFAULT_EPISODES, enumerate_optimal, simulate_policy
from .sapi import BEST_STEP, DEFAULT_RESTARTS, MODES, sapi_restarts
from .valuation import DEFAULT_EPSILON, DEFAULT_VI_ITERS, iterations_for_epsilon, policy_value


def _reports_errors(func):
    """Turn package errors into a one-line message and exit code 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (HasaError, ValueError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load(path: str, debug: bool) -> HasaMdp:
    model = load_model(path, debug=debug)
    validate_model(model).raise_for_violations()
    return model


def _load_policy(model: HasaMdp, spec: str) -> DeterministicPolicy:
    """A solve report (its `policy` mapping) or a comma-separated list of action names."""
    path = Path(spec)
    try:
        if path.is_file():
            report = yaml.safe_load(path.read_text())
            if not isinstance(report, dict) or not isinstance(report.get("policy"), dict):
                raise click.BadParameter(f"{spec} has no 'policy' mapping", param_hint="--policy")
            return DeterministicPolicy.from_names(model, report["policy"])
        return DeterministicPolicy.from_names(model, [a.strip() for a in spec.split(",")])
    except (KeyError, ValueError) as exc:
        raise click.BadParameter(str(exc), param_hint="--policy") from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


def _report(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=120)


def _float_list(ctx, param, value):
    if value is None:
        return None
    try:
        values = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers") from None
    if not values:
        raise click.BadParameter("at least one value is required")
    return values


@click.group()
@click.option("--debug", is_flag=True, default=False, help="Enable debug output")
@click.pass_context
def main(ctx: click.Context, debug: bool):
    """
    Evaluate and optimise policies for people who may misjudge the state
    they are in.
    """
    ctx.obj = {"debug": debug}


@main.command("gen-domain")
@click.argument("kind", type=click.Choice(["grid", "warehouse", "random"]))
@click.option("--w", "width", type=int, help="Grid width")
@click.option("--h", "height", type=int, help="Grid height")
@click.option("--m", type=float, help="Grid classification sharpness")
@click.option("--gamma", type=float, help="Discount factor")
@click.option("--rnr", type=float, help="Reward noise range")
@click.option("--slip", type=float, help="Probability of a random outcome")
@click.option("--psi", type=float, help="Patience for every state")
@click.option("--states", "n_states", type=int, help="Random model: number of states")
@click.option("--actions", "n_actions", type=int, help="Random model: number of policy actions")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Write the document here instead of stdout")
@_reports_errors
def gen_domain(kind, width, height, m, gamma, rnr, slip, psi, n_states, n_actions, seed, out):
    """Write a model document for one of the built-in domains."""
    overrides = {"discount": gamma, "psi": psi}
    if kind == "grid":
        overrides.update(width=width, height=height, m=m, rnr=rnr, slip=slip)
        config = GridworldConfig(seed=seed)
    elif kind == "warehouse":
        overrides.update(rnr=rnr, slip=slip)
        config = WarehouseConfig(seed=seed)
    else:
        overrides.update(n_states=n_states, n_actions=n_actions)
        config = RandomModelConfig(seed=seed)
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    build = {"grid": make_gridworld, "warehouse": make_warehouse, "random": make_random_model}[kind]
    _emit(serialize_model(build(config)), out)


@main.command("solve-sapi")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--restarts", type=click.IntRange(min=1), default=DEFAULT_RESTARTS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(MODES), default=BEST_STEP, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
@_reports_errors
def solve_sapi(ctx, model_path, restarts, seed, mode, workers, out):
    """Hill-climb from random policies and report the best one found."""
    debug = ctx.obj["debug"]
    model = _load(model_path, debug)
    best, results = sapi_restarts(model, restarts, seed, mode=mode, workers=workers, debug=debug)
    report = {
        "solver": "sapi",
        "policy": best.policy.names(model),
        "value": best.value,
        "restart": best.restart,
        "trace": list(best.trace),
        "restart_values": [r.value for r in results],
        "seed": seed,
    }
    _emit(_report(report), out)


@main.command("solve-bnb")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--vi-iters", type=click.IntRange(min=1), default=DEFAULT_VI_ITERS, show_default=True)
@click.option("--order", type=click.Choice(NODE_ORDERS), default=BEST_FIRST, show_default=True)
@click.option("--restarts", type=click.IntRange(min=1), default=DEFAULT_RESTARTS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--vi-epsilon", type=click.FloatRange(min=0, min_open=True),
              help="Pick the value-iteration sweeps that reach this error (overrides --vi-iters)")
@click.option("--bound", type=click.Choice(BOUNDS), default=CONDITIONED_BOUND, show_default=True)
@click.option("--max-nodes", type=click.IntRange(min=1), help="Stop after opening this many nodes")
@click.option("--no-bounds", is_flag=True, default=False, help="Expand every node (no pruning)")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
@_reports_errors
def solve_bnb(ctx, model_path, vi_iters, order, restarts, seed, vi_epsilon, bound, max_nodes, no_bounds, out):
    """Optimal policy by branch and bound."""
    debug = ctx.obj["debug"]
    model = _load(model_path, debug)
    epsilon = DEFAULT_EPSILON
    if vi_epsilon is not None:
        epsilon = vi_epsilon
        vi_iters = iterations_for_epsilon(model, vi_epsilon)
        if debug:
            print(f"[DEBUG] {vi_iters} value-iteration sweeps for error {vi_epsilon:g}")
    config = BnbConfig(
        vi_max_iters=vi_iters,
        epsilon_target=epsilon,
        node_order=order,
        sapi_restarts=restarts,
        seed=seed,
        use_bounds=not no_bounds,
        bound=bound,
        max_nodes=max_nodes,
    )
    result = branch_and_bound(model, config, debug=debug)
    report = {
        "solver": "bnb",
        "policy": result.policy.names(model),
        "value": result.value,
        "nodes_opened": result.nodes_opened,
        "complete": result.complete,
        "upper_bound": result.upper_bound,
        "vi_iters": vi_iters,
        "wall_time": result.wall_time,
        "initial_incumbent": result.initial_incumbent,
        "incumbent_trace": list(result.incumbent_trace),
    }
    _emit(_report(report), out)


@main.command("enumerate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cap", type=click.IntRange(min=1), default=DEFAULT_CAP, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
@_reports_errors
def enumerate_cmd(ctx, model_path, cap, out):
    """Exhaustive search over every deterministic policy (small models only)."""
    model = _load(model_path, ctx.obj["debug"])
    policy, value, count = enumerate_optimal(model, cap)
    _emit(_report({"solver": "enumerate", "policy": policy.names(model), "value": value, "evaluated": count}), out)


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", "policy_spec", required=True, help="Solve report or comma-separated actions")
@click.pass_context
@_reports_errors
def eval_cmd(ctx, model_path, policy_spec):
    """Print the state-aliased value of a policy."""
    model = _load(model_path, ctx.obj["debug"])
    policy = _load_policy(model, policy_spec)
    click.echo(f"{policy_value(model, policy):.12g}")


@main.command("simulate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", "policy_spec", required=True, help="Solve report or comma-separated actions")
@click.option("--episodes", type=click.IntRange(min=1), default=DEFAULT_EPISODES, show_default=True)
@click.option("--horizon", type=click.IntRange(min=1), help="Steps per episode [default: from the discount]")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.pass_context
@_reports_errors
def simulate(ctx, model_path, policy_spec, episodes, horizon, seed, workers):
    """Monte Carlo estimate of a policy's value."""
    debug = ctx.obj["debug"]
    model = _load(model_path, debug)
    policy = _load_policy(model, policy_spec)
    est = simulate_policy(model, policy, episodes, horizon, seed=seed, workers=workers, debug=debug)
    report = {
        "mean": est.mean,
        "std_error": est.std_error,
        "episodes": est.episodes,
        "horizon": est.horizon,
        "seed": est.seed,
    }
    click.echo(_report(report), nl=False)


@main.command("calibrate")
@click.option("--guesses", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--retries", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              help="Fill the estimates into this model and write a model document")
@click.option("--smoothing", is_flag=True, default=False, help="Add one pseudo-count per cell")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
@_reports_errors
def calibrate(ctx, guesses, retries, model_path, smoothing, out):
    """Estimate p_c, p_u and ψ from recorded human guesses and retries."""
    records = read_guess_records(guesses)
    model = _load(model_path, ctx.obj["debug"]) if model_path else None
    states = list(model.states) if model else record_states(records)
    C = estimate_classification(records, states, smoothing=smoothing)
    pu = estimate_uncertainty(records, states, smoothing=smoothing)
    retry_records = read_retry_records(retries) if retries else []
    if retries and not retry_records:
        raise click.BadParameter("the file holds no retry records", param_hint="--retries")
    per_state = estimate_psi_per_state(retry_records)
    pooled = estimate_psi_pooled(retry_records) if retry_records else None

    if model is not None:
        patience = model.patience
        if retries:
            patience = np.array([per_state.get(s, pooled) for s in states])
        fitted = replace(model, classification=C, uncertainty=pu, patience=patience)
        validate_model(fitted).raise_for_violations()
        _emit(serialize_model(fitted), out)
        return

    report = {
        "states": states,
        "classification": C.tolist(),
        "uncertainty_events": [
            {
                "true": states[ev.true],
                "best": states[ev.best],
                "alternates": [states[s] for s in sorted(ev.alternates)],
                "weight": ev.weight,
            }
            for ev in pu.events
        ],
    }
    if retries:
        report["psi"] = per_state
        report["psi_pooled"] = pooled
    _emit(_report(report), out)


@main.command("experiment")
@click.option("--domain", type=click.Choice(["grid", "warehouse"]), default="grid", show_default=True)
@click.option("--sweep", type=click.Choice(["gamma", "rnr"]), default="gamma", show_default=True)
@click.option("--values", required=True, callback=_float_list, help="Comma-separated sweep values")
@click.option("--runs", type=click.IntRange(min=1), default=30, show_default=True)
@click.option("--bnb/--no-bnb", default=True, show_default=True)
@click.option("--gamma", type=float, help="Discount when sweeping rnr")
@click.option("--rnr", type=float, help="Reward noise when sweeping gamma")
@click.option("--slip", type=float)
@click.option("--psi", type=float)
@click.option("--w", "width", type=int, help="Grid width")
@click.option("--h", "height", type=int, help="Grid height")
@click.option("--vi-iters", type=click.IntRange(min=1), default=DEFAULT_VI_ITERS, show_default=True)
@click.option("--max-nodes", type=click.IntRange(min=1), help="Node budget per branch and bound solve")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Directory for the CSV tables")
@click.pass_context
@_reports_errors
def experiment(
    ctx, domain, sweep, values, runs, bnb, gamma, rnr, slip, psi, width, height, vi_iters, max_nodes, workers, seed, out
):
    """Sweep discount or reward noise; write sapi_runs.csv and bnb_runs.csv."""
    overrides = {"discount": gamma, "rnr": rnr, "slip": slip, "psi": psi}
    if domain == "grid":
        overrides.update(width=width, height=height)
        base = GridworldConfig(seed=seed)
    else:
        base = WarehouseConfig(seed=seed)
    base = replace(base, **{k: v for k, v in overrides.items() if v is not None})
    spec = ExperimentSpec(
        domain=domain,
        sweep=sweep,
        values=tuple(values),
        out=Path(out),
        runs=runs,
        bnb=bnb,
        seed=seed,
        vi_max_iters=vi_iters,
        max_nodes=max_nodes,
        workers=workers,
        base=base,
    )
    result = run_experiment(spec, debug=ctx.obj["debug"])
    click.echo(f"{result.sapi_path}\n{result.bnb_path}")
