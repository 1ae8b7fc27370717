# hasa_mdp/document.py
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .errors import ModelParseError, SchemaVersionError
from .model import HasaMdp, UncertaintyEvent, UncertaintyModel

SCHEMA_VERSION = 1

REQUIRED_FIELDS = (
    "states",
    "actions",
    "non_policy_action",
    "transition",
    "reward",
    "discount",
    "initial_dist",
    "classification",
    "uncertainty_events",
    "patience",
)


def serialize_model(model: HasaMdp) -> str:
    """
    Render a model as a YAML document. Action axes of `transition` and `reward`
    list the policy actions in order followed by the non-policy action.
    """
    names = model.states
    doc = {
        "schema_version": SCHEMA_VERSION,
        "states": list(names),
        "actions": list(model.actions),
        "non_policy_action": model.non_policy_action,
        "discount": model.discount,
        "initial_dist": model.initial_dist.tolist(),
        "patience": model.patience.tolist(),
        "transition": model.transition.tolist(),
        "reward": model.reward.tolist(),
        "classification": model.classification.tolist(),
        "uncertainty_events": [
            {
                "true": names[ev.true],
                "best": names[ev.best],
                "alternates": [names[s] for s in sorted(ev.alternates)],
                "weight": ev.weight,
            }
            for ev in model.uncertainty.events
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=120)


def parse_model(text: str, debug: bool = False) -> HasaMdp:
    """
    Parse a YAML model document. Structural problems raise ModelParseError with
    the field path; semantic ones (rows not summing to 1, discount = 1, ...) are
    left for validate_model to report.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ModelParseError(f"malformed document: {getattr(exc, 'problem', exc)}", line=line) from exc

    if not isinstance(doc, dict):
        raise ModelParseError("model document must be a mapping at the top level")
    if "schema_version" not in doc:
        raise ModelParseError("missing field", path="schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(doc["schema_version"], SCHEMA_VERSION)
    for name in REQUIRED_FIELDS:
        if name not in doc:
            raise ModelParseError("missing field", path=name)

    states = _identifiers(doc["states"], "states")
    actions = _identifiers(doc["actions"], "actions")
    non_policy = doc["non_policy_action"]
    if not isinstance(non_policy, str):
        raise ModelParseError("expected an identifier string", path="non_policy_action")
    S, A = len(states), len(actions)
    if debug:
        print(f"[DEBUG] Parsing model with {S} states and {A} policy actions (+ {non_policy!r})")

    index = {name: i for i, name in enumerate(states)}
    events = []
    raw_events = doc["uncertainty_events"]
    if not isinstance(raw_events, list):
        raise ModelParseError("expected a list of events", path="uncertainty_events")
    for i, raw in enumerate(raw_events):
        path = f"uncertainty_events[{i}]"
        if not isinstance(raw, dict):
            raise ModelParseError("expected a mapping", path=path)
        for key in ("true", "best", "alternates", "weight"):
            if key not in raw:
                raise ModelParseError("missing field", path=f"{path}.{key}")
        if not isinstance(raw["alternates"], list):
            raise ModelParseError("expected a list of state identifiers", path=f"{path}.alternates")
        true = _lookup(index, raw["true"], f"{path}.true")
        best = _lookup(index, raw["best"], f"{path}.best")
        alts = [_lookup(index, s, f"{path}.alternates[{j}]") for j, s in enumerate(raw["alternates"])]
        events.append(UncertaintyEvent(true, best, frozenset(alts), _real(raw["weight"], f"{path}.weight")))

    return HasaMdp(
        states=states,
        actions=actions,
        non_policy_action=non_policy,
        transition=_array(doc["transition"], (S, A + 1, S), "transition"),
        reward=_array(doc["reward"], (S, A + 1), "reward"),
        discount=_real(doc["discount"], "discount"),
        initial_dist=_array(doc["initial_dist"], (S,), "initial_dist"),
        classification=_array(doc["classification"], (S, S), "classification"),
        uncertainty=UncertaintyModel(tuple(events)),
        patience=_array(doc["patience"], (S,), "patience"),
    )


def load_model(path: str | Path, debug: bool = False) -> HasaMdp:
    return parse_model(Path(path).read_text(), debug=debug)


def dump_model(model: HasaMdp, path: str | Path) -> None:
    Path(path).write_text(serialize_model(model))


def _identifiers(value, path: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ModelParseError("expected a list of identifier strings", path=path)
    return tuple(value)


def _lookup(index: dict[str, int], name, path: str) -> int:
    if name not in index:
        raise ModelParseError(f"unknown state {name!r}", path=path)
    return index[name]


def _real(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelParseError(f"expected a number, got {value!r}", path=path)
    return float(value)


def _check_nested(value, shape: tuple[int, ...], path: str) -> None:
    if not shape:
        _real(value, path)
        return
    if not isinstance(value, list) or len(value) != shape[0]:
        raise ModelParseError(f"expected a list of {shape[0]} entries", path=path)
    for i, item in enumerate(value):
        _check_nested(item, shape[1:], f"{path}[{i}]")


def _array(value, shape: tuple[int, ...], path: str) -> np.ndarray:
    _check_nested(value, shape, path)
    return np.array(value, dtype=float).reshape(shape)
