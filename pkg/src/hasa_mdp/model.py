# hasa_mdp/model.py
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ModelValidationError

# Absolute tolerance for every probability comparison in the package.
TOL = 1e-9

# Marker for a state whose action a PartialPolicy has not decided yet.
UNDECIDED = -1


@dataclass(frozen=True)
class UncertaintyEvent:
    """
    One mental state of the human at true state `true`: they lean towards `best`
    but also consider every state in `alternates`. An event whose alternates are
    exactly {best} encodes confidence and can never cause a policy conflict.
    """

    true: int
    best: int
    alternates: frozenset
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "true", int(self.true))
        object.__setattr__(self, "best", int(self.best))
        object.__setattr__(self, "alternates", frozenset(int(s) for s in self.alternates))
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def confident(self) -> bool:
        return self.alternates == frozenset({self.best})


@dataclass(frozen=True)
class UncertaintyModel:
    events: tuple

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    @classmethod
    def normalized(cls, events: Iterable[UncertaintyEvent], n_states: int) -> UncertaintyModel:
        """
        Scale event weights so they sum to 1 per true state. A true state with no
        positive-weight event gets a single confident self event of weight 1.
        """
        by_true: dict[int, list[UncertaintyEvent]] = {s: [] for s in range(n_states)}
        for ev in events:
            if ev.weight > 0:
                by_true[ev.true].append(ev)
        out: list[UncertaintyEvent] = []
        for s in range(n_states):
            group = by_true[s]
            total = sum(ev.weight for ev in group)
            if total <= 0:
                out.append(UncertaintyEvent(s, s, frozenset({s}), 1.0))
                continue
            out.extend(replace(ev, weight=ev.weight / total) for ev in group)
        return cls(tuple(out))

    @classmethod
    def confident_everywhere(cls, n_states: int) -> UncertaintyModel:
        return cls(tuple(UncertaintyEvent(s, s, frozenset({s}), 1.0) for s in range(n_states)))

    def for_state(self, state: int) -> list[UncertaintyEvent]:
        return [ev for ev in self.events if ev.true == state]


class EventArrays(NamedTuple):
    """Column view of an UncertaintyModel, shaped for vectorised conflict checks."""

    true: np.ndarray  # (E,) true-state index
    best: np.ndarray  # (E,) best-guess index
    alternates: np.ndarray  # (E, S) membership mask
    weight: np.ndarray  # (E,)
    confident: np.ndarray  # (E,) alternates == {best}


@dataclass(frozen=True, eq=False)
class HasaMdp:
    """
    A human-agent state-aliased MDP. Arrays are indexed by position in `states`
    and `actions`; the non-policy action sits at action index `len(actions)` in
    `transition` and `reward`. Instances are read-only after construction.
    """

    states: tuple
    actions: tuple
    non_policy_action: str
    transition: np.ndarray  # (S, A + 1, S)
    reward: np.ndarray  # (S, A + 1)
    discount: float
    initial_dist: np.ndarray  # (S,)
    classification: np.ndarray  # [true, guess]
    uncertainty: UncertaintyModel
    patience: np.ndarray  # (S,)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(str(a) for a in self.actions))
        object.__setattr__(self, "non_policy_action", str(self.non_policy_action))
        object.__setattr__(self, "discount", float(self.discount))
        for name in ("transition", "reward", "initial_dist", "classification", "patience"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        """Number of policy actions (the non-policy action is not counted)."""
        return len(self.actions)

    @property
    def np_index(self) -> int:
        return len(self.actions)

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None

    def action_index(self, name: str) -> int:
        if name == self.non_policy_action:
            return self.np_index
        try:
            return self.actions.index(name)
        except ValueError:
            raise KeyError(f"unknown action {name!r}") from None

    def action_name(self, index: int) -> str:
        return self.non_policy_action if index == self.np_index else self.actions[index]

    @cached_property
    def events(self) -> EventArrays:
        evs = self.uncertainty.events
        alt = np.zeros((len(evs), self.n_states), dtype=bool)
        for i, ev in enumerate(evs):
            alt[i, sorted(ev.alternates)] = True
        return EventArrays(
            true=np.array([ev.true for ev in evs], dtype=int),
            best=np.array([ev.best for ev in evs], dtype=int),
            alternates=alt,
            weight=np.array([ev.weight for ev in evs], dtype=float),
            confident=np.array([ev.confident for ev in evs], dtype=bool),
        )

    def without_aliasing(self) -> HasaMdp:
        """The underlying MDP: perfect classification, no uncertainty, ψ = 0."""
        n = self.n_states
        return replace(
            self,
            classification=np.eye(n),
            uncertainty=UncertaintyModel.confident_everywhere(n),
            patience=np.zeros(n),
        )


@dataclass(frozen=True)
class DeterministicPolicy:
    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))

    @classmethod
    def from_names(cls, model: HasaMdp, names: Mapping[str, str] | Sequence[str]) -> DeterministicPolicy:
        if isinstance(names, Mapping):
            missing = [s for s in model.states if s not in names]
            if missing:
                raise ValueError(f"policy has no action for states {missing}")
            names = [names[s] for s in model.states]
        if len(names) != model.n_states:
            raise ValueError(f"policy lists {len(names)} actions for {model.n_states} states")
        policy = cls(tuple(model.action_index(a) for a in names))
        policy.check(model)
        return policy

    @classmethod
    def uniform(cls, model: HasaMdp, action: int) -> DeterministicPolicy:
        return cls((action,) * model.n_states)

    def check(self, model: HasaMdp) -> None:
        if len(self.actions) != model.n_states:
            raise ValueError(f"policy covers {len(self.actions)} states, model has {model.n_states}")
        bad = [a for a in self.actions if not 0 <= a < model.n_actions]
        if bad:
            raise ValueError(f"policy uses non-selectable action indices {sorted(set(bad))}")

    def as_array(self) -> np.ndarray:
        return np.array(self.actions, dtype=int)

    def with_action(self, state: int, action: int) -> DeterministicPolicy:
        acts = list(self.actions)
        acts[state] = action
        return DeterministicPolicy(tuple(acts))

    def names(self, model: HasaMdp) -> dict[str, str]:
        return {s: model.actions[a] for s, a in zip(model.states, self.actions)}

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, state: int) -> int:
        return self.actions[state]


@dataclass(frozen=True)
class PartialPolicy:
    """A branch-and-bound node's assignment; undecided states hold UNDECIDED."""

    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))

    @classmethod
    def empty(cls, n_states: int) -> PartialPolicy:
        return cls((UNDECIDED,) * n_states)

    @classmethod
    def from_policy(cls, policy: DeterministicPolicy, decided: Iterable[int]) -> PartialPolicy:
        keep = set(decided)
        return cls(tuple(a if s in keep else UNDECIDED for s, a in enumerate(policy.actions)))

    def is_decided(self, state: int) -> bool:
        return self.actions[state] != UNDECIDED

    @property
    def decided_mask(self) -> np.ndarray:
        return np.array(self.actions, dtype=int) != UNDECIDED

    @property
    def depth(self) -> int:
        return sum(a != UNDECIDED for a in self.actions)

    @property
    def is_total(self) -> bool:
        return UNDECIDED not in self.actions

    def assign(self, state: int, action: int) -> PartialPolicy:
        acts = list(self.actions)
        acts[state] = action
        return PartialPolicy(tuple(acts))

    def as_array(self) -> np.ndarray:
        return np.array(self.actions, dtype=int)

    def to_policy(self) -> DeterministicPolicy:
        if not self.is_total:
            raise ValueError("partial policy still has undecided states")
        return DeterministicPolicy(self.actions)

    def completions(self, n_actions: int) -> Iterator[DeterministicPolicy]:
        open_states = [s for s, a in enumerate(self.actions) if a == UNDECIDED]
        for combo in itertools.product(range(n_actions), repeat=len(open_states)):
            acts = list(self.actions)
            for s, a in zip(open_states, combo):
                acts[s] = a
            yield DeterministicPolicy(tuple(acts))


@dataclass(frozen=True, eq=False)
class StochasticPolicy:
    """Per-state distribution over the policy actions plus the non-policy action (last column)."""

    prob: np.ndarray  # (S, A + 1)

    def __post_init__(self):
        arr = np.array(self.prob, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "prob", arr)

    @property
    def non_policy(self) -> np.ndarray:
        return self.prob[:, -1]


@dataclass(frozen=True)
class Violation:
    field: str
    index: tuple
    residual: float
    message: str

    def describe(self) -> str:
        idx = "".join(f"[{i}]" for i in self.index)
        return f"{self.field}{idx}: {self.message} (residual {self.residual:.3g})"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_for_violations(self) -> None:
        if self.violations:
            raise ModelValidationError(self)


def _outside_unit(x: float) -> float:
    return max(0.0, -x, x - 1.0)


def validate_model(model: HasaMdp) -> ValidationReport:
    """
    Check every HasaMdp invariant. Violations are returned, never raised; each
    names the field, the offending index (by identifier) and the residual.
    """
    out: list[Violation] = []
    S, A = model.n_states, model.n_actions
    acts = model.actions + (model.non_policy_action,)

    if S < 1:
        out.append(Violation("states", (), 1.0, "at least one state is required"))
    if A < 1:
        out.append(Violation("actions", (), 1.0, "at least one policy action is required"))
    if len(set(model.states)) != S:
        out.append(Violation("states", (), 0.0, "state identifiers must be unique"))
    if len(set(model.actions)) != A:
        out.append(Violation("actions", (), 0.0, "action identifiers must be unique"))
    if model.non_policy_action in model.actions:
        out.append(
            Violation("non_policy_action", (model.non_policy_action,), 0.0, "reserved identifier used as a policy action")
        )

    expected = {
        "transition": (S, A + 1, S),
        "reward": (S, A + 1),
        "initial_dist": (S,),
        "classification": (S, S),
        "patience": (S,),
    }
    bad_shape = False
    for name, shape in expected.items():
        got = getattr(model, name).shape
        if got != shape:
            out.append(Violation(name, (), 0.0, f"shape {got} should be {shape}"))
            bad_shape = True
    if bad_shape or S < 1:
        return ValidationReport(tuple(out))

    axes = {
        "transition": (model.states, acts, model.states),
        "initial_dist": (model.states,),
        "classification": (model.states, model.states),
        "patience": (model.states,),
    }
    for name, labels in axes.items():
        for index in zip(*np.nonzero(~np.isfinite(getattr(model, name)))):
            where = tuple(lab[i] for lab, i in zip(labels, index))
            out.append(Violation(name, where, float("inf"), "value is not finite"))

    T = model.transition
    for s, a, t in zip(*np.nonzero((T < -TOL) | (T > 1 + TOL))):
        out.append(
            Violation("transition", (model.states[s], acts[a], model.states[t]), _outside_unit(T[s, a, t]), "probability outside [0, 1]")
        )
    row_res = np.abs(T.sum(axis=2) - 1.0)
    for s, a in zip(*np.nonzero(row_res > TOL)):
        out.append(Violation("transition", (model.states[s], acts[a]), float(row_res[s, a]), "row does not sum to 1"))

    for s, a in zip(*np.nonzero(~np.isfinite(model.reward))):
        out.append(Violation("reward", (model.states[s], acts[a]), float("inf"), "reward is not finite"))

    if not np.isfinite(model.discount):
        out.append(Violation("discount", (), float("inf"), "discount is not finite"))
    elif not 0.0 <= model.discount < 1.0:
        out.append(Violation("discount", (), max(0.0, -model.discount, model.discount - 1.0), "discount must lie in [0, 1)"))

    p0 = model.initial_dist
    for s in np.nonzero((p0 < -TOL) | (p0 > 1 + TOL))[0]:
        out.append(Violation("initial_dist", (model.states[s],), _outside_unit(p0[s]), "probability outside [0, 1]"))
    res = abs(p0.sum() - 1.0)
    if res > TOL:
        out.append(Violation("initial_dist", (), float(res), "does not sum to 1"))

    C = model.classification
    for s, g in zip(*np.nonzero((C < -TOL) | (C > 1 + TOL))):
        out.append(
            Violation("classification", (model.states[s], model.states[g]), _outside_unit(C[s, g]), "probability outside [0, 1]")
        )
    row_res = np.abs(C.sum(axis=1) - 1.0)
    for s in np.nonzero(row_res > TOL)[0]:
        out.append(Violation("classification", (model.states[s],), float(row_res[s]), "row does not sum to 1"))

    psi = model.patience
    for s in np.nonzero((psi < 0) | (psi > 1))[0]:
        out.append(Violation("patience", (model.states[s],), _outside_unit(psi[s]), "patience must lie in [0, 1]"))

    totals = np.zeros(S)
    for i, ev in enumerate(model.uncertainty.events):
        idx = ("uncertainty_events", (i,))
        ids = [ev.true, ev.best, *ev.alternates]
        if any(not 0 <= x < S for x in ids):
            out.append(Violation(*idx, 0.0, "event refers to an unknown state"))
            continue
        if not ev.alternates:
            out.append(Violation(*idx, 0.0, "alternate set is empty"))
        if ev.best in ev.alternates and not ev.confident:
            out.append(Violation(*idx, 0.0, "best guess inside a non-trivial alternate set"))
        if not np.isfinite(ev.weight):
            out.append(Violation(*idx, float("inf"), "weight is not finite"))
        elif not 0.0 <= ev.weight <= 1.0:
            out.append(Violation(*idx, _outside_unit(ev.weight), "weight outside [0, 1]"))
        totals[ev.true] += ev.weight
    row_res = np.abs(totals - 1.0)
    for s in np.nonzero(row_res > TOL)[0]:
        out.append(Violation("uncertainty_events", (model.states[s],), float(row_res[s]), "event weights do not sum to 1"))

    return ValidationReport(tuple(out))
