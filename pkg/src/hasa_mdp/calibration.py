# hasa_mdp/calibration.py
from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EstimationError, RecordParseError
from .model import UncertaintyEvent, UncertaintyModel


@dataclass(frozen=True)
class GuessRecord:
    """
    One tested instance: the true state, the human's best guess and any other
    states they seriously considered (empty when they were sure).
    """

    true_state: str
    best_guess: str
    alternates: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "alternates", frozenset(str(s) for s in self.alternates))
        if self.best_guess in self.alternates:
            raise ValueError(f"best guess {self.best_guess!r} repeated among the alternates")


@dataclass(frozen=True)
class RetryRecord:
    true_state: str
    retry_count: int

    def __post_init__(self):
        if self.retry_count < 0:
            raise ValueError(f"retry_count must be non-negative, got {self.retry_count}")


def record_states(records: Iterable[GuessRecord]) -> list[str]:
    """Every identifier mentioned by the records, sorted."""
    seen = set()
    for r in records:
        seen.update((r.true_state, r.best_guess, *r.alternates))
    return sorted(seen)


def _indexer(states: Sequence[str]):
    index = {s: i for i, s in enumerate(states)}

    def lookup(name: str) -> int:
        if name not in index:
            raise EstimationError(name, "record refers to a state outside the table")
        return index[name]

    return lookup


def estimate_classification(
    records: Sequence[GuessRecord],
    states: Sequence[str] | None = None,
    smoothing: bool = False,
) -> np.ndarray:
    """
    p_c(guess | true) from best-guess counts, normalised per true state. With
    `smoothing`, one pseudo-count is added to every (true, guess) cell.
    """
    states = list(states) if states is not None else record_states(records)
    lookup = _indexer(states)
    counts = np.zeros((len(states), len(states)))
    for r in records:
        counts[lookup(r.true_state), lookup(r.best_guess)] += 1
    if smoothing:
        counts += 1.0
    totals = counts.sum(axis=1)
    empty = np.nonzero(totals == 0)[0]
    if empty.size:
        raise EstimationError(states[empty[0]])
    return counts / totals[:, None]


def estimate_uncertainty(
    records: Sequence[GuessRecord],
    states: Sequence[str] | None = None,
    smoothing: bool = False,
) -> UncertaintyModel:
    """
    p_u from whole-record counts: each distinct (true, best, alternates) tuple is
    one event, weighted by its share of the true state's records. Records with no
    alternates become confident events. With `smoothing`, a true state without
    records gets a confident self event instead of an error.
    """
    states = list(states) if states is not None else record_states(records)
    lookup = _indexer(states)
    groups: Counter = Counter()
    totals: Counter = Counter()
    for r in records:
        true, best = lookup(r.true_state), lookup(r.best_guess)
        alts = frozenset(lookup(s) for s in r.alternates) or frozenset({best})
        groups[(true, best, alts)] += 1
        totals[true] += 1

    events = []
    for s, name in enumerate(states):
        if totals[s] == 0:
            if not smoothing:
                raise EstimationError(name)
            events.append(UncertaintyEvent(s, s, frozenset({s}), 1.0))
    for (true, best, alts), count in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], sorted(kv[0][2]))):
        events.append(UncertaintyEvent(true, best, alts, count / totals[true]))
    events.sort(key=lambda ev: ev.true)
    return UncertaintyModel(tuple(events))


def estimate_psi(mean_retries: float) -> float:
    """
    Patience from the mean number of non-policy repetitions. Retries are
    geometric with E = p/(1-p), so p = E/(1+E).
    """
    if not math.isfinite(mean_retries) or mean_retries < 0:
        raise ValueError(f"mean_retries must be a finite non-negative number, got {mean_retries}")
    return mean_retries / (1.0 + mean_retries)


def estimate_psi_per_state(records: Iterable[RetryRecord]) -> dict[str, float]:
    retries = defaultdict(list)
    for r in records:
        retries[r.true_state].append(r.retry_count)
    return {s: estimate_psi(float(np.mean(v))) for s, v in sorted(retries.items())}


def estimate_psi_pooled(records: Iterable[RetryRecord]) -> float:
    counts = [r.retry_count for r in records]
    if not counts:
        raise ValueError("no retry records")
    return estimate_psi(float(np.mean(counts)))


def _rows(path: str | Path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            yield lineno, [cell.strip() for cell in row]


def read_guess_records(path: str | Path) -> list[GuessRecord]:
    """`true_state,best_guess,alt1;alt2` per line; the third column may be empty or absent."""
    out = []
    for lineno, row in _rows(path):
        if len(row) not in (2, 3) or not row[0] or not row[1]:
            raise RecordParseError("expected true_state,best_guess[,alternates]", lineno)
        alts = [a.strip() for a in row[2].split(";") if a.strip()] if len(row) == 3 else []
        try:
            out.append(GuessRecord(row[0], row[1], frozenset(alts)))
        except ValueError as exc:
            raise RecordParseError(str(exc), lineno) from exc
    return out


def read_retry_records(path: str | Path) -> list[RetryRecord]:
    """`true_state,retry_count` per line."""
    out = []
    for lineno, row in _rows(path):
        if len(row) != 2 or not row[0]:
            raise RecordParseError("expected true_state,retry_count", lineno)
        try:
            out.append(RetryRecord(row[0], int(row[1])))
        except ValueError as exc:
            raise RecordParseError(str(exc), lineno) from exc
    return out
