# hasa_mdp/experiment.py
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

from .bnb import BnbConfig, branch_and_bound
from .domains import GridworldConfig, WarehouseConfig, make_gridworld, make_warehouse
from .model import HasaMdp
from .sapi import sapi_restarts
from .valuation import DEFAULT_VI_ITERS

DOMAINS = ("grid", "warehouse")
SWEEPS = {"gamma": "discount", "rnr": "rnr"}

SAPI_CSV = "sapi_runs.csv"
BNB_CSV = "bnb_runs.csv"
SAPI_COLUMNS = ("sweep_value", "run_index", "sapi_value", "normalized_value")
BNB_COLUMNS = ("sweep_value", "bnb_value", "nodes_opened", "wall_time", "complete", "upper_bound")

DomainConfig = Union[GridworldConfig, WarehouseConfig]


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One sweep: `sweep` names the varied parameter ("gamma" or "rnr"), every
    other setting comes from `base` (the domain's defaults when None).
    """

    domain: str
    sweep: str
    values: tuple
    out: Path
    runs: int = 30
    bnb: bool = True
    seed: int = 0
    vi_max_iters: int = DEFAULT_VI_ITERS
    max_nodes: int | None = None
    workers: int = 1
    base: DomainConfig | None = field(default=None)

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {tuple(SWEEPS)}, got {self.sweep!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("sweep values must be non-empty")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        object.__setattr__(self, "out", Path(self.out))
        if self.base is None:
            base = GridworldConfig() if self.domain == "grid" else WarehouseConfig()
            object.__setattr__(self, "base", base)

    def model_at(self, value: float) -> HasaMdp:
        cfg = replace(self.base, **{SWEEPS[self.sweep]: value})
        return make_gridworld(cfg) if self.domain == "grid" else make_warehouse(cfg)


@dataclass(frozen=True)
class ExperimentResult:
    sapi_rows: list
    bnb_rows: list
    sapi_path: Path
    bnb_path: Path


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.12g}" if isinstance(x, float) else str(x)


def _write_csv(path: Path, columns: tuple, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def run_experiment(spec: ExperimentSpec, debug: bool = False) -> ExperimentResult:
    """
    For every sweep value: `spec.runs` SAPI climbs (restart i seeded seed + i)
    and, when enabled, one branch-and-bound solve seeded with the best climb as
    incumbent. normalized_value is sapi_value / bnb_value, left empty without
    branch and bound. A solve cut short by `spec.max_nodes` is marked incomplete
    and its normalized values are relative to the best policy it found.
    """
    sapi_rows, bnb_rows = [], []
    for value in sorted(spec.values):
        model = spec.model_at(value)
        best, runs = sapi_restarts(model, spec.runs, spec.seed, workers=spec.workers, debug=debug)
        bnb_value = None
        if spec.bnb:
            config = BnbConfig(
                vi_max_iters=spec.vi_max_iters, sapi_restarts=spec.runs, seed=spec.seed, max_nodes=spec.max_nodes
            )
            result = branch_and_bound(model, config, incumbent=best, debug=debug)
            bnb_value = result.value
            bnb_rows.append(
                (value, result.value, result.nodes_opened, result.wall_time, result.complete, result.upper_bound)
            )
        for run in runs:
            normalized = run.value / bnb_value if bnb_value else None
            sapi_rows.append((value, run.restart, run.value, normalized))
        if debug:
            print(f"[DEBUG] {spec.domain} {spec.sweep}={value:g} done (bnb {_fmt(bnb_value) or 'skipped'})")

    sapi_rows.sort(key=lambda row: (row[0], row[1]))
    spec.out.mkdir(parents=True, exist_ok=True)
    sapi_path, bnb_path = spec.out / SAPI_CSV, spec.out / BNB_CSV
    _write_csv(sapi_path, SAPI_COLUMNS, sapi_rows)
    _write_csv(bnb_path, BNB_COLUMNS, bnb_rows)
    return ExperimentResult(sapi_rows, bnb_rows, sapi_path, bnb_path)
