from .aliasing import conditioned_bounds, delay_probability, fixed_probability_bounds, induce_stochastic
from .bnb import BnbConfig, BnbResult, branch_and_bound, order_states
from .calibration import estimate_classification, estimate_psi, estimate_uncertainty
from .document import load_model, parse_model, serialize_model
from .domains import GridworldConfig, WarehouseConfig, make_gridworld, make_random_model, make_warehouse
from .errors import HasaError
from .experiment import ExperimentSpec, run_experiment
from .model import (
    DeterministicPolicy,
    HasaMdp,
    PartialPolicy,
    StochasticPolicy,
    UncertaintyEvent,
    UncertaintyModel,
    validate_model,
)
from .oracle import enumerate_optimal, simulate_policy
from .sapi import SapiResult, sapi_restarts, sapi_run
from .valuation import build_conditioned_pc_mdp, build_pc_mdp, mrp_value, policy_value, solve_pc_mdp, vi_upper_bound

__all__ = [
    "BnbConfig",
    "BnbResult",
    "DeterministicPolicy",
    "ExperimentSpec",
    "GridworldConfig",
    "HasaError",
    "HasaMdp",
    "PartialPolicy",
    "SapiResult",
    "StochasticPolicy",
    "UncertaintyEvent",
    "UncertaintyModel",
    "WarehouseConfig",
    "branch_and_bound",
    "build_conditioned_pc_mdp",
    "build_pc_mdp",
    "conditioned_bounds",
    "delay_probability",
    "enumerate_optimal",
    "estimate_classification",
    "estimate_psi",
    "estimate_uncertainty",
    "fixed_probability_bounds",
    "induce_stochastic",
    "load_model",
    "make_gridworld",
    "make_random_model",
    "make_warehouse",
    "mrp_value",
    "order_states",
    "parse_model",
    "policy_value",
    "run_experiment",
    "sapi_restarts",
    "sapi_run",
    "serialize_model",
    "simulate_policy",
    "solve_pc_mdp",
    "validate_model",
    "vi_upper_bound",
]
