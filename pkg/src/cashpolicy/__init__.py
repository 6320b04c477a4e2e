"""Optimal cash transfer policies for systems of multiple bank accounts."""

from .engine import BnbOptions, MultiBank, solve_cost, solve_milp, solve_risk
from .files import load_problem, write_problem
from .model import (
    CashSystem,
    CostStructure,
    InvalidInstanceError,
    ProblemInstance,
    RiskParams,
    Solution,
    Status,
    check_feasible,
    describe,
    empirical_ccar,
    period_cost,
    policy_cost_total,
    propagate_balances,
    validate_system,
)

__version__ = "0.1.0"

__all__ = [
    "BnbOptions",
    "CashSystem",
    "CostStructure",
    "InvalidInstanceError",
    "MultiBank",
    "ProblemInstance",
    "RiskParams",
    "Solution",
    "Status",
    "check_feasible",
    "describe",
    "empirical_ccar",
    "example_path",
    "load_problem",
    "period_cost",
    "policy_cost_total",
    "propagate_balances",
    "solve_cost",
    "solve_milp",
    "solve_risk",
    "validate_system",
    "write_problem",
]


def example_path(name: str = "example_s4"):
    """Path of a bundled example problem file."""
    from importlib.resources import files

    return files(__name__) / "data" / f"{name}.json"
