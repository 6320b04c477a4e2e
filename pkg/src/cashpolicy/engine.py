"""Branch-and-bound over binary indicators, and the cash-policy solve facade."""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass

import numpy as np

from .formulate import MilpModel, VariableMap, build_cost_model, build_cost_risk_model
from .model import (
    CashSystem,
    CostStructure,
    ProblemInstance,
    RiskParams,
    Solution,
    Status,
    describe,
    period_cost,
)
from .simplex import DEFAULT_MAX_ITERS, LpProblem, solve_lp

logger = logging.getLogger(__name__)

INT_TOL = 1e-6


@dataclass(frozen=True)
class BnbOptions:
    abs_gap: float = 1e-6
    rel_gap: float = 1e-9
    max_nodes: int = 100_000
    max_lp_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        if self.abs_gap < 0 or self.rel_gap < 0:
            raise ValueError("gaps must be nonnegative")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be at least 1")


@dataclass
class MilpResult:
    status: Status
    x: np.ndarray | None
    objective: float | None
    nodes: int
    lp_iterations: int


def _prune_tol(incumbent: float, options: BnbOptions) -> float:
    # both gap criteria must hold, so the tighter one governs
    return min(options.abs_gap, options.rel_gap * max(1.0, abs(incumbent)))


def solve_milp(model: MilpModel, options: BnbOptions | None = None) -> MilpResult:
    """Minimise a MILP whose integer variables are all binary.

    Best-first search on the parent LP bound (ties by creation order),
    branching on the most fractional binary (ties by lowest index), with the
    down branch created first.
    """
    options = options or BnbOptions()
    A, senses, rhs = model.dense()
    binaries = np.flatnonzero(model.integrality)
    lp_iters = 0

    def relax(lower, upper):
        nonlocal lp_iters
        sol = solve_lp(LpProblem(model.objective, A, senses, rhs, lower, upper, model.objective_offset),
                       options.max_lp_iters)
        lp_iters += sol.iterations
        return sol

    incumbent_x = None
    incumbent = np.inf
    counter = 0
    heap = [(-np.inf, counter, model.var_lower.copy(), model.var_upper.copy())]
    nodes = 0
    hit_limit = False

    while heap:
        bound, _, lower, upper = heapq.heappop(heap)
        if incumbent_x is not None and bound >= incumbent - _prune_tol(incumbent, options):
            continue
        if nodes >= options.max_nodes:
            hit_limit = True
            break
        nodes += 1
        sol = relax(lower, upper)
        if sol.status is Status.INFEASIBLE:
            continue
        if sol.status is Status.UNBOUNDED:
            if nodes == 1:
                return MilpResult(Status.UNBOUNDED, None, None, nodes, lp_iters)
            continue
        if sol.status is Status.ITERATION_LIMIT:
            hit_limit = True
            break
        if incumbent_x is not None and sol.objective >= incumbent - _prune_tol(incumbent, options):
            continue
        y = sol.x
        if binaries.size:
            vals = y[binaries]
            frac = np.abs(vals - np.round(vals))
        else:
            frac = np.zeros(0)
        fractional = frac > INT_TOL
        if not fractional.any():
            if binaries.size and np.any(frac > 0):
                # snap and re-solve so continuous values agree with exact 0/1
                snapped = np.round(y[binaries])
                lo, hi = lower.copy(), upper.copy()
                lo[binaries] = hi[binaries] = snapped
                fixed = relax(lo, hi)
                if fixed.status is not Status.OPTIMAL:
                    continue
                sol = fixed
            y = sol.x.copy()
            y[binaries] = np.round(y[binaries])
            incumbent_x = y
            incumbent = sol.objective
            logger.debug("node %d: incumbent %.10g", nodes, incumbent)
            continue
        # most fractional: largest distance to the nearest integer; argmax takes the first
        k = int(binaries[np.argmax(np.where(fractional, frac, -1.0))])
        down_upper = upper.copy()
        down_upper[k] = 0.0
        up_lower = lower.copy()
        up_lower[k] = 1.0
        counter += 1
        heapq.heappush(heap, (sol.objective, counter, lower, down_upper))
        counter += 1
        heapq.heappush(heap, (sol.objective, counter, up_lower, upper))

    if incumbent_x is not None:
        y = incumbent_x
        objective = float(model.objective @ y + model.objective_offset)
        status = Status.ITERATION_LIMIT if hit_limit else Status.OPTIMAL
        return MilpResult(status, y, objective, nodes, lp_iters)
    status = Status.ITERATION_LIMIT if hit_limit else Status.INFEASIBLE
    return MilpResult(status, None, None, nodes, lp_iters)


def _decode(instance: ProblemInstance, vmap: VariableMap, result: MilpResult, elapsed: float) -> Solution:
    stats = dict(nodes=result.nodes, lp_iterations=result.lp_iterations, wall_time=elapsed)
    if result.x is None:
        return Solution(result.status, None, None, None, None, None, **stats)
    X, _, B, D = vmap.decode(result.x)
    X = np.maximum(X, 0.0) + 0.0  # clear -0.0 and float dust below zero
    D = np.maximum(D, 0.0) + 0.0
    B = B + 0.0
    costs = np.array([period_cost(X[t], B[t], instance.costs) for t in range(instance.horizon)])
    return Solution(result.status, X, B, result.objective, costs, D, **stats)


def solve_cost(instance: ProblemInstance, options: BnbOptions | None = None) -> Solution:
    """Minimum total transfer-plus-holding cost policy over the horizon."""
    start = time.perf_counter()
    model, vmap = build_cost_model(instance)
    result = solve_milp(model, options)
    return _decode(instance, vmap, result, time.perf_counter() - start)


def solve_risk(instance: ProblemInstance, risk: RiskParams, options: BnbOptions | None = None) -> Solution:
    """Policy minimising the weighted, budget-normalised sum of cost and cost-at-risk deviations."""
    start = time.perf_counter()
    model, vmap = build_cost_risk_model(instance, risk)
    result = solve_milp(model, options)
    return _decode(instance, vmap, result, time.perf_counter() - start)


class MultiBank:
    """Stateful front end for a fixed cash system and cost structure.

    Parameters
    ----------
    banks : sequence
        Account labels.
    trans : sequence
        Transaction labels.
    A : array-like, shape (n_transactions, n_accounts)
        Incidence matrix.
    g0, g1 : mapping or sequence
        Fixed and variable transaction costs, keyed by transaction label
        when given as mappings.
    v : mapping or sequence
        Holding cost per account.
    b_min : sequence
        Minimum balance per account.

    After a solve, ``policy``, ``balance`` and ``objval`` describe the most
    recent result; the risk parameters of the last risk solve are kept in
    ``costref``, ``costmax``, ``riskmax``, ``costweight`` and ``riskweight``.
    """

    def __init__(self, banks, trans, A, g0, g1, v, b_min, options: BnbOptions | None = None):
        self.system = CashSystem(banks, trans, A)
        self.costs = CostStructure(
            self._by_label(g0, self.system.transaction_labels),
            self._by_label(g1, self.system.transaction_labels),
            self._by_label(v, self.system.account_labels),
        )
        self.b_min = np.asarray(b_min, dtype=float)
        self.options = options or BnbOptions()
        self.last_solution: Solution | None = None
        self.costref = self.costmax = self.riskmax = None
        self.costweight = self.riskweight = None

    @staticmethod
    def _by_label(values, labels):
        if hasattr(values, "keys"):
            return [values[label] for label in labels]
        return list(values)

    def instance(self, b0, F) -> ProblemInstance:
        return ProblemInstance(self.system, self.costs, self.b_min, b0, F)

    def describe(self) -> str:
        return describe(system=self.system, costs=self.costs, min_balance=self.b_min)

    def _store(self, sol: Solution) -> Solution:
        self.last_solution = sol
        if not sol.ok:
            logger.warning("unable to find an optimal policy (status %s)", sol.status)
        return sol

    def solve_cost(self, b0, F) -> Solution:
        return self._store(solve_cost(self.instance(b0, F), self.options))

    def solve_risk(self, b0, F, c0, cmax, rmax, w1, w2) -> Solution:
        risk = RiskParams(c0, cmax, rmax, w1, w2)
        self.costref, self.costmax, self.riskmax = risk.cost_ref, risk.cost_budget, risk.risk_budget
        self.costweight, self.riskweight = risk.cost_weight, risk.risk_weight
        return self._store(solve_risk(self.instance(b0, F), risk, self.options))

    @property
    def policy(self) -> np.ndarray | None:
        return None if self.last_solution is None else self.last_solution.policy

    @property
    def balance(self) -> np.ndarray | None:
        return None if self.last_solution is None else self.last_solution.balances

    @property
    def objval(self) -> float | None:
        return None if self.last_solution is None else self.last_solution.objective
