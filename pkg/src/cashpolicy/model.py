"""Domain types for multi-account cash management and solver-free evaluation.

Money amounts (balances, flows, transfers) are in money units; variable and
holding costs are cost units per money unit, fixed costs are flat cost units.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Hashable, NamedTuple, Sequence

import numpy as np

#: Transfers at or below this amount are treated as not executed.
ACTIVE_TOL = 1e-9
#: Absolute tolerance used when checking minimum balances.
FEAS_TOL = 1e-9


class InvalidInstanceError(ValueError):
    """Raised when inputs violate the structural rules of a problem."""


def _as_float_array(values, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise InvalidInstanceError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)


class Shortfall(NamedTuple):
    period: int  # 1-based
    account: int  # 0-based column index
    shortfall: float


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violations: list[Shortfall] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class CashSystem:
    """Accounts, allowed transfers, and the transfer/account incidence matrix.

    ``incidence[i, j]`` is +1 when transaction ``i`` adds cash to account
    ``j``, -1 when it removes cash from it, and 0 otherwise.
    """

    account_labels: tuple
    transaction_labels: tuple
    incidence: np.ndarray

    def __init__(self, account_labels: Sequence[Hashable], transaction_labels: Sequence[Hashable], incidence):
        object.__setattr__(self, "account_labels", tuple(account_labels))
        object.__setattr__(self, "transaction_labels", tuple(transaction_labels))
        object.__setattr__(self, "incidence", _as_float_array(incidence, "incidence", 2))
        if self.incidence.shape != (self.num_transactions, self.num_accounts):
            raise InvalidInstanceError(
                f"incidence has shape {self.incidence.shape}, expected "
                f"({self.num_transactions}, {self.num_accounts}) = (transactions, accounts)"
            )

    @property
    def num_accounts(self) -> int:
        return len(self.account_labels)

    @property
    def num_transactions(self) -> int:
        return len(self.transaction_labels)

    @classmethod
    def from_transfers(cls, account_labels, transfers) -> "CashSystem":
        """Build a system from ``(label, from_account, to_account)`` triples."""
        account_labels = list(account_labels)
        pos = {a: j for j, a in enumerate(account_labels)}
        inc = np.zeros((len(transfers), len(account_labels)))
        labels = []
        for i, (label, src, dst) in enumerate(transfers):
            for acct in (src, dst):
                if acct not in pos:
                    raise InvalidInstanceError(f"transaction {label!r} references unknown account {acct!r}")
            if src == dst:
                raise InvalidInstanceError(f"transaction {label!r} has from == to ({src!r})")
            inc[i, pos[src]] = -1.0
            inc[i, pos[dst]] = 1.0
            labels.append(label)
        return cls(account_labels, labels, inc)

    def endpoints(self, i: int) -> tuple[Hashable | None, Hashable | None]:
        """Return ``(source, destination)`` account labels of transaction ``i``."""
        row = self.incidence[i]
        src = [self.account_labels[j] for j in np.flatnonzero(row == -1)]
        dst = [self.account_labels[j] for j in np.flatnonzero(row == 1)]
        return (src[0] if len(src) == 1 else None, dst[0] if len(dst) == 1 else None)

    def __eq__(self, other):
        if not isinstance(other, CashSystem):
            return NotImplemented
        return (
            self.account_labels == other.account_labels
            and self.transaction_labels == other.transaction_labels
            and np.array_equal(self.incidence, other.incidence)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CostStructure:
    """Fixed and variable transfer costs plus per-account holding costs."""

    fixed: np.ndarray
    variable: np.ndarray
    holding: np.ndarray

    def __init__(self, fixed, variable, holding):
        object.__setattr__(self, "fixed", _as_float_array(fixed, "fixed", 1))
        object.__setattr__(self, "variable", _as_float_array(variable, "variable", 1))
        object.__setattr__(self, "holding", _as_float_array(holding, "holding", 1))
        for name in ("fixed", "variable", "holding"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise InvalidInstanceError(f"{name} costs must be finite")
            if np.any(arr < 0):
                raise InvalidInstanceError(f"{name} costs must be nonnegative")
        if self.fixed.shape != self.variable.shape:
            raise InvalidInstanceError("fixed and variable cost vectors differ in length")

    def scaled(self, k: float) -> "CostStructure":
        return CostStructure(self.fixed * k, self.variable * k, self.holding * k)

    def __eq__(self, other):
        if not isinstance(other, CostStructure):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in ("fixed", "variable", "holding"))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A cash system with costs, balance floors, starting cash and forecasts.

    ``forecasts`` has one row per period and one column per account.
    """

    system: CashSystem
    costs: CostStructure
    min_balance: np.ndarray
    initial_balance: np.ndarray
    forecasts: np.ndarray

    def __init__(self, system, costs, min_balance, initial_balance, forecasts, horizon=None):
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "min_balance", _as_float_array(min_balance, "min_balance", 1))
        object.__setattr__(self, "initial_balance", _as_float_array(initial_balance, "initial_balance", 1))
        object.__setattr__(self, "forecasts", _as_float_array(forecasts, "forecasts", 2))
        if horizon is not None and horizon != self.forecasts.shape[0]:
            raise InvalidInstanceError(
                f"horizon is {horizon} but forecasts have {self.forecasts.shape[0]} rows"
            )
        problems = instance_violations(self)
        if problems:
            raise InvalidInstanceError("; ".join(problems))

    @property
    def horizon(self) -> int:
        return self.forecasts.shape[0]

    @property
    def num_accounts(self) -> int:
        return self.system.num_accounts

    @property
    def num_transactions(self) -> int:
        return self.system.num_transactions

    def with_costs(self, costs: CostStructure) -> "ProblemInstance":
        return ProblemInstance(self.system, costs, self.min_balance, self.initial_balance, self.forecasts)

    def truncated(self, horizon: int) -> "ProblemInstance":
        """Same instance restricted to the first ``horizon`` periods."""
        return ProblemInstance(
            self.system, self.costs, self.min_balance, self.initial_balance, self.forecasts[:horizon]
        )

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.system == other.system
            and self.costs == other.costs
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("min_balance", "initial_balance", "forecasts")
            )
        )

    __hash__ = None


def instance_violations(instance: ProblemInstance) -> list[str]:
    """Everything wrong with ``instance``; empty when it is usable."""
    out = list(validate_system(instance.system).violations)
    m, n = instance.num_accounts, instance.num_transactions
    c = instance.costs
    if c.fixed.shape[0] != n:
        out.append(f"cost vectors have length {c.fixed.shape[0]}, expected {n} transactions")
    if c.holding.shape[0] != m:
        out.append(f"holding costs have length {c.holding.shape[0]}, expected {m} accounts")
    for name in ("min_balance", "initial_balance"):
        arr = getattr(instance, name)
        if arr.shape != (m,):
            out.append(f"{name} has length {arr.shape[0]}, expected {m}")
        elif not np.all(np.isfinite(arr)):
            out.append(f"{name} must be finite")
    F = instance.forecasts
    if F.shape[0] < 1:
        out.append("horizon must be at least 1")
    if F.shape[1] != m:
        out.append(f"forecasts have {F.shape[1]} columns, expected {m} accounts")
    if not np.all(np.isfinite(F)):
        out.append("forecasts must be finite")
    if not out:
        for j in np.flatnonzero(instance.min_balance < 0):
            out.append(f"min_balance for account {instance.system.account_labels[j]!r} is negative")
        for j in np.flatnonzero(instance.initial_balance < instance.min_balance):
            out.append(
                f"initial_balance for account {instance.system.account_labels[j]!r} "
                f"({instance.initial_balance[j]:g}) is below its minimum ({instance.min_balance[j]:g})"
            )
    return out


@dataclass(frozen=True)
class RiskParams:
    """Cost reference, cost/risk budgets, and objective weights."""

    cost_ref: float
    cost_budget: float
    risk_budget: float
    cost_weight: float
    risk_weight: float

    def __post_init__(self):
        for name in ("cost_ref", "cost_budget", "risk_budget", "cost_weight", "risk_weight"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidInstanceError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if not (0.0 <= self.cost_weight <= 1.0 and 0.0 <= self.risk_weight <= 1.0):
            raise InvalidInstanceError("weights must lie in [0, 1]")
        if abs(self.cost_weight + self.risk_weight - 1.0) > 1e-12:
            raise InvalidInstanceError("weights must sum to 1")
        if self.cost_budget <= 0 or self.risk_budget <= 0:
            raise InvalidInstanceError("cost and risk budgets must be positive")

    def scaled(self, k: float) -> "RiskParams":
        return RiskParams(self.cost_ref * k, self.cost_budget * k, self.risk_budget * k,
                          self.cost_weight, self.risk_weight)


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class Solution:
    """Result of a cost or cost-risk solve.

    ``policy`` is periods x transactions, ``balances`` periods x accounts.
    Both are ``None`` when no feasible policy was found.
    """

    status: Status
    policy: np.ndarray | None
    balances: np.ndarray | None
    objective: float | None
    period_costs: np.ndarray | None
    deviations: np.ndarray | None
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def validate_system(system: CashSystem) -> ValidationReport:
    violations = []
    for name, labels in (("account", system.account_labels), ("transaction", system.transaction_labels)):
        seen = set()
        for label in labels:
            if label in seen:
                violations.append(f"duplicate {name} label {label!r}")
            seen.add(label)
    if system.num_accounts < 1:
        violations.append("system has no accounts")
    if system.num_transactions < 1:
        violations.append("system has no transactions")
    A = system.incidence
    for i, row in enumerate(A):
        label = system.transaction_labels[i]
        bad = [j for j, a in enumerate(row) if a not in (-1.0, 0.0, 1.0)]
        for j in bad:
            violations.append(
                f"transaction {label!r}: entry outside {{-1,0,1}} at account "
                f"{system.account_labels[j]!r} ({row[j]:g})"
            )
        if bad:
            continue
        n_in, n_out = int(np.sum(row == 1)), int(np.sum(row == -1))
        if n_in == 0 and n_out == 0:
            violations.append(f"transaction {label!r}: transaction with no endpoints")
        elif n_in != 1 or n_out != 1:
            violations.append(
                f"transaction {label!r}: needs exactly one +1 and one -1 (has {n_in} and {n_out})"
            )
    return ValidationReport(not violations, violations)


def propagate_balances(initial, forecasts, policy, system: CashSystem) -> np.ndarray:
    """Roll balances forward: ``b_t = b_{t-1} + f_t + A^T x_t`` for t ascending."""
    b = np.asarray(initial, dtype=float)
    F = np.asarray(forecasts, dtype=float)
    X = np.asarray(policy, dtype=float)
    m, n = system.num_accounts, system.num_transactions
    if b.shape != (m,) or F.ndim != 2 or F.shape[1] != m or X.shape != (F.shape[0], n):
        raise ValueError(
            f"dimension mismatch: initial {b.shape}, forecasts {F.shape}, policy {X.shape} "
            f"for {m} accounts and {n} transactions"
        )
    out = np.empty_like(F)
    At = system.incidence.T
    for t in range(F.shape[0]):
        b = b + F[t] + At @ X[t]
        out[t] = b
    return out


def check_feasible(balances, min_balance) -> FeasibilityReport:
    B = np.asarray(balances, dtype=float)
    bmin = np.asarray(min_balance, dtype=float)
    if B.ndim != 2 or B.shape[1] != bmin.shape[0]:
        raise ValueError(f"balances {B.shape} do not match min_balance {bmin.shape}")
    short = bmin - B
    bad = np.argwhere(short > FEAS_TOL)
    violations = [Shortfall(int(t) + 1, int(j), float(short[t, j])) for t, j in bad]
    return FeasibilityReport(not violations, violations)


def period_cost(x, b, costs: CostStructure) -> float:
    """Transfer cost (fixed charge on executed transfers plus per-unit) and holding cost."""
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(x < 0):
        raise ValueError("transfer amounts must be nonnegative")
    active = x > ACTIVE_TOL
    return float(costs.fixed[active].sum() + costs.variable @ x + costs.holding @ b)


def policy_cost_total(policy, balances, costs: CostStructure) -> tuple[float, np.ndarray]:
    X = np.asarray(policy, dtype=float)
    B = np.asarray(balances, dtype=float)
    if X.shape[0] != B.shape[0]:
        raise ValueError(f"policy has {X.shape[0]} periods but balances have {B.shape[0]}")
    per = np.array([period_cost(X[t], B[t], costs) for t in range(X.shape[0])])
    return float(per.sum()), per


def empirical_ccar(period_costs, cost_ref: float) -> float:
    """Mean period cost over the periods whose cost exceeds ``cost_ref``.

    Returns 0.0 when no period exceeds the reference.
    """
    c = np.asarray(period_costs, dtype=float)
    if c.size == 0:
        raise ValueError("empty cost vector")
    above = c[c > cost_ref]
    if above.size == 0:
        return 0.0
    return float(np.sort(above).mean())


def describe(instance: ProblemInstance | None = None, *, system=None, costs=None,
             min_balance=None, horizon=None) -> str:
    """Plain-text summary of a cash management problem.

    Accepts either a validated :class:`ProblemInstance` or loose parts, so
    that systems failing validation can still be inspected.
    """
    if instance is not None:
        system, costs = instance.system, instance.costs
        min_balance, horizon = instance.min_balance, instance.horizon
        problems = []
    else:
        problems = list(validate_system(system).violations)
    m, n = system.num_accounts, system.num_transactions
    lines = [f"Cash management system: {m} accounts, {n} transactions"]
    if horizon is not None:
        lines.append(f"Planning horizon: {horizon} periods")
    lines.append("")
    lines.append("Accounts:")
    for j, label in enumerate(system.account_labels):
        parts = [f"  {label}"]
        if costs is not None and costs.holding.shape[0] == m:
            parts.append(f"holding={costs.holding[j]:g}")
        if min_balance is not None and len(min_balance) == m:
            parts.append(f"min_balance={min_balance[j]:g}")
        lines.append("  ".join(parts))
    lines.append("")
    lines.append("Transactions:")
    for i, label in enumerate(system.transaction_labels):
        src, dst = system.endpoints(i)
        route = f"{'?' if src is None else src} -> {'?' if dst is None else dst}"
        parts = [f"  {label}: {route}"]
        if costs is not None and costs.fixed.shape[0] == n:
            parts.append(f"fixed={costs.fixed[i]:g}  variable={costs.variable[i]:g}")
        lines.append("  ".join(parts))
    if problems:
        lines.append("")
        lines.append("Validation problems:")
        lines.extend(f"  - {p}" for p in problems)
    return "\n".join(lines) + "\n"
