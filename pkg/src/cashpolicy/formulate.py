"""Translate cash management problems into a solver-neutral MILP model.

Variable layout is fixed: for each period ``t`` the block
``[x_t (n), z_t (n), b_t (m), delta_t (risk mode only)]`` in that order.
Each transfer ``x`` is linked to its fixed-charge indicator ``z`` through
``x - M z <= 0`` with a single ``M`` equal to the total cash that ever
enters the system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ProblemInstance, RiskParams

LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class Constraint:
    coefs: dict[int, float]
    sense: str
    rhs: float


@dataclass
class MilpModel:
    objective: np.ndarray
    var_lower: np.ndarray
    var_upper: np.ndarray
    integrality: np.ndarray
    var_names: list[tuple]
    constraints: list[Constraint] = field(default_factory=list)
    objective_offset: float = 0.0

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    def dense(self) -> tuple[np.ndarray, list[str], np.ndarray]:
        """Constraint rows as a dense ``(matrix, senses, rhs)`` triple."""
        A = np.zeros((len(self.constraints), self.num_vars))
        for r, con in enumerate(self.constraints):
            for j, a in con.coefs.items():
                A[r, j] = a
        return A, [c.sense for c in self.constraints], np.array([c.rhs for c in self.constraints], dtype=float)

    def max_violation(self, y) -> tuple[float, float]:
        """Largest ``(row residual, bound violation)`` of assignment ``y``."""
        y = np.asarray(y, dtype=float)
        row = 0.0
        for con in self.constraints:
            lhs = sum(a * y[j] for j, a in con.coefs.items())
            if con.sense == LE:
                row = max(row, lhs - con.rhs)
            elif con.sense == GE:
                row = max(row, con.rhs - lhs)
            else:
                row = max(row, abs(lhs - con.rhs))
        bound = max(0.0, float(np.max(self.var_lower - y, initial=0.0)), float(np.max(y - self.var_upper, initial=0.0)))
        return row, bound


class VariableMap:
    """Lookup between ``(kind, t, index)`` keys and flat variable positions.

    ``t`` is 0-based here; ``kind`` is one of ``x``, ``z``, ``b``, ``delta``.
    """

    def __init__(self, n: int, m: int, horizon: int, risk: bool):
        self.n, self.m, self.horizon, self.risk = n, m, horizon, risk
        self.block = 2 * n + m + (1 if risk else 0)
        self.names: list[tuple] = []
        for t in range(horizon):
            self.names += [("x", t, i) for i in range(n)]
            self.names += [("z", t, i) for i in range(n)]
            self.names += [("b", t, j) for j in range(m)]
            if risk:
                self.names.append(("delta", t, 0))
        self._pos = {key: k for k, key in enumerate(self.names)}

    def __len__(self):
        return len(self.names)

    def __getitem__(self, key: tuple) -> int:
        return self._pos[key]

    def x(self, t, i):
        return t * self.block + i

    def z(self, t, i):
        return t * self.block + self.n + i

    def b(self, t, j):
        return t * self.block + 2 * self.n + j

    def delta(self, t):
        if not self.risk:
            raise KeyError("no deviation variables in a cost-only model")
        return t * self.block + 2 * self.n + self.m

    def encode(self, X, Z, B, D=None) -> np.ndarray:
        """Inverse of :meth:`decode`."""
        blocks = [np.asarray(X, float), np.asarray(Z, float), np.asarray(B, float)]
        if self.risk:
            blocks.append(np.asarray(D, float).reshape(-1, 1))
        return np.hstack(blocks).reshape(-1)

    def decode(self, y) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Split an assignment into ``(policy, indicators, balances, deviations)``."""
        y = np.asarray(y, dtype=float)
        n, m, T = self.n, self.m, self.horizon
        blocks = y.reshape(T, self.block)
        X = blocks[:, :n].copy()
        Z = blocks[:, n:2 * n].copy()
        B = blocks[:, 2 * n:2 * n + m].copy()
        D = blocks[:, 2 * n + m].copy() if self.risk else np.zeros(T)
        return X, Z, B, D


def compute_big_m(instance: ProblemInstance) -> np.ndarray:
    """Upper bound on any single transfer: all cash the system can ever hold."""
    total = float(instance.initial_balance.sum() + np.clip(instance.forecasts, 0.0, None).sum())
    return np.full(instance.num_transactions, total)


def _period_cost_coefs(instance: ProblemInstance, vmap: VariableMap, t: int) -> dict[int, float]:
    c = instance.costs
    coefs = {}
    for i in range(vmap.n):
        coefs[vmap.x(t, i)] = float(c.variable[i])
        coefs[vmap.z(t, i)] = float(c.fixed[i])
    for j in range(vmap.m):
        coefs[vmap.b(t, j)] = float(c.holding[j])
    return coefs


def _base_model(instance: ProblemInstance, risk: bool) -> tuple[MilpModel, VariableMap]:
    n, m, T = instance.num_transactions, instance.num_accounts, instance.horizon
    vmap = VariableMap(n, m, T, risk)
    nv = len(vmap)
    lower = np.zeros(nv)
    upper = np.full(nv, np.inf)
    integ = np.zeros(nv, dtype=bool)
    big_m = compute_big_m(instance)
    A = instance.system.incidence
    constraints = []
    for t in range(T):
        for i in range(n):
            upper[vmap.z(t, i)] = 1.0
            integ[vmap.z(t, i)] = True
        for j in range(m):
            lower[vmap.b(t, j)] = instance.min_balance[j]
        # b_t - b_{t-1} - A^T x_t = f_t, with b_0 moved to the right-hand side
        for j in range(m):
            coefs = {vmap.b(t, j): 1.0}
            if t > 0:
                coefs[vmap.b(t - 1, j)] = -1.0
            for i in range(n):
                if A[i, j] != 0:
                    coefs[vmap.x(t, i)] = -float(A[i, j])
            rhs = float(instance.forecasts[t, j])
            if t == 0:
                rhs += float(instance.initial_balance[j])
            constraints.append(Constraint(coefs, EQ, rhs))
        for i in range(n):
            constraints.append(Constraint({vmap.x(t, i): 1.0, vmap.z(t, i): -float(big_m[i])}, LE, 0.0))
    model = MilpModel(np.zeros(nv), lower, upper, integ, list(vmap.names), constraints)
    return model, vmap


def build_cost_model(instance: ProblemInstance) -> tuple[MilpModel, VariableMap]:
    model, vmap = _base_model(instance, risk=False)
    for t in range(instance.horizon):
        for k, a in _period_cost_coefs(instance, vmap, t).items():
            model.objective[k] += a
    return model, vmap


def build_cost_risk_model(instance: ProblemInstance, risk: RiskParams) -> tuple[MilpModel, VariableMap]:
    if not isinstance(risk, RiskParams):
        raise TypeError("risk must be a RiskParams")
    model, vmap = _base_model(instance, risk=True)
    T = instance.horizon
    wc = risk.cost_weight / risk.cost_budget
    wr = risk.risk_weight / risk.risk_budget
    total_cost: dict[int, float] = {}
    for t in range(T):
        coefs = _period_cost_coefs(instance, vmap, t)
        for k, a in coefs.items():
            total_cost[k] = total_cost.get(k, 0.0) + a
            model.objective[k] += wc * a
        d = vmap.delta(t)
        model.objective[d] += wr
        model.constraints.append(Constraint({**coefs, d: -1.0}, LE, risk.cost_ref))
    model.constraints.append(Constraint(total_cost, LE, risk.cost_budget))
    model.constraints.append(Constraint({vmap.delta(t): 1.0 for t in range(T)}, LE, risk.risk_budget))
    return model, vmap
