"""Brute-force reference optimiser for small instances.

Every on/off pattern of the fixed-charge indicators is enumerated; for each
pattern the remaining problem is a plain LP (inactive transfers pinned to
zero, active ones bounded by the total-cash bound) solved with HiGHS through
:func:`scipy.optimize.linprog`.  None of the package's own formulation or
simplex code is used, so agreement with :mod:`cashpolicy.engine` is a real
cross-check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .model import ProblemInstance, RiskParams, Status

MAX_BINARIES = 16
TIE_TOL = 1e-9


@dataclass
class OracleResult:
    status: Status
    objective: float | None = None
    policy: np.ndarray | None = None
    balances: np.ndarray | None = None
    deviations: np.ndarray | None = None
    pattern: tuple | None = None
    lp_solves: int = 0


class _PatternLP:
    """Continuous part of the problem for a fixed indicator pattern.

    Variable order: x (T*n, period-major), b (T*m), then delta (T) in risk mode.
    """

    def __init__(self, instance: ProblemInstance, risk: RiskParams | None):
        self.inst = instance
        self.risk = risk
        n, m, T = instance.num_transactions, instance.num_accounts, instance.horizon
        self.n, self.m, self.T = n, m, T
        nx, nb = T * n, T * m
        nd = T if risk is not None else 0
        self.nx, self.nb, self.nd = nx, nb, nd
        nv = nx + nb + nd
        self.big = float(instance.initial_balance.sum() + np.maximum(instance.forecasts, 0).sum())

        inc = instance.system.incidence
        c = instance.costs
        # per-period continuous cost rows
        self.cost_rows = np.zeros((T, nv))
        for t in range(T):
            self.cost_rows[t, t * n:(t + 1) * n] = c.variable
            self.cost_rows[t, nx + t * m:nx + (t + 1) * m] = c.holding

        A_eq = np.zeros((nb, nv))
        b_eq = np.zeros(nb)
        for t in range(T):
            for j in range(m):
                r = t * m + j
                A_eq[r, nx + r] = 1.0
                if t:
                    A_eq[r, nx + r - m] = -1.0
                else:
                    b_eq[r] += instance.initial_balance[j]
                b_eq[r] += instance.forecasts[t, j]
                for i in range(n):
                    A_eq[r, t * n + i] = -inc[i, j]
        self.A_eq, self.b_eq = A_eq, b_eq

        lower = np.concatenate([np.zeros(nx), np.tile(instance.min_balance, T), np.zeros(nd)])
        self.lower = lower
        self.upper_b = np.full(nb + nd, np.inf)

        if risk is None:
            self.c = self.cost_rows.sum(axis=0)
            self.A_ub = None
        else:
            wc = risk.cost_weight / risk.cost_budget
            wr = risk.risk_weight / risk.risk_budget
            obj = wc * self.cost_rows.sum(axis=0)
            obj[nx + nb:] = wr
            self.c = obj
            rows = []
            for t in range(T):
                row = self.cost_rows[t].copy()
                row[nx + nb + t] = -1.0
                rows.append(row)
            rows.append(self.cost_rows.sum(axis=0))
            dev = np.zeros(nv)
            dev[nx + nb:] = 1.0
            rows.append(dev)
            self.A_ub = np.array(rows)

    def fixed_costs(self, pattern: np.ndarray) -> np.ndarray:
        """Fixed charges per period for a (T, n) 0/1 pattern."""
        return pattern @ self.inst.costs.fixed

    def solve(self, pattern: np.ndarray):
        """Return ``(objective, solution vector)`` or ``None`` if infeasible."""
        ux = np.where(pattern.reshape(-1) > 0, self.big, 0.0)
        bounds = list(zip(self.lower, np.concatenate([ux, self.upper_b])))
        bounds = [(lo, None if hi == np.inf else hi) for lo, hi in bounds]
        fixed = self.fixed_costs(pattern)
        kwargs = {}
        if self.risk is not None:
            rk = self.risk
            b_ub = np.concatenate([rk.cost_ref - fixed, [rk.cost_budget - fixed.sum(), rk.risk_budget]])
            kwargs = dict(A_ub=self.A_ub, b_ub=b_ub)
        res = linprog(self.c, A_eq=self.A_eq, b_eq=self.b_eq, bounds=bounds, method="highs", **kwargs)
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"HiGHS failed on a pattern LP: {res.message}")
        if self.risk is None:
            obj = res.fun + fixed.sum()
        else:
            obj = res.fun + self.risk.cost_weight / self.risk.cost_budget * fixed.sum()
        return float(obj), res.x


def _enumerate(instance: ProblemInstance, risk: RiskParams | None) -> OracleResult:
    n, T = instance.num_transactions, instance.horizon
    k = n * T
    if k > MAX_BINARIES:
        raise ValueError(f"oracle enumeration capped at {MAX_BINARIES} indicators, instance has {k}")
    lp = _PatternLP(instance, risk)
    fixed = instance.costs.fixed

    # Lower bound on the continuous part: everything switched on, no risk rows.
    relaxed = _PatternLP(instance, None)
    full = relaxed.solve(np.ones((T, n)))
    solves = 1
    if full is None:
        return OracleResult(Status.INFEASIBLE, lp_solves=solves)
    cont_lb = full[0] - fixed.sum() * T
    holding_floor = float(instance.costs.holding @ instance.min_balance)
    if risk is None:
        scale = 1.0
    else:
        scale = risk.cost_weight / risk.cost_budget

    patterns = list(itertools.product((0, 1), repeat=k))
    fixed_sums = [float(np.asarray(p).reshape(T, n) @ fixed @ np.ones(T)) if k else 0.0 for p in patterns]
    order = sorted(range(len(patterns)), key=lambda q: (fixed_sums[q], patterns[q]))

    best = None
    for q in order:
        pat = patterns[q]
        fsum = fixed_sums[q]
        z = np.asarray(pat, dtype=float).reshape(T, n)
        bound = scale * (fsum + cont_lb)
        if risk is not None:
            if fsum + cont_lb > risk.cost_budget + 1e-9:
                continue
            # sum of positive parts >= positive part of the sum, and every
            # period costs at least its fixed charges plus holding at the floor
            per_floor = lp.fixed_costs(z) + holding_floor
            excess = max(fsum + cont_lb - T * risk.cost_ref, float(np.maximum(per_floor - risk.cost_ref, 0).sum()), 0.0)
            bound += risk.risk_weight / risk.risk_budget * excess
        if best is not None and bound > best[0] + TIE_TOL:
            continue
        out = lp.solve(z)
        solves += 1
        if out is None:
            continue
        obj, vec = out
        if best is None or obj < best[0] - TIE_TOL or (obj <= best[0] + TIE_TOL and pat < best[1]):
            best = (obj, pat, vec)
    if best is None:
        return OracleResult(Status.INFEASIBLE, lp_solves=solves)
    obj, pat, vec = best
    X = vec[:lp.nx].reshape(T, n)
    B = vec[lp.nx:lp.nx + lp.nb].reshape(T, instance.num_accounts)
    D = vec[lp.nx + lp.nb:] if risk is not None else np.zeros(T)
    return OracleResult(Status.OPTIMAL, obj, X, B, D, pat, solves)


def oracle_solve_cost(instance: ProblemInstance) -> OracleResult:
    """Exact minimum-cost policy by exhaustive indicator enumeration."""
    return _enumerate(instance, None)


def oracle_solve_risk(instance: ProblemInstance, risk: RiskParams) -> OracleResult:
    """Exact cost-risk optimum by exhaustive indicator enumeration."""
    return _enumerate(instance, risk)
