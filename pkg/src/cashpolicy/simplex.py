"""Bounded-variable primal simplex for small dense LPs.

Solves ``min c @ y + offset`` subject to rows ``A[i] @ y (<=|=|>=) rhs[i]``
and ``lower <= y <= upper``.  Every lower bound must be finite; upper bounds
may be ``inf``.

The method is the textbook two-phase scheme: slacks turn inequalities into
equalities, inequality rows whose slack is feasible at the starting point
begin on that slack, every other row is sign-normalised and given an
artificial, phase 1 drives the artificials to zero and phase 2
optimises the true objective.  Nonbasic variables sit at either bound, so
boxed variables (the relaxed binaries) never need explicit rows.  Pricing is
Dantzig's largest reduced cost until too many degenerate pivots pile up, then
Bland's smallest-index rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Status

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
COST_TOL = 1e-9
DEGENERATE_SWITCH = 1000
REFACTOR_EVERY = 50
DEFAULT_MAX_ITERS = 50_000

_BASIC, _AT_LOWER, _AT_UPPER = 0, 1, 2


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        nv = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, nv)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.senses = list(self.senses)
        if not (self.A.shape[0] == self.rhs.shape[0] == len(self.senses)):
            raise ValueError("constraint matrix, senses and rhs disagree in length")
        if self.lower.shape != (nv,) or self.upper.shape != (nv,):
            raise ValueError("bound vectors must match the number of variables")
        if not np.all(np.isfinite(self.lower)):
            raise ValueError("all lower bounds must be finite")
        bad = set(self.senses) - {"<=", "=", ">="}
        if bad:
            raise ValueError(f"unknown constraint sense(s): {sorted(bad)}")

    @classmethod
    def from_milp(cls, model, lower=None, upper=None) -> "LpProblem":
        """Continuous relaxation of a :class:`~cashpolicy.formulate.MilpModel`."""
        A, senses, rhs = model.dense()
        return cls(
            model.objective,
            A,
            senses,
            rhs,
            model.var_lower if lower is None else lower,
            model.var_upper if upper is None else upper,
            model.objective_offset,
        )

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    def residuals(self, y) -> tuple[float, float]:
        """Largest ``(row violation, bound violation)`` of ``y``."""
        y = np.asarray(y, dtype=float)
        lhs = self.A @ y
        row = 0.0
        for s, l, r in zip(self.senses, lhs, self.rhs):
            v = l - r if s == "<=" else r - l if s == ">=" else abs(l - r)
            row = max(row, v)
        bound = max(0.0, float(np.max(self.lower - y, initial=0.0)), float(np.max(y - self.upper, initial=0.0)))
        return row, bound


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None
    objective: float | None
    iterations: int
    ray: np.ndarray | None = None


class _Workspace:
    """Per-call simplex state over structural, slack and artificial columns."""

    def __init__(self, p: LpProblem):
        nv = p.num_vars
        k = p.A.shape[0]
        slack_rows = [i for i, s in enumerate(p.senses) if s != "="]
        ns = len(slack_rows)
        self.nv, self.ns, self.k = nv, ns, k
        N = nv + ns + k
        A = np.zeros((k, N))
        A[:, :nv] = p.A
        for col, i in enumerate(slack_rows):
            A[i, nv + col] = 1.0 if p.senses[i] == "<=" else -1.0
        x = np.zeros(N)
        x[:nv] = p.lower
        b = p.rhs.copy()
        r = b - A[:, :nv] @ x[:nv]
        # an inequality row whose slack can absorb the residual starts on its
        # slack; every other row gets an artificial after sign normalisation
        basis = np.empty(k, dtype=np.intp)
        needs_art = np.ones(k, dtype=bool)
        for col, i in enumerate(slack_rows):
            s = r[i] / A[i, nv + col]
            if s >= 0:
                basis[i] = nv + col
                x[nv + col] = s
                needs_art[i] = False
        art_rows = np.flatnonzero(needs_art)
        na = art_rows.size
        A = A[:, :nv + ns + na]
        sign = np.where((r < 0) & needs_art, -1.0, 1.0)
        A *= sign[:, None]
        b *= sign
        for col, i in enumerate(art_rows):
            A[i, nv + ns + col] = 1.0
            basis[i] = nv + ns + col
            x[nv + ns + col] = abs(r[i])
        self.na = na
        N = nv + ns + na
        lb = np.zeros(N)
        ub = np.full(N, np.inf)
        lb[:nv], ub[:nv] = p.lower, p.upper
        x = x[:N]
        self.A, self.b, self.lb, self.ub, self.x = A, b, lb, ub, x
        self.state = np.full(N, _AT_LOWER, dtype=np.int8)
        self.basis = basis
        self.state[basis] = _BASIC
        self.Binv = np.diag(1.0 / A[np.arange(k), basis])
        self.updates = 0
        self.iterations = 0
        self.degenerate = 0
        self.bland = False

    @property
    def artificial(self) -> slice:
        return slice(self.nv + self.ns, self.nv + self.ns + self.na)

    def refactor(self):
        if self.k:
            self.Binv = np.linalg.inv(self.A[:, self.basis])
        self.updates = 0
        self.recompute_basic()

    def recompute_basic(self):
        if not self.k:
            return
        nonbasic = self.state != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.Binv @ rhs

    def pivot(self, r: int, j: int, alpha: np.ndarray):
        Binv = self.Binv
        row = Binv[r] / alpha[r]
        Binv -= np.outer(alpha, row)
        Binv[r] = row
        self.basis[r] = j
        self.state[j] = _BASIC
        self.updates += 1
        if self.updates >= REFACTOR_EVERY:
            self.refactor()

    def run(self, cost: np.ndarray, max_iters: int) -> Status:
        """Iterate to optimality for ``cost`` from the current basis."""
        A, lb, ub, x, state = self.A, self.lb, self.ub, self.x, self.state
        movable = ub > lb
        while True:
            cB = cost[self.basis]
            pi = cB @ self.Binv
            d = cost - pi @ A
            cand_up = (state == _AT_LOWER) & movable & (d < -COST_TOL)
            cand_down = (state == _AT_UPPER) & movable & (d > COST_TOL)
            cand = np.flatnonzero(cand_up | cand_down)
            if cand.size == 0:
                return Status.OPTIMAL
            if self.iterations >= max_iters:
                return Status.ITERATION_LIMIT
            if self.bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if state[j] == _AT_LOWER else -1.0
            alpha = self.Binv @ A[:, j]
            step = alpha * direction  # basic values move by -theta * step

            basis = self.basis
            xb, lbb, ubb = x[basis], lb[basis], ub[basis]
            ratios = np.full(self.k, np.inf)
            down = step > PIVOT_TOL
            up = (step < -PIVOT_TOL) & (ubb < np.inf)
            ratios[down] = np.maximum(0.0, (xb[down] - lbb[down]) / step[down])
            ratios[up] = np.maximum(0.0, (ubb[up] - xb[up]) / -step[up])
            theta = ratios.min() if self.k else np.inf
            span = ub[j] - lb[j]
            self.iterations += 1
            if span <= theta:
                if span == np.inf:
                    self.ray_column = j
                    self.ray_direction = direction
                    self.ray_alpha = step
                    return Status.UNBOUNDED
                # bound flip, basis unchanged
                x[j] = ub[j] if direction > 0 else lb[j]
                x[basis] = xb - span * step
                state[j] = _AT_UPPER if direction > 0 else _AT_LOWER
                continue
            ties = np.flatnonzero(ratios <= theta + 1e-12)
            if self.bland or ties.size == 1:
                # Bland: smallest variable index among the tied rows
                leave = int(ties[np.argmin(basis[ties])])
            else:
                # largest pivot element for stability, then smallest index
                mags = np.abs(step[ties])
                best = ties[mags == mags.max()]
                leave = int(best[np.argmin(basis[best])])
            if theta <= 1e-12:
                self.degenerate += 1
                if self.degenerate >= DEGENERATE_SWITCH:
                    self.bland = True
            leaving = basis[leave]
            leave_to = _AT_LOWER if step[leave] > 0 else _AT_UPPER
            x[j] += direction * theta
            x[basis] = xb - theta * step
            x[leaving] = lb[leaving] if leave_to == _AT_LOWER else ub[leaving]
            state[leaving] = leave_to
            self.pivot(leave, j, alpha)

    def drive_out_artificials(self):
        """Swap zero-valued basic artificials for real columns where possible."""
        art = self.artificial
        first_art = art.start
        for r in range(self.k):
            if self.basis[r] < first_art:
                continue
            row = self.Binv[r] @ self.A[:, :first_art]
            for j in range(first_art):
                if self.state[j] != _BASIC and abs(row[j]) > 1e-7:
                    alpha = self.Binv @ self.A[:, j]
                    leaving = self.basis[r]
                    self.state[leaving] = _AT_LOWER
                    self.x[leaving] = 0.0
                    self.pivot(r, j, alpha)
                    break
        self.refactor()


def solve_lp(problem: LpProblem, max_iters: int = DEFAULT_MAX_ITERS) -> LpSolution:
    """Solve ``problem`` with the two-phase bounded simplex.

    Parameters
    ----------
    problem : LpProblem
        The linear program. Lower bounds must be finite.
    max_iters : int
        Cap on pivots plus bound flips across both phases.

    Returns
    -------
    LpSolution
        ``x`` holds the structural variables when the status is ``Optimal``.
        For ``Unbounded`` the ``ray`` attribute is an improving direction.
    """
    p = problem
    if np.any(p.lower > p.upper):
        return LpSolution(Status.INFEASIBLE, None, None, 0)
    ws = _Workspace(p)
    N = ws.A.shape[1]
    nv = ws.nv

    phase1 = np.zeros(N)
    phase1[ws.artificial] = 1.0
    status = ws.run(phase1, max_iters)
    if status is Status.ITERATION_LIMIT:
        return LpSolution(status, None, None, ws.iterations)
    ws.refactor()
    infeasibility = float(ws.x[ws.artificial].sum())
    if infeasibility > FEAS_TOL:
        return LpSolution(Status.INFEASIBLE, None, None, ws.iterations)

    ws.ub[ws.artificial] = 0.0
    nb_art = [j for j in range(ws.artificial.start, N) if ws.state[j] != _BASIC]
    ws.x[nb_art] = 0.0
    ws.drive_out_artificials()

    cost = np.zeros(N)
    cost[:nv] = p.c
    status = ws.run(cost, max_iters)
    if status is Status.ITERATION_LIMIT:
        return LpSolution(status, None, None, ws.iterations)
    if status is Status.UNBOUNDED:
        ray = np.zeros(N)
        ray[ws.ray_column] = ws.ray_direction
        ray[ws.basis] = -ws.ray_alpha
        return LpSolution(status, None, None, ws.iterations, ray=ray[:nv])
    ws.refactor()
    y = ws.x[:nv].copy()
    return LpSolution(Status.OPTIMAL, y, float(p.c @ y + p.offset), ws.iterations)
