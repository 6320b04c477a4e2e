import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cashpolicy.engine import solve_cost, solve_risk
from cashpolicy.formulate import EQ, LE, build_cost_model, build_cost_risk_model, compute_big_m
from cashpolicy.model import (
    CashSystem,
    CostStructure,
    ProblemInstance,
    RiskParams,
    Status,
    check_feasible,
    period_cost,
    propagate_balances,
)
from cashpolicy.oracle import oracle_solve_cost
from instances import random_instance


def two_account(b0=(1, 1), F=((0, 0),), bmin=(0, 0)):
    system = CashSystem(["a", "b"], ["ab"], [[-1, 1]])
    return ProblemInstance(system, CostStructure([1], [0], [1, 1]), bmin, b0, F)


def test_big_m_s4(s4):
    np.testing.assert_array_equal(compute_big_m(s4), np.full(6, 45.0))


def test_big_m_simple_cases():
    assert compute_big_m(two_account()).tolist() == [2.0]
    assert compute_big_m(two_account(b0=(3, 4), F=((-1, -2), (-1, 0)))).tolist() == [7.0]


def test_cost_model_counts_s4(s4):
    model, vmap = build_cost_model(s4)
    assert model.num_vars == 75 == len(vmap)
    assert int(model.integrality.sum()) == 30
    senses = [c.sense for c in model.constraints]
    assert senses.count(EQ) == 15 and senses.count(LE) == 30 and len(senses) == 45


def test_cost_model_smallest_layout():
    model, vmap = build_cost_model(two_account())
    assert model.num_vars == 4
    assert vmap.names == [("x", 0, 0), ("z", 0, 0), ("b", 0, 0), ("b", 0, 1)]
    assert [c.sense for c in model.constraints] == [EQ, EQ, LE]


def test_builder_does_not_prejudge_infeasibility():
    # balances start at zero against a floor of one with nothing flowing in:
    # the builder still emits the model and the solver reports infeasible
    system = CashSystem(["a", "b"], ["ab"], [[-1, 1]])
    inst = ProblemInstance(system, CostStructure([1], [0], [1, 1]), [0, 0], [0, 0], [[-1, 0]])
    model, _ = build_cost_model(inst)
    assert model.num_vars == 4
    assert solve_cost(inst).status is Status.INFEASIBLE


def test_layout_invariants(s4):
    model, vmap = build_cost_risk_model(s4, RiskParams(3000, 5000, 5000, 0.5, 0.5))
    assert sorted(vmap[k] for k in vmap.names) == list(range(model.num_vars))
    assert np.all(model.var_lower[model.integrality] == 0) and np.all(model.var_upper[model.integrality] == 1)
    for con in model.constraints:
        assert all(0 <= j < model.num_vars for j in con.coefs)
    block = 6 + 6 + 3 + 1
    for t in range(5):
        assert vmap.x(t, 0) == t * block and vmap.z(t, 0) == t * block + 6
        assert vmap.b(t, 0) == t * block + 12 and vmap.delta(t) == t * block + 15


def test_risk_model_counts_s4(s4):
    model, _ = build_cost_risk_model(s4, RiskParams(3000, 5000, 5000, 0.5, 0.5))
    assert model.num_vars == 80
    assert len(model.constraints) == 52
    assert int(model.integrality.sum()) == 30


def test_builds_are_deterministic(s4):
    r = RiskParams(3000, 5000, 5000, 0.5, 0.5)
    for build in (lambda: build_cost_model(s4), lambda: build_cost_risk_model(s4, r)):
        (m1, v1), (m2, v2) = build(), build()
        assert m1.objective.tobytes() == m2.objective.tobytes()
        assert m1.var_lower.tobytes() == m2.var_lower.tobytes()
        assert m1.var_upper.tobytes() == m2.var_upper.tobytes()
        assert m1.constraints == m2.constraints and v1.names == v2.names


def test_pure_cost_weight_reduces_to_cost_model():
    rng = np.random.default_rng(5)
    inst = random_instance(rng)
    while solve_cost(inst).status is not Status.OPTIMAL:
        inst = random_instance(rng)
    base = solve_cost(inst)
    cmax = 10 * base.objective + 1
    sol = solve_risk(inst, RiskParams(0.0, cmax, 1e9, 1.0, 0.0))
    assert sol.objective == pytest.approx(base.objective / cmax, abs=1e-12)


def test_cost_budget_below_optimum_is_infeasible():
    rng = np.random.default_rng(11)
    while True:
        inst = random_instance(rng)
        if inst.num_transactions * inst.horizon <= 8:
            ref = oracle_solve_cost(inst)
            if ref.status is Status.OPTIMAL and ref.objective > 2:
                break
    sol = solve_risk(inst, RiskParams(1e9, ref.objective - 1, 1e9, 0.5, 0.5))
    assert sol.status is Status.INFEASIBLE


def test_oracle_transfers_stay_below_big_m():
    rng = np.random.default_rng(3)
    for _ in range(25):
        inst = random_instance(rng)
        if inst.num_transactions * inst.horizon > 8:
            continue
        ref = oracle_solve_cost(inst)
        if ref.status is Status.OPTIMAL:
            assert ref.policy.max() <= compute_big_m(inst)[0] + 1e-9


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_rows_match_domain_checks(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    T, n = inst.horizon, inst.num_transactions
    X = np.round(rng.uniform(0, 3, (T, n)) * (rng.random((T, n)) < 0.5), 2)
    Z = (X > 1e-9).astype(float)
    B = propagate_balances(inst.initial_balance, inst.forecasts, X, inst.system)
    costs = np.array([period_cost(X[t], B[t], inst.costs) for t in range(T)])
    c0 = float(rng.uniform(costs.min() - 1, costs.max() + 1))
    D = np.maximum(costs - c0, 0) * rng.choice([1.0, 0.0, 1.5], size=T)
    risk = RiskParams(c0, float(rng.uniform(0.5, 1.5) * abs(costs.sum()) + 1),
                      float(rng.uniform(0.5, 1.5) * D.sum() + 1), 0.5, 0.5)
    model, vmap = build_cost_risk_model(inst, risk)
    y = vmap.encode(X, Z, B, D)
    row, bound = model.max_violation(y)
    rows_ok = row <= 1e-9 and bound <= 1e-9

    domain_ok = (
        check_feasible(B, inst.min_balance).ok
        and np.all(costs - D <= c0 + 1e-9)
        and costs.sum() <= risk.cost_budget + 1e-9
        and D.sum() <= risk.risk_budget + 1e-9
        and np.all(X <= compute_big_m(inst)[0])
    )
    assert rows_ok == domain_ok
    X2, Z2, B2, D2 = vmap.decode(y)
    np.testing.assert_array_equal(X2, X)
    np.testing.assert_array_equal(B2, B)
    np.testing.assert_array_equal(D2, D)
