import json

import numpy as np
import pytest

from cashpolicy.engine import solve_cost, solve_risk
from cashpolicy.model import CashSystem, CostStructure, ProblemInstance, RiskParams, Status
from cashpolicy.oracle import MAX_BINARIES, oracle_solve_cost, oracle_solve_risk
from highs_reference import highs_objective
from instances import random_instance


def test_zero_transfer_instance():
    system = CashSystem(["a", "b"], ["ab", "ba"], [[-1, 1], [1, -1]])
    inst = ProblemInstance(system, CostStructure([1, 1], [0, 0], [0, 0]), [0, 0], [3, 3], np.zeros((2, 2)))
    res = oracle_solve_cost(inst)
    assert res.status is Status.OPTIMAL and res.objective == 0
    assert res.pattern == (0, 0, 0, 0)


def test_s4_first_period(s4):
    one = s4.truncated(1)
    res = oracle_solve_cost(one)
    assert res.objective == pytest.approx(570.0, abs=1e-6)
    assert highs_objective(one) == pytest.approx(570.0, abs=1e-6)


def test_infeasible_instance():
    system = CashSystem(["a", "b"], ["ab"], [[-1, 1]])
    inst = ProblemInstance(system, CostStructure([1], [0], [1, 1]), [1, 1], [1, 1], [[-1, -1]])
    assert oracle_solve_cost(inst).status is Status.INFEASIBLE


def test_cap(s4):
    with pytest.raises(ValueError, match=str(MAX_BINARIES)):
        oracle_solve_cost(s4)


def test_risk_examples():
    rng = np.random.default_rng(8)
    inst = random_instance(rng)
    while inst.num_transactions * inst.horizon > 8 or oracle_solve_cost(inst).status is not Status.OPTIMAL:
        inst = random_instance(rng)
    cost = oracle_solve_cost(inst).objective
    cmax = 10 * cost + 1
    res = oracle_solve_risk(inst, RiskParams(0.0, cmax, 1e9, 1.0, 0.0))
    assert res.objective == pytest.approx(cost / cmax, abs=1e-9)
    res = oracle_solve_risk(inst, RiskParams(1e12, cmax, 1.0, 0.0, 1.0))
    assert res.objective == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_relabel_symmetry(seed):
    rng = np.random.default_rng(200 + seed)
    inst = random_instance(rng)
    while inst.num_transactions * inst.horizon > 9:
        inst = random_instance(rng)
    perm = rng.permutation(inst.num_transactions)
    sysp = CashSystem(inst.system.account_labels, [inst.system.transaction_labels[i] for i in perm],
                      inst.system.incidence[perm])
    c = inst.costs
    permuted = ProblemInstance(sysp, CostStructure(c.fixed[perm], c.variable[perm], c.holding),
                               inst.min_balance, inst.initial_balance, inst.forecasts)
    a, b = oracle_solve_cost(inst), oracle_solve_cost(permuted)
    assert a.status == b.status
    if a.status is Status.OPTIMAL:
        assert a.objective == pytest.approx(b.objective, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_small_random_risk_matches_engine(seed):
    rng = np.random.default_rng(300 + seed)
    inst = random_instance(rng)
    while inst.num_transactions * inst.horizon > 8 or oracle_solve_cost(inst).status is not Status.OPTIMAL:
        inst = random_instance(rng)
    base = solve_cost(inst)
    c0 = float(np.median(base.period_costs))
    risk = RiskParams(c0, 2 * base.objective + 1, 2 * np.maximum(base.period_costs - c0, 0).sum() + 1, 0.3, 0.7)
    assert oracle_solve_risk(inst, risk).objective == pytest.approx(solve_risk(inst, risk).objective, abs=1e-6)


@pytest.mark.parametrize("name", ["example_s4", "example_s4_prose"])
def test_fixture_references_agree_with_highs(name):
    from cashpolicy import example_path, load_problem

    path = example_path(name)
    inst = load_problem(str(path))
    ref = json.loads(path.read_text())["reference"]
    assert highs_objective(inst) == pytest.approx(ref["cost_objective"], abs=1e-6)
    r = ref["risk"]
    risk = RiskParams(r["c0"], r["cmax"], r["rmax"], r["w1"], r["w2"])
    assert highs_objective(inst, risk) == pytest.approx(r["objective"], abs=1e-9)
    for horizon, value in ref.get("cost_objective_by_horizon", {}).items():
        short = inst.truncated(int(horizon))
        assert highs_objective(short) == pytest.approx(value, abs=1e-6)
        if short.num_transactions * short.horizon <= MAX_BINARIES:
            assert oracle_solve_cost(short).objective == pytest.approx(value, abs=1e-6)
