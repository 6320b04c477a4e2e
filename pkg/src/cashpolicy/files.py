"""Problem files, solution documents and CSV/plot-data exports.

A problem file is JSON::

    {
      "accounts": [1, 2, 3],
      "transactions": [{"label": 1, "from": 2, "to": 1,
                        "fixed_cost": 50, "variable_cost": 0}, ...],
      "holding_costs": {"1": 100, "2": 100, "3": 0},
      "min_balance": {"1": 2, "2": 2, "3": 0},
      "initial_balance": {"1": 5, "2": 8, "3": 12},
      "horizon": 5,
      "forecasts": [[1, -3, 0], ...]
    }

Per-account maps are keyed by the string form of the account label.
``forecasts`` may instead be a path (relative to the problem file) to a CSV
whose header row lists the account labels.  Unknown top-level keys such as
``reference`` are ignored.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .model import (
    CashSystem,
    CostStructure,
    InvalidInstanceError,
    ProblemInstance,
    RiskParams,
    Solution,
    empirical_ccar,
)

FORMAT_VERSION = "1"


class ProblemFileError(InvalidInstanceError):
    pass


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _per_account(doc: dict, key: str, accounts: list) -> list[float]:
    if key not in doc:
        raise ProblemFileError(f"missing required key {key!r}")
    mapping = doc[key]
    if not isinstance(mapping, dict):
        raise ProblemFileError(f"{key} must be a map from account label to number")
    known = {str(a) for a in accounts}
    for k in mapping:
        if k not in known:
            raise ProblemFileError(f"{key}: unknown account label {k!r}")
    out = []
    for a in accounts:
        if str(a) not in mapping:
            raise ProblemFileError(f"{key}: no value for account {a!r}")
        out.append(_number(mapping[str(a)], f"{key}[{a!r}]"))
    return out


def read_matrix_csv(path, columns: list | None = None) -> tuple[list[str], np.ndarray]:
    """Read a CSV with a header row; optionally reorder to ``columns``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ProblemFileError(f"{path}: empty CSV file")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float).reshape(-1, len(header))
    except ValueError as exc:
        raise ProblemFileError(f"{path}: {exc}") from None
    if columns is not None:
        wanted = [str(c) for c in columns]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise ProblemFileError(f"{path}: missing column(s) {missing}")
        data = data[:, [header.index(c) for c in wanted]]
        header = wanted
    return header, data


def write_matrix_csv(path, header, matrix) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(header, matrix))


def parse_problem(doc: dict, base_dir: Path | None = None) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise ProblemFileError("problem file must contain a JSON object")
    for key in ("accounts", "transactions", "horizon", "forecasts"):
        if key not in doc:
            raise ProblemFileError(f"missing required key {key!r}")
    accounts = doc["accounts"]
    if not isinstance(accounts, list) or not accounts:
        raise ProblemFileError("accounts must be a non-empty list of labels")
    if len({str(a) for a in accounts}) != len(accounts):
        raise ProblemFileError("account labels must be unique")
    known = {str(a): a for a in accounts}

    transfers, fixed, variable = [], [], []
    for k, tr in enumerate(doc["transactions"]):
        where = f"transactions[{k}]"
        if not isinstance(tr, dict):
            raise ProblemFileError(f"{where}: expected an object")
        for key in ("label", "from", "to", "fixed_cost", "variable_cost"):
            if key not in tr:
                raise ProblemFileError(f"{where}: missing key {key!r}")
        for key in ("from", "to"):
            if str(tr[key]) not in known:
                raise ProblemFileError(f"{where} ({tr['label']!r}): unknown account label {tr[key]!r}")
        if str(tr["from"]) == str(tr["to"]):
            raise ProblemFileError(f"{where} ({tr['label']!r}): from and to must differ")
        transfers.append((tr["label"], known[str(tr["from"])], known[str(tr["to"])]))
        fixed.append(_number(tr["fixed_cost"], f"{where}.fixed_cost"))
        variable.append(_number(tr["variable_cost"], f"{where}.variable_cost"))

    horizon = doc["horizon"]
    if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1:
        raise ProblemFileError(f"horizon must be a positive integer, got {horizon!r}")

    fc = doc["forecasts"]
    if isinstance(fc, str):
        path = Path(fc)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        _, F = read_matrix_csv(path, columns=accounts)
    else:
        try:
            F = np.array(fc, dtype=float)
        except (TypeError, ValueError):
            raise ProblemFileError("forecasts must be a rectangular array of numbers") from None
        if F.ndim != 2:
            raise ProblemFileError("forecasts must be a rectangular array of numbers")
    if F.shape[0] != horizon:
        raise ProblemFileError(f"forecasts have {F.shape[0]} rows but horizon is {horizon}")
    if F.shape[1] != len(accounts):
        raise ProblemFileError(f"forecasts have {F.shape[1]} columns but there are {len(accounts)} accounts")

    try:
        system = CashSystem.from_transfers(accounts, transfers)
        costs = CostStructure(fixed, variable, _per_account(doc, "holding_costs", accounts))
        return ProblemInstance(
            system,
            costs,
            _per_account(doc, "min_balance", accounts),
            _per_account(doc, "initial_balance", accounts),
            F,
            horizon=horizon,
        )
    except ProblemFileError:
        raise
    except InvalidInstanceError as exc:
        raise ProblemFileError(str(exc)) from None


def load_problem(path) -> ProblemInstance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ProblemFileError(f"{path}: {exc.strerror}") from None
    return parse_problem(doc, path.parent)


def problem_document(instance: ProblemInstance) -> dict:
    system = instance.system
    accounts = list(system.account_labels)
    c = instance.costs
    transactions = []
    for i, label in enumerate(system.transaction_labels):
        src, dst = system.endpoints(i)
        transactions.append(
            {"label": label, "from": src, "to": dst,
             "fixed_cost": float(c.fixed[i]), "variable_cost": float(c.variable[i])}
        )
    per = lambda v: {str(a): float(x) for a, x in zip(accounts, v)}  # noqa: E731
    return {
        "format_version": FORMAT_VERSION,
        "accounts": accounts,
        "transactions": transactions,
        "holding_costs": per(c.holding),
        "min_balance": per(instance.min_balance),
        "initial_balance": per(instance.initial_balance),
        "horizon": instance.horizon,
        "forecasts": instance.forecasts.tolist(),
    }


def write_problem(instance: ProblemInstance, path, forecasts_csv=None) -> None:
    """Write ``instance`` as a problem file, optionally externalising forecasts."""
    path = Path(path)
    doc = problem_document(instance)
    if forecasts_csv is not None:
        csv_path = Path(forecasts_csv)
        write_matrix_csv(csv_path, instance.system.account_labels, instance.forecasts)
        try:
            doc["forecasts"] = str(csv_path.resolve().relative_to(path.resolve().parent))
        except ValueError:
            doc["forecasts"] = str(csv_path.resolve())
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _matrix(labels, values):
    return {"columns": list(labels), "rows": None if values is None else np.asarray(values).tolist()}


def solution_document(instance: ProblemInstance, solution: Solution, risk: RiskParams | None = None,
                      timing: bool = True) -> dict:
    """JSON-ready summary of a solve.

    With ``timing=False`` the wall-clock entry is omitted, which makes
    documents of repeated solves byte-for-byte comparable.
    """
    sol = solution
    doc = {
        "format_version": FORMAT_VERSION,
        "mode": "cost" if risk is None else "risk",
        "status": sol.status.value,
        "objective": sol.objective,
        "total_cost": None if sol.period_costs is None else float(sol.period_costs.sum()),
        "period_costs": None if sol.period_costs is None else sol.period_costs.tolist(),
        "deviations": None if sol.deviations is None else sol.deviations.tolist(),
        "policy": _matrix(instance.system.transaction_labels, sol.policy),
        "balances": _matrix(instance.system.account_labels, sol.balances),
        "solver": {"nodes": sol.nodes, "lp_iterations": sol.lp_iterations},
    }
    if timing:
        doc["solver"]["wall_time_s"] = sol.wall_time
    if risk is not None:
        doc["risk_params"] = {
            "cost_ref": risk.cost_ref,
            "cost_budget": risk.cost_budget,
            "risk_budget": risk.risk_budget,
            "cost_weight": risk.cost_weight,
            "risk_weight": risk.risk_weight,
        }
        doc["ccar"] = None if sol.period_costs is None else empirical_ccar(sol.period_costs, risk.cost_ref)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def plot_data(instance: ProblemInstance, solution: Solution) -> dict:
    """Per-account balance series keyed by period, period 0 being the initial balance."""
    series = {}
    if solution.balances is not None:
        full = np.vstack([instance.initial_balance, solution.balances])
        for j, label in enumerate(instance.system.account_labels):
            series[str(label)] = {str(t): float(full[t, j]) for t in range(full.shape[0])}
    return {
        "format_version": FORMAT_VERSION,
        "status": solution.status.value,
        "accounts": list(instance.system.account_labels),
        "min_balance": {str(a): float(v) for a, v in zip(instance.system.account_labels, instance.min_balance)},
        "series": series,
    }


def csv_text(header, matrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([str(h) for h in header])
    for row in np.asarray(matrix, dtype=float):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
