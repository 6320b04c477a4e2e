"""Command-line front end.

Exit codes: 0 optimal, 2 infeasible, 3 invalid input, 4 solver limit.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .engine import BnbOptions, solve_cost, solve_risk
from .files import (
    ProblemFileError,
    dumps,
    load_problem,
    plot_data,
    solution_document,
    write_matrix_csv,
)
from .model import InvalidInstanceError, RiskParams, Status, describe

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3
EXIT_LIMIT = 4

logger = logging.getLogger("cashpolicy")


def exit_code(status: Status) -> int:
    return {
        Status.OPTIMAL: EXIT_OK,
        Status.INFEASIBLE: EXIT_INFEASIBLE,
        Status.ITERATION_LIMIT: EXIT_LIMIT,
        Status.UNBOUNDED: EXIT_LIMIT,
    }[status]


def _add_outputs(p: argparse.ArgumentParser):
    p.add_argument("-p", "--problem", required=True, type=Path, help="problem file (JSON)")
    p.add_argument("-o", "--output", type=Path, help="write the solution document here instead of stdout")
    p.add_argument("--policy-csv", type=Path, help="export the policy matrix (periods x transactions)")
    p.add_argument("--balance-csv", type=Path, help="export the balance matrix (periods x accounts)")
    p.add_argument("--plot-data", type=Path, help="export per-account balance series as JSON")
    p.add_argument("--max-nodes", type=int, default=BnbOptions.max_nodes, help="branch-and-bound node limit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cashpolicy", description="Optimal transfer policies for multi-account cash management."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("describe", help="print the cash system, costs and horizon")
    d.add_argument("-p", "--problem", required=True, type=Path)

    sc = sub.add_parser("solve-cost", help="minimise transaction plus holding cost")
    _add_outputs(sc)

    sr = sub.add_parser("solve-risk", help="minimise weighted cost and cost-at-risk")
    _add_outputs(sr)
    sr.add_argument("--c0", type=float, required=True, help="cost reference per period")
    sr.add_argument("--cmax", type=float, required=True, help="total cost budget")
    sr.add_argument("--rmax", type=float, required=True, help="total deviation budget")
    sr.add_argument("--w1", type=float, required=True, help="cost weight")
    sr.add_argument("--w2", type=float, required=True, help="risk weight")
    return parser


def _solve(args) -> int:
    instance = load_problem(args.problem)
    risk = None
    if args.command == "solve-risk":
        risk = RiskParams(args.c0, args.cmax, args.rmax, args.w1, args.w2)
    options = BnbOptions(max_nodes=args.max_nodes)
    sol = solve_cost(instance, options) if risk is None else solve_risk(instance, risk, options)
    if not sol.ok:
        print(f"cashpolicy: unable to find an optimal policy (status {sol.status})", file=sys.stderr)

    text = dumps(solution_document(instance, sol, risk))
    if args.output:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    if sol.policy is not None:
        if args.policy_csv:
            write_matrix_csv(args.policy_csv, instance.system.transaction_labels, sol.policy)
        if args.balance_csv:
            write_matrix_csv(args.balance_csv, instance.system.account_labels, sol.balances)
    if args.plot_data:
        args.plot_data.write_text(dumps(plot_data(instance, sol)))
    return exit_code(sol.status)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if args.command == "describe":
            sys.stdout.write(describe(load_problem(args.problem)))
            return EXIT_OK
        return _solve(args)
    except ProblemFileError as exc:
        print(f"cashpolicy: invalid problem file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidInstanceError, ValueError) as exc:
        print(f"cashpolicy: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
