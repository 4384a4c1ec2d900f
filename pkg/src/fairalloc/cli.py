"""``fairalloc`` command line.

Exit codes: 0 success, 1 bad input, 2 infeasible scenario, 3 oracle-check
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import sweep_alpha
from .experiments import (OracleCheckConfig, PofPoeConfig, TwoClassConfig, parse_alphas,
                          parse_ints, run_oracle_check, run_pofpoe, run_twoclass, sweep_csv)
from .model import Scenario, ScenarioError
from .outer import InfeasibleError, OuterConfig, solve

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_ORACLE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse would otherwise exit with 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--delta-l", type=float, default=None, help="load grid step")
    common.add_argument("--l-max", type=float, default=None, help="largest load searched")
    common.add_argument("--no-refine", action="store_true",
                        help="skip golden-section refinement after the grid")
    common.add_argument("--out", type=Path, default=None, help="output file (default stdout)")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--trials", type=int, default=None)
    seeded.add_argument("--seed", type=int, default=0)
    seeded.add_argument("--workers", type=int, default=1, help="process pool size")

    p = _Parser(prog="fairalloc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="solve one scenario")
    s.add_argument("--scenario", type=Path, required=True)
    s.add_argument("--alpha", default="1")

    s = sub.add_parser("sweep", parents=[common], help="alpha sweep with PoF/PoE as CSV")
    s.add_argument("--scenario", type=Path, required=True)
    s.add_argument("--alpha", default="0,0.5,1,2,inf")

    s = sub.add_parser("pofpoe", parents=[common, seeded], help="PoF/PoE against user count")
    s.add_argument("--n-users", default="5,10,20")
    s.add_argument("--alpha", default="0,1,inf")

    sub.add_parser("twoclass", parents=[common, seeded], help="two-class disparity experiment")

    s = sub.add_parser("oracle-check", parents=[common, seeded],
                       help="compare the solver with brute force on small scenarios")
    s.add_argument("--alpha", default="0,0.5,1,2,inf")
    s.add_argument("--n-users", default="2", help="largest user count drawn (at most 3)")
    return p


def _outer(args) -> OuterConfig:
    return OuterConfig(delta_l=args.delta_l, l_max=args.l_max, refine=not args.no_refine)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary.json")


def _cmd_solve(args) -> int:
    sc = Scenario.load(args.scenario)
    alphas = parse_alphas(args.alpha)
    results = [solve(sc, a, _outer(args)).to_dict() for a in alphas]
    _emit(_dump(results[0] if len(results) == 1 else results), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sc = Scenario.load(args.scenario)
    points = sweep_alpha(sc, parse_alphas(args.alpha), _outer(args))
    _emit(sweep_csv(points), args.out)
    return EXIT_OK


def _report(rep, args) -> int:
    _emit(rep.csv(), args.out)
    summary = _dump(rep.summary_json())
    if args.out is not None:
        _summary_path(args.out).write_text(summary, encoding="utf-8")
        sys.stdout.write(summary)
    else:
        sys.stderr.write(summary)
    return EXIT_OK


def _cmd_pofpoe(args) -> int:
    cfg = PofPoeConfig(n_users=tuple(parse_ints(args.n_users)),
                       trials=_trials(args, 100), alphas=tuple(parse_alphas(args.alpha)),
                       seed=args.seed, outer=_outer(args), workers=args.workers)
    return _report(run_pofpoe(cfg), args)


def _cmd_twoclass(args) -> int:
    cfg = TwoClassConfig(trials=_trials(args, 200), seed=args.seed, outer=_outer(args),
                         workers=args.workers)
    return _report(run_twoclass(cfg), args)


def _cmd_oracle_check(args) -> int:
    users = max(parse_ints(args.n_users))
    if users > 3:
        raise ValueError("brute force handles at most 3 users")
    cfg = OracleCheckConfig(scenarios=_trials(args, 50), seed=args.seed,
                            alphas=tuple(parse_alphas(args.alpha)), max_users=users,
                            outer=_outer(args), workers=args.workers)
    rep = run_oracle_check(cfg)
    _emit(_dump(rep), args.out)
    if args.out is not None:
        sys.stdout.write(f"{rep['checks'] - rep['failure_count']}/{rep['checks']} checks passed\n")
    return EXIT_OK if rep["passed"] else EXIT_ORACLE


def _trials(args, default: int) -> int:
    k = default if args.trials is None else args.trials
    if k < 1:
        raise ValueError(f"--trials must be >= 1, got {k}")
    return k


COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "pofpoe": _cmd_pofpoe,
    "twoclass": _cmd_twoclass,
    "oracle-check": _cmd_oracle_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"fairalloc: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"fairalloc: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"fairalloc: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
