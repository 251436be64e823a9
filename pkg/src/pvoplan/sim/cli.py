"""Command-line front end.

Verbs:
  run          one scenario -> per-step CSV + JSON summary
  compare      methods x scenarios matrix -> summary CSV
  consistency  embedding-consistency curve data -> CSV
  timing       per-decision timing table -> CSV

Exit codes: 0 success, 2 configuration error, 3 planner infeasibility.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError
from .config import ScenarioConfig
from .reports import benchmark_timing, compare, consistency_report, write_csv
from .runner import run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvoplan")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p, multi_scenario=False):
        if multi_scenario:
            p.add_argument("--scenario", action="append", required=True, metavar="PATH")
        else:
            p.add_argument("--scenario", required=True, metavar="PATH")
        p.add_argument("--out", default=".", metavar="DIR")
        p.add_argument("--seed", type=int, default=None, metavar="S")

    p_run = sub.add_parser("run", help="run a single scenario")
    add_common(p_run)
    p_run.add_argument("--method", default=None, metavar="NAME")
    p_run.add_argument("--degree", type=int, default=None, metavar="D")
    p_run.add_argument("--rho", type=float, default=None, metavar="R")
    p_run.add_argument("--eta", type=float, default=None, metavar="E")

    p_cmp = sub.add_parser("compare", help="methods x scenarios matrix")
    add_common(p_cmp, multi_scenario=True)
    p_cmp.add_argument("--method", action="append", required=True, metavar="NAME")
    p_cmp.add_argument("--degrees", type=_int_list, default=[2], metavar="D1,D2")
    p_cmp.add_argument("--seeds", type=_int_list, default=None, metavar="S1,S2")
    p_cmp.add_argument("--rho", type=float, default=None, metavar="R")
    p_cmp.add_argument("--eta", type=float, default=None, metavar="E")

    p_con = sub.add_parser("consistency", help="embedding consistency curve")
    add_common(p_con)
    p_con.add_argument("--n-values", type=_int_list, default=[5, 10, 20, 40], metavar="N1,N2")
    p_con.add_argument("--degrees", type=_int_list, default=[1, 2, 3], metavar="D1,D2")
    p_con.add_argument("--n-seeds", type=int, default=10, metavar="K")

    p_tim = sub.add_parser("timing", help="per-decision timing table")
    add_common(p_tim, multi_scenario=True)
    p_tim.add_argument("--methods", type=lambda s: s.split(","), default=["rkhs", "gmm_kld"])
    p_tim.add_argument("--degrees", type=_int_list, default=[1, 2, 3], metavar="D1,D2")

    return parser


def _load(path, seed=None, method=None, degree=None, rho=None, eta=None) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(path)
    return cfg.with_updates(method=method, degree=degree, rho=rho, eta=eta, seed=seed)


def _run_name(log) -> str:
    tag = f"{log.method}_d{log.degree}" if log.method == "rkhs" else log.method
    return f"{log.scenario}__{tag}__seed{log.seed}"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.verb == "run":
            cfg = _load(
                args.scenario,
                seed=args.seed,
                method=args.method,
                degree=args.degree,
                rho=args.rho,
                eta=args.eta,
            )
            log = run_scenario(cfg)
            name = _run_name(log)
            log.to_csv(out_dir / f"{name}.csv")
            log.write_summary(out_dir / f"{name}.summary.json")
            print(f"wrote {out_dir / name}.csv")
            if log.status != "ok":
                print(f"terminal failure: {log.status}", file=sys.stderr)
                return EXIT_INFEASIBLE
            return EXIT_OK

        if args.verb == "compare":
            scenarios = [
                _load(p, rho=args.rho, eta=args.eta) for p in args.scenario
            ]
            seeds = args.seeds if args.seeds is not None else [scenarios[0].seed]
            rows = compare(scenarios, args.method, args.degrees, seeds)
            path = out_dir / "compare.csv"
            write_csv(rows, path)
            print(f"wrote {path}")
            return EXIT_OK

        if args.verb == "consistency":
            cfg = _load(args.scenario, seed=args.seed)
            rows = consistency_report(
                cfg, args.n_values, args.degrees, seeds=list(range(args.n_seeds))
            )
            path = out_dir / "consistency.csv"
            write_csv(rows, path, columns=["n", "d", "mean_error", "n_seeds"])
            print(f"wrote {path}")
            return EXIT_OK

        if args.verb == "timing":
            scenarios = [_load(p, seed=args.seed) for p in args.scenario]
            rows = benchmark_timing(scenarios, args.methods, args.degrees)
            path = out_dir / "timing.csv"
            write_csv(rows, path)
            print(f"wrote {path}")
            return EXIT_OK

        raise AssertionError(f"unhandled verb {args.verb}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
