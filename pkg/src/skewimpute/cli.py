"""Command-line entry point: ``skewimpute {demo,moments,simulate,sweep,summarize}``."""
from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

from .design import CONTROL, NU_LEVELS, PATTERNS, RHO2_LEVELS, CellConfig
from .errors import InfeasibleTarget
from .harness import (
    DEMO_METHODS, GROUP_FIELDS, check_invariants, emit_tables, experiment_cells,
    read_cells_csv, run_cells, summarize, univariate_demo, write_summary_csv,
)
from .methods import METHODS
from .moments import BoundSpec, MomentPair, bounded_moments, match_censored, match_truncated

DEFAULT_SEED = 20240601
EXIT_INVARIANT = 3


def _csv_floats(text):
    return tuple(float(v) for v in text.split(","))


def _csv_words(choices):
    def parse(text):
        words = tuple(w.strip() for w in text.split(",") if w.strip())
        bad = [w for w in words if w not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown value(s) {bad}; choose from {choices}")
        return words
    return parse


def cmd_demo(args) -> int:
    rep = univariate_demo(args.method, n=args.n, seed=args.seed)
    print(f"method={rep.method} n={rep.n} seed={rep.seed} status={rep.status}")
    if rep.message:
        print(rep.message)
    for label, mom in (("observed", rep.observed), ("imputed", rep.imputed), ("completed", rep.completed)):
        if mom:
            cells = " ".join(f"{k}={v:.4f}" for k, v in mom.items())
            print(f"{label:>9}: {cells}")
    if args.grid:
        with open(args.grid, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "observed_cdf", "imputed_cdf", "true_cdf", "imputed_minus_true"])
            for row in zip(rep.grid, rep.observed_cdf, rep.imputed_cdf, rep.true_cdf, rep.cdf_difference):
                w.writerow([format(float(v), ".17g") for v in row])
        print(f"grid written to {args.grid}")
    return 0


def cmd_moments(args) -> int:
    if args.inverse:
        target = MomentPair(args.mean, args.sd ** 2)
        matcher = match_censored if args.kind == "censor" else match_truncated
        try:
            pre = matcher(target, args.c)
        except InfeasibleTarget as exc:
            print(f"infeasible: {exc}")
            return 1
        back = bounded_moments(pre)
        print(f"pre_mean={pre.pre_mean:.10g} pre_sd={pre.pre_sd:.10g}")
        print(f"check: mean={back.mean:.10g} variance={back.variance:.10g}")
    else:
        out = bounded_moments(BoundSpec(args.c, args.kind, args.mean, args.sd))
        print(f"mean={out.mean:.10g} variance={out.variance:.10g}")
    return 0


def _finish(results, args, **manifest) -> int:
    files = emit_tables(results, args.out, args.seed, **manifest)
    problems = check_invariants(results)
    for row in summarize([r for r in results if r.config.method != CONTROL], ("method",)):
        keys = [k for k in row if k.endswith("_rel_bias") and not k.endswith("median_bias")]
        print(row["method"].ljust(22), " ".join(f"{k[:-9]}={row[k]:+.1f}%" for k in keys))
    print(f"tables written to {files['cells'].parent}")
    if problems:
        for p in problems:
            print("invariant violation:", p, file=sys.stderr)
        return EXIT_INVARIANT
    return 0


def cmd_simulate(args) -> int:
    pattern = CONTROL if args.method == CONTROL else args.pattern
    cfg = CellConfig(args.nu, args.r2, pattern, args.method, args.n, args.reps, args.design, args.m)
    results = run_cells([cfg], args.seed, args.workers)
    return _finish(results, args, command="simulate", design=args.design, nu=args.nu, r2=args.r2,
                   pattern=pattern, method=args.method, n=args.n, reps=args.reps, m=args.m)


def cmd_sweep(args) -> int:
    cells = experiment_cells(args.design, methods=args.methods, nus=args.nu, rho2s=args.r2,
                             patterns=args.patterns, n=args.n, replications=args.reps, m=args.m,
                             controls=not args.no_controls)
    t0 = time.perf_counter()
    results = run_cells(cells, args.seed, args.workers)
    print(f"{len(cells)} cells in {time.perf_counter() - t0:.1f}s")
    return _finish(results, args, command="sweep", design=args.design,
                   methods=",".join(args.methods), nu=",".join(map(str, args.nu)),
                   r2=",".join(map(str, args.r2)), patterns=",".join(args.patterns),
                   n=args.n, reps=args.reps, m=args.m, controls=not args.no_controls)


def cmd_summarize(args) -> int:
    results = read_cells_csv(args.input)
    by = ("method",) if args.by == "method" else ("method", args.by)
    rows = summarize(results, by, exclude_methods=args.exclude)
    if args.out:
        write_summary_csv(rows, args.out)
    stat = f"_{args.stat}"
    for row in rows:
        keys = " ".join(f"{row[k]}" for k in by).ljust(30)
        vals = " ".join(f"{k[: -len(stat)]}={row[k]:+.1f}" for k in row if k.endswith(stat)
                        and (stat != "_rel_bias" or not k.endswith("median_bias")))
        print(keys, vals)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skewimpute", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("demo", help="univariate imputation of a standard exponential")
    d.add_argument("--method", choices=DEMO_METHODS, default="fn")
    d.add_argument("--n", type=int, default=100_000)
    d.add_argument("--seed", type=int, default=1)
    d.add_argument("--grid", type=Path, help="write the CDF comparison grid to this CSV")
    d.set_defaults(func=cmd_demo)

    mo = sub.add_parser("moments", help="bounded-normal moments and their inverse")
    mo.add_argument("--kind", choices=("censor", "truncate"), default="censor")
    mo.add_argument("--mean", type=float, default=1.0, help="pre-bound mean, or target mean with --inverse")
    mo.add_argument("--sd", type=float, default=1.0, help="pre-bound SD, or target SD with --inverse")
    mo.add_argument("--c", type=float, default=0.0)
    mo.add_argument("--inverse", action="store_true", help="solve for the pre-bound normal")
    mo.set_defaults(func=cmd_moments)

    def common(sp):
        sp.add_argument("--design", choices=("bivariate", "trivariate"), default="bivariate")
        sp.add_argument("--n", type=int, default=100)
        sp.add_argument("--reps", type=int, default=100)
        sp.add_argument("--m", type=int, default=5)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", type=Path, default=Path("results"))

    s = sub.add_parser("simulate", help="run a single experimental cell")
    common(s)
    s.add_argument("--nu", type=float, default=2.0)
    s.add_argument("--r2", type=float, default=0.5)
    s.add_argument("--pattern", choices=PATTERNS, default="mcar")
    s.add_argument("--method", choices=METHODS + (CONTROL,), default="linear")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run the full factorial experiment")
    common(w)
    w.add_argument("--methods", type=_csv_words(METHODS), default=METHODS)
    w.add_argument("--nu", type=_csv_floats, default=NU_LEVELS)
    w.add_argument("--r2", type=_csv_floats, default=RHO2_LEVELS)
    w.add_argument("--patterns", type=_csv_words(PATTERNS), default=PATTERNS)
    w.add_argument("--no-controls", action="store_true", help="skip the no-deletion control cells")
    w.set_defaults(func=cmd_sweep)

    su = sub.add_parser("summarize", help="average a cell table by method and factor")
    su.add_argument("input", type=Path, help="cells.csv written by simulate or sweep")
    su.add_argument("--by", choices=("method",) + GROUP_FIELDS[1:], default="method")
    su.add_argument("--stat", choices=("rel_bias", "rel_rmse", "rel_median_bias"), default="rel_bias")
    su.add_argument("--exclude", type=_csv_words(METHODS + (CONTROL,)), default=())
    su.add_argument("--out", type=Path)
    su.set_defaults(func=cmd_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
