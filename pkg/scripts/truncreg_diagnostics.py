"""Truncated-regression behaviour across the bivariate design.

For each (nu, rho2) cell, fits the truncated regression to the observed
cases of MCAR/tail/peak datasets and reports how often the fit fails to
converge at c = 0, how often the c = -1 refit also fails, and how often the
imputations run wild (> 10x the largest observed X).
"""
import argparse
from collections import Counter

import numpy as np

from skewimpute.cli import DEFAULT_SEED
from skewimpute.core import random_stream
from skewimpute.design import DELETERS, NU_LEVELS, PATTERNS, RHO2_LEVELS, CellConfig, generate
from skewimpute.errors import MethodFailure, NonConvergence
from skewimpute.methods import ImputationSpec, multiply_impute
from skewimpute.truncreg import truncreg_fit


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = p.parse_args()

    print(f"{'nu':>4}{'rho2':>6}{'fail c=0':>10}{'fail both':>11}{'wild':>7}{'median grad':>13}")
    for nu in NU_LEVELS:
        for rho2 in RHO2_LEVELS:
            tally = Counter()
            grads = []
            for pattern in PATTERNS:
                cfg = CellConfig(nu, rho2, pattern, "truncated_regression")
                for rep in range(args.reps):
                    rng = random_stream(args.seed, *cfg.stream_key(), rep, 0)
                    ds = DELETERS[pattern](generate(cfg, rng), rng)
                    obs = ~ds.missing
                    try:
                        truncreg_fit(ds.y[obs], ds.x[obs], 0.0)
                    except NonConvergence as exc:
                        tally["fail0"] += 1
                        grads.append(exc.fit.grad_norm if exc.fit else np.nan)
                    stats = Counter()
                    try:
                        done = multiply_impute(ds, ImputationSpec("truncated_regression"),
                                               random_stream(args.seed, 99, rep), stats)
                    except MethodFailure:
                        tally["fail_both"] += 1
                        continue
                    top = max(x[ds.missing].max() for x in done) if ds.n_mis else 0.0
                    tally["wild"] += top > 10 * ds.x_obs.max()
                    tally["n"] += 1
            n = args.reps * len(PATTERNS)
            med = np.nanmedian(grads) if grads else float("nan")
            print(f"{nu:>4}{rho2:>6}{100 * tally['fail0'] / n:>9.1f}%{100 * tally['fail_both'] / n:>10.1f}%"
                  f"{tally['wild']:>7}{med:>13.2e}")


if __name__ == "__main__":
    main()
