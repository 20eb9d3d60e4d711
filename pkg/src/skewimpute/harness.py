"""Factorial simulation runner, aggregation, table I/O and univariate demos."""
from __future__ import annotations

import csv
import dataclasses
import math
import platform
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy

from .core import random_stream
from .design import (
    CONTROL, DELETERS, NU_LEVELS, PATTERNS, RHO2_LEVELS, CellConfig, generate,
)
from .errors import InfeasibleTarget, SkewImputeError
from .estimands import analyze, estimand_names, mi_combine, sample_skewness, true_values
from .methods import (
    METHODS, ImputationSpec, apply_censoring, impute_fn_transformed, impute_fn_univariate,
    multiply_impute, reject_below,
)
from .moments import MomentPair, match_censored, match_truncated

__version__ = "0.1.0"

FAILURE_KEYS = (
    "rejection_fallbacks", "truncreg_refits", "method_failures", "tail_fallbacks",
    "mask_resamples", "wild_replications",
)
WILD_FACTOR = 10.0

CELL_COLUMNS = (
    "design", "method", "nu", "rho2", "pattern", "n", "replications", "m", "seed",
    "estimand", "truth", "n_used", "mean_estimate", "sd_estimate", "bias", "rmse",
    "rel_bias", "rel_rmse", "mc_se", "median_estimate", "rel_median_bias",
) + FAILURE_KEYS + ("max_imputed_ratio",)
CELL_HEADER = ",".join(CELL_COLUMNS)

_INT_COLUMNS = {"n", "replications", "m", "seed", "n_used"} | set(FAILURE_KEYS)
_STR_COLUMNS = {"design", "method", "pattern", "estimand"}


@dataclass(frozen=True)
class EstimandRecord:
    """Across-replication summary of one estimand; relative columns are percent."""

    estimand: str
    truth: float
    n_used: int
    mean_estimate: float
    sd_estimate: float
    bias: float
    rmse: float
    rel_bias: float
    rel_rmse: float
    mc_se: float
    median_estimate: float
    rel_median_bias: float


@dataclass
class CellResult:
    config: CellConfig
    seed: int
    records: list[EstimandRecord]
    failure_counts: dict[str, int] = field(default_factory=dict)
    max_imputed_ratio: float = float("nan")

    def record(self, estimand: str) -> EstimandRecord:
        for r in self.records:
            if r.estimand == estimand:
                return r
        raise KeyError(estimand)

    @property
    def sort_key(self):
        c = self.config
        return (c.design, c.method, c.nu, c.rho2, c.pattern, c.n, c.replications, c.m, self.seed)


def summarize_estimates(estimand: str, truth: float, values: Sequence[float]) -> EstimandRecord:
    v = np.asarray(values, dtype=float)
    k = len(v)
    if k == 0:
        nan = float("nan")
        return EstimandRecord(estimand, truth, 0, nan, nan, nan, nan, nan, nan, nan, nan, nan)
    mean = float(v.mean())
    sd = float(v.std(ddof=1)) if k > 1 else 0.0
    bias = mean - truth
    rmse = math.sqrt(bias * bias + sd * sd)
    median = float(np.median(v))
    return EstimandRecord(
        estimand=estimand,
        truth=truth,
        n_used=k,
        mean_estimate=mean,
        sd_estimate=sd,
        bias=bias,
        rmse=rmse,
        rel_bias=100.0 * bias / truth,
        rel_rmse=100.0 * rmse / truth,
        mc_se=sd / math.sqrt(k),
        median_estimate=median,
        rel_median_bias=100.0 * (median - truth) / truth,
    )


def _data_stream(seed, config, rep):
    return random_stream(seed, *config.stream_key(), rep, 0)


def _imputation_streams(seed, config, rep):
    return [random_stream(seed, *config.stream_key(), rep, 1 + j) for j in range(config.m)]


def replicate(config: CellConfig, seed: int, rep: int, stats: Optional[Counter] = None):
    """One replication: returns (MI-combined estimates, max imputed / max observed X)."""
    stats = Counter() if stats is None else stats
    rng = _data_stream(seed, config, rep)
    data = generate(config, rng)
    if config.is_control:
        return analyze(data.x, data.y, data.z), float("nan")
    ds = DELETERS[config.pattern](data, rng, stats)
    spec = ImputationSpec(config.method, m=config.m)
    completions = multiply_impute(ds, spec, _imputation_streams(seed, config, rep), stats)
    est = mi_combine([analyze(x, ds.y, ds.z) for x in completions])
    ratio = float("nan")
    if ds.n_mis:
        ratio = max(float(x[ds.missing].max()) for x in completions) / float(ds.x_obs.max())
    return est, ratio


def run_cell(config: CellConfig, seed: int) -> CellResult:
    """Run every replication of a cell and aggregate bias and RMSE.

    Replications whose method fails are dropped and counted in
    ``failure_counts["method_failures"]``.
    """
    names = estimand_names(config.design)
    truth = true_values(config.design, config.nu, config.rho2)
    stats = Counter()
    collected = {k: [] for k in names}
    max_ratio = float("nan")
    for rep in range(config.replications):
        try:
            est, ratio = replicate(config, seed, rep, stats)
        except SkewImputeError:
            stats["method_failures"] += 1
            continue
        for k in names:
            collected[k].append(est[k])
        if ratio > WILD_FACTOR:
            stats["wild_replications"] += 1
        if not math.isnan(ratio):
            max_ratio = ratio if math.isnan(max_ratio) else max(max_ratio, ratio)
    records = [summarize_estimates(k, truth[k], collected[k]) for k in names]
    failures = {k: int(stats.get(k, 0)) for k in FAILURE_KEYS}
    return CellResult(config, int(seed), records, failures, max_ratio)


def experiment_cells(design: str = "bivariate", methods: Iterable[str] = METHODS,
                     nus: Iterable[float] = NU_LEVELS, rho2s: Iterable[float] = RHO2_LEVELS,
                     patterns: Iterable[str] = PATTERNS, n: int = 100, replications: int = 100,
                     m: int = 5, controls: bool = True) -> list[CellConfig]:
    nus, rho2s = tuple(nus), tuple(rho2s)
    cells = [
        CellConfig(nu, rho2, pattern, method, n, replications, design, m)
        for method in methods for nu in nus for rho2 in rho2s for pattern in patterns
    ]
    if controls:
        cells += [
            CellConfig(nu, rho2, CONTROL, CONTROL, n, replications, design, m)
            for nu in nus for rho2 in rho2s
        ]
    return cells


def _run_cell_args(args):
    return run_cell(*args)


def run_cells(cells: Sequence[CellConfig], seed: int, workers: int = 1) -> list[CellResult]:
    """Run cells, in parallel when ``workers > 1``; output is canonically sorted
    and does not depend on the worker count."""
    jobs = [(c, seed) for c in cells]
    if workers <= 1 or len(jobs) <= 1:
        results = [run_cell(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_args, jobs, chunksize=1))
    return sorted(results, key=lambda r: r.sort_key)


def run_experiment(design: str = "bivariate", seed: int = 20240601, workers: int = 1,
                   **overrides) -> list[CellResult]:
    """Full factorial sweep plus no-deletion controls; ``overrides`` are passed
    to :func:`experiment_cells` (methods, nus, rho2s, patterns, n, replications, m)."""
    return run_cells(experiment_cells(design, **overrides), seed, workers)


# --- summaries --------------------------------------------------------------

GROUP_FIELDS = ("method", "nu", "rho2", "pattern")


def summarize(results: Sequence[CellResult], by: Sequence[str] = ("method",),
              exclude_methods: Iterable[str] = ()) -> list[dict]:
    """Average rel_bias, rel_rmse and rel_median_bias over cells sharing ``by``.

    Returns one row per group, sorted, with keys ``by`` plus
    ``<estimand>_rel_bias``, ``<estimand>_rel_rmse``,
    ``<estimand>_rel_median_bias`` and ``cells``.
    """
    by = tuple(by)
    for b in by:
        if b not in GROUP_FIELDS:
            raise ValueError(f"cannot group by {b!r}")
    skip = set(exclude_methods)
    groups: dict[tuple, list[CellResult]] = {}
    for r in results:
        if r.config.method in skip:
            continue
        key = tuple(getattr(r.config, b) for b in by)
        groups.setdefault(key, []).append(r)
    if not groups:
        raise ValueError("no cells to summarize")
    rows = []
    for key in sorted(groups):
        members = groups[key]
        row = dict(zip(by, key))
        row["cells"] = len(members)
        for rec in members[0].records:
            name = rec.estimand
            for col in ("rel_bias", "rel_rmse", "rel_median_bias"):
                vals = [getattr(m.record(name), col) for m in members]
                row[f"{name}_{col}"] = float(np.mean(vals))
        rows.append(row)
    return rows


# --- table I/O --------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def cell_rows(results: Sequence[CellResult]) -> list[dict]:
    rows = []
    for r in sorted(results, key=lambda r: r.sort_key):
        c = r.config
        base = {
            "design": c.design, "method": c.method, "nu": c.nu, "rho2": c.rho2,
            "pattern": c.pattern, "n": c.n, "replications": c.replications, "m": c.m,
            "seed": r.seed,
        }
        for rec in r.records:
            row = dict(base)
            row.update(dataclasses.asdict(rec))
            row.update(r.failure_counts)
            row["max_imputed_ratio"] = r.max_imputed_ratio
            rows.append(row)
    return rows


def write_cells_csv(results: Sequence[CellResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CELL_COLUMNS)
        for row in cell_rows(results):
            w.writerow([_fmt(row[k]) for k in CELL_COLUMNS])


def read_cells_csv(path) -> list[CellResult]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != CELL_HEADER:
            raise ValueError("unexpected header in cell table")
        by_cell: dict[tuple, CellResult] = {}
        for raw in reader:
            row = {}
            for k, v in zip(header, raw):
                row[k] = v if k in _STR_COLUMNS else (int(v) if k in _INT_COLUMNS else float(v))
            cfg = CellConfig(row["nu"], row["rho2"], row["pattern"], row["method"], row["n"],
                             row["replications"], row["design"], row["m"])
            key = (cfg, row["seed"])
            if key not in by_cell:
                by_cell[key] = CellResult(cfg, row["seed"], [],
                                          {k: row[k] for k in FAILURE_KEYS},
                                          row["max_imputed_ratio"])
            fields = [f.name for f in dataclasses.fields(EstimandRecord)]
            by_cell[key].records.append(EstimandRecord(**{f: row[f] for f in fields}))
    return sorted(by_cell.values(), key=lambda r: r.sort_key)


def write_summary_csv(rows: Sequence[dict], path) -> None:
    if not rows:
        raise ValueError("empty summary")
    cols = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in cols])


def write_manifest(path, **entries) -> None:
    base = {
        "package": "skewimpute",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    base.update(entries)
    with open(path, "w") as fh:
        for k, v in base.items():
            fh.write(f"{k}={v}\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            out[k] = v
    return out


def emit_tables(results: Sequence[CellResult], path, seed: int, **manifest) -> dict[str, Path]:
    """Write cells.csv, summary_by_<factor>.csv and manifest.txt under ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {"cells": out / "cells.csv", "manifest": out / "manifest.txt"}
    write_cells_csv(results, files["cells"])
    for by in (("method",), ("method", "nu"), ("method", "rho2"), ("method", "pattern")):
        name = "summary_by_" + "_".join(by)
        files[name] = out / f"{name}.csv"
        write_summary_csv(summarize(results, by), files[name])
    totals = Counter()
    for r in results:
        totals.update(r.failure_counts)
    entries = {"seed": seed, "cells": len(results)}
    entries.update(manifest)
    entries.update({f"total_{k}": int(totals.get(k, 0)) for k in FAILURE_KEYS})
    write_manifest(files["manifest"], **entries)
    return files


def check_invariants(results: Sequence[CellResult], rtol: float = 1e-9) -> list[str]:
    """Violations of rmse >= |bias| and rmse^2 = bias^2 + sd^2."""
    problems = []
    for r in results:
        for rec in r.records:
            if rec.n_used == 0:
                continue
            lhs = rec.rmse ** 2
            rhs = rec.bias ** 2 + rec.sd_estimate ** 2
            if abs(lhs - rhs) > rtol * max(rhs, 1e-300) or rec.rmse < abs(rec.bias):
                problems.append(f"{r.config} {rec.estimand}: rmse identity fails")
    return problems


# --- univariate demos -------------------------------------------------------

DEMO_METHODS = (
    "fn", "censor_naive", "censor_matched", "truncate_naive", "truncate_matched",
    "sqrt_transform", "fourth_root_transform",
)


@dataclass
class DemoReport:
    method: str
    n: int
    seed: int
    status: str  # "ok" or "infeasible"
    message: str
    observed: dict
    imputed: dict
    completed: dict
    grid: np.ndarray
    observed_cdf: np.ndarray
    imputed_cdf: np.ndarray
    true_cdf: np.ndarray

    @property
    def cdf_difference(self) -> np.ndarray:
        return self.imputed_cdf - self.true_cdf


def _moments(v) -> dict:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return {}
    return {
        "mean": float(v.mean()),
        "variance": float(v.var(ddof=1)),
        "skewness": sample_skewness(v),
        "min": float(v.min()),
        "negative_fraction": float(np.mean(v < 0)),
    }


def _ecdf_on(grid, v):
    v = np.sort(np.asarray(v, dtype=float))
    if v.size == 0:
        return np.full(len(grid), np.nan)
    return np.searchsorted(v, grid, side="right") / v.size


def univariate_demo(method: str, n: int = 100_000, seed: int = 1,
                    distribution: str = "exp1", grid=None) -> DemoReport:
    """Impute the missing half of a standard exponential sample.

    The observed half is Exp(1) (MCAR deletion of exactly ``n // 2`` values);
    the report compares observed, imputed and completed moments and CDFs on
    ``grid`` against the true Exp(1) CDF.
    """
    if distribution != "exp1":
        raise ValueError("only the standard exponential is supported")
    if method not in DEMO_METHODS:
        raise ValueError(f"unknown demo method {method!r}")
    rng = random_stream(seed, 0)
    x = rng.standard_exponential(n)
    missing = np.zeros(n, dtype=bool)
    missing[rng.permutation(n)[: n // 2]] = True
    obs = x[~missing]
    imp_rng = random_stream(seed, 1)
    status, message = "ok", ""
    imputed = np.empty(0)
    c = 0.0
    if method in ("fn", "censor_naive", "truncate_naive"):
        done = impute_fn_univariate(x, missing, 0, imp_rng)
        imputed = done[missing]
        if method == "censor_naive":
            imputed = apply_censoring(imputed, c)
        elif method == "truncate_naive":
            mean, sd = float(obs.mean()), float(obs.std(ddof=1))
            imputed = reject_below(lambda idx: mean + sd * imp_rng.standard_normal(len(idx)),
                                   imputed, c, 1000, c, None)
    elif method in ("censor_matched", "truncate_matched"):
        target = MomentPair(float(obs.mean()), float(obs.var(ddof=1)))
        matcher = match_censored if method == "censor_matched" else match_truncated
        try:
            pre = matcher(target, c)
        except InfeasibleTarget as exc:
            status, message = "infeasible", str(exc)
        else:
            message = f"pre-bound normal mean={pre.pre_mean:.6g} sd={pre.pre_sd:.6g}"
            draws = pre.pre_mean + pre.pre_sd * imp_rng.standard_normal(int(missing.sum()))
            if method == "censor_matched":
                imputed = apply_censoring(draws, c)
            else:
                imputed = reject_below(
                    lambda idx: pre.pre_mean + pre.pre_sd * imp_rng.standard_normal(len(idx)),
                    draws, c, 1000, c, None)
    else:
        kind = "square_root" if method == "sqrt_transform" else "fourth_root"
        imputed = impute_fn_transformed(x, missing, kind, 0, imp_rng)[missing]

    completed = np.concatenate([obs, imputed]) if imputed.size else obs
    if grid is None:
        grid = np.linspace(-2.0, 6.0, 81)
    grid = np.asarray(grid, dtype=float)
    return DemoReport(
        method=method, n=n, seed=seed, status=status, message=message,
        observed=_moments(obs), imputed=_moments(imputed), completed=_moments(completed),
        grid=grid, observed_cdf=_ecdf_on(grid, obs), imputed_cdf=_ecdf_on(grid, imputed),
        true_cdf=np.where(grid > 0, -np.expm1(-np.maximum(grid, 0.0)), 0.0),
    )
