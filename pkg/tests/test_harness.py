import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewimpute.design import CellConfig
from skewimpute.harness import (
    CELL_HEADER, DEMO_METHODS, CellResult, check_invariants, emit_tables, experiment_cells,
    read_cells_csv, read_manifest, run_cell, run_cells, summarize, summarize_estimates,
    univariate_demo, write_cells_csv,
)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40), st.floats(0.1, 10))
def test_rmse_identity(values, truth):
    rec = summarize_estimates("x", truth, values)
    assert rec.rmse >= abs(rec.bias)
    assert rec.rmse ** 2 == pytest.approx(rec.bias ** 2 + rec.sd_estimate ** 2, rel=1e-9, abs=1e-12)
    assert rec.rel_bias == pytest.approx(100 * rec.bias / truth)


def test_empty_estimates_are_nan():
    rec = summarize_estimates("x", 1.0, [])
    assert rec.n_used == 0 and math.isnan(rec.bias)


def test_linear_mcar_cell_matches_known_biases():
    res = run_cell(CellConfig(2, 0.5, "mcar", "linear"), 20240601)
    assert abs(res.record("slope").rel_bias) < 6
    assert res.record("x_skew").rel_bias == pytest.approx(-50, abs=8)
    assert not check_invariants([res])


def test_control_cell_has_no_missing_data_effects():
    res = run_cell(CellConfig(4, 0.5, "none", "none", replications=50), 3)
    assert math.isnan(res.max_imputed_ratio)
    for name in ("x_mean", "slope", "intercept", "resid_sd"):
        rec = res.record(name)
        assert abs(rec.bias) < 3.5 * rec.mc_se, name


def _small_cells():
    return experiment_cells("bivariate", methods=("linear", "truncated_regression"), nus=(1, 4),
                            rho2s=(0.3,), patterns=("mcar", "tail"), replications=4)


def test_cell_is_isolated_from_its_neighbours():
    cells = _small_cells()
    full = run_cells(cells, 11)
    alone = run_cells([cells[3]], 11)[0]
    match = [r for r in full if r.config == cells[3]][0]
    assert alone.records == match.records


def test_worker_count_does_not_change_tables(tmp_path):
    cells = _small_cells()
    a = run_cells(cells, 5, workers=1)
    b = run_cells(cells[::-1], 5, workers=2)
    write_cells_csv(a, tmp_path / "a.csv")
    write_cells_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_tables_round_trip(tmp_path):
    results = run_cells(_small_cells(), 7)
    files = emit_tables(results, tmp_path, seed=7, note="test")
    assert files["cells"].read_text().splitlines()[0] == CELL_HEADER
    back = read_cells_csv(files["cells"])
    assert len(back) == len(results)
    for x, y in zip(results, back):
        assert x.config == y.config and x.failure_counts == y.failure_counts
        for r1, r2 in zip(x.records, y.records):
            for f in dataclasses.fields(r1):
                v1, v2 = getattr(r1, f.name), getattr(r2, f.name)
                assert v1 == v2 or (isinstance(v1, float) and math.isnan(v1) and math.isnan(v2))
    manifest = read_manifest(files["manifest"])
    assert manifest["seed"] == "7" and manifest["note"] == "test"
    # manifest seed reproduces the table
    again = run_cells(_small_cells(), int(manifest["seed"]))
    write_cells_csv(again, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == files["cells"].read_bytes()


def test_summarize_hierarchy():
    results = run_cells(_small_cells(), 9)
    by_method = summarize(results, ("method",))
    by_nu = summarize(results, ("method", "nu"))
    for row in by_method:
        sub = [r for r in by_nu if r["method"] == row["method"]]
        assert np.mean([r["slope_rel_bias"] for r in sub]) == pytest.approx(row["slope_rel_bias"], abs=1e-9)
    single = summarize(results[:1], ("method", "nu", "rho2", "pattern"))
    assert single[0]["slope_rel_bias"] == results[0].record("slope").rel_bias
    with pytest.raises(ValueError):
        summarize([], ("method",))
    with pytest.raises(ValueError):
        summarize(results, ("seed",))
    excluded = summarize(results, ("method",), exclude_methods=("linear", "none"))
    assert [r["method"] for r in excluded] == ["truncated_regression"]


def test_invariant_checker_flags_corruption():
    res = run_cell(CellConfig(2, 0.5, replications=5), 1)
    bad = dataclasses.replace(res.records[0], rmse=res.records[0].rmse * 1.1)
    broken = CellResult(res.config, res.seed, [bad] + res.records[1:], res.failure_counts)
    assert check_invariants([broken])


def test_experiment_cell_count():
    cells = experiment_cells("bivariate")
    assert len(cells) == 7 * 4 * 5 * 3 + 20
    assert len({c for c in cells}) == len(cells)


@pytest.mark.parametrize("method", DEMO_METHODS)
def test_demo_runs(method):
    rep = univariate_demo(method, n=20_000, seed=2)
    assert rep.observed["mean"] == pytest.approx(1.0, abs=0.05)
    assert len(rep.grid) == len(rep.imputed_cdf)
    if method == "truncate_matched":
        assert rep.status == "infeasible"
    else:
        assert rep.status == "ok"


def test_demo_reference_values():
    fn = univariate_demo("fn", n=200_000, seed=3)
    i0 = int(np.argmin(np.abs(fn.grid)))
    assert fn.imputed_cdf[i0] == pytest.approx(0.1587, abs=0.006)
    assert fn.observed_cdf[i0] == 0.0
    cen = univariate_demo("censor_naive", n=200_000, seed=3)
    assert cen.imputed["mean"] == pytest.approx(1.08, abs=0.01)
    assert cen.imputed["variance"] == pytest.approx(0.75, abs=0.015)
    matched = univariate_demo("censor_matched", n=200_000, seed=3)
    assert matched.imputed["mean"] == pytest.approx(matched.observed["mean"], abs=0.01)
