import json
import math

import numpy as np
import pytest

from sdmm.experiment import (
    CSV_COLUMNS,
    ExperimentConfig,
    SweepTable,
    emit_csv,
    emit_figure,
    emit_json,
    emit_trials_csv,
    figure_data,
    mean_error_vs_delta,
    params_for,
    read_csv,
    run_sweep,
)
from sdmm.security import calibrate

MATDOT = {"scheme": "matdot", "p": 2, "x": 2, "n_servers": "auto"}
GASP = {"scheme": "gasp", "m": 2, "n": 2, "x": 1, "n_servers": "auto"}


def small_config(**kw):
    base = dict(
        schemes=[MATDOT],
        delta_relative=[1e-3, 1e-2, 1e-1],
        dims=(8, 8, 8),
        trials=20,
        seed=7,
    )
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def table():
    return run_sweep(small_config(schemes=[MATDOT, GASP], stragglers=[0, 1], per_trial=True))


def test_single_cell_csv_is_byte_identical_across_runs(tmp_path):
    cfg = small_config(delta_relative=[1e-2], trials=3)
    emit_csv(run_sweep(cfg), tmp_path / "a.csv")
    emit_csv(run_sweep(cfg), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_thread_count_does_not_change_results(tmp_path):
    emit_csv(run_sweep(small_config(trials=6, threads=1)), tmp_path / "a.csv")
    emit_csv(run_sweep(small_config(trials=6, threads=4)), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sdmm_threads_env_is_honored(monkeypatch, tmp_path):
    monkeypatch.setenv("SDMM_THREADS", "3")
    emit_csv(run_sweep(small_config(trials=4)), tmp_path / "a.csv")
    monkeypatch.delenv("SDMM_THREADS")
    emit_csv(run_sweep(small_config(trials=4)), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_empty_table_gives_header_only_csv(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv(SweepTable([]), path)
    lines = path.read_text().splitlines()
    assert lines == [",".join(CSV_COLUMNS)]


def test_one_cell_gives_two_lines(tmp_path):
    path = tmp_path / "one.csv"
    emit_csv(run_sweep(small_config(delta_relative=[1e-2], trials=2)), path)
    assert len(path.read_text().splitlines()) == 2


def test_csv_round_trip_is_exact(table, tmp_path):
    path = tmp_path / "cells.csv"
    emit_csv(table, path)
    rows = read_csv(path)
    assert len(rows) == len(table)
    for row, cell in zip(rows, table):
        for col in CSV_COLUMNS:
            assert row[col] == getattr(cell, col), col


def test_unwritable_path_names_the_path(table, tmp_path):
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv(table, bad)
    with pytest.raises(OSError, match="missing"):
        emit_json(table, tmp_path / "missing" / "x.json")


def test_sigma2_matches_calibration_exactly(table):
    cfg = small_config()
    for cell in table:
        spec = MATDOT if cell.scheme == "matdot" else GASP
        noise, _ = calibrate(cell.delta_bits, cfg.dims, params_for(spec, cell.stragglers))
        assert cell.sigma2 == noise.sigma2


def test_auto_servers_add_straggler_count(table):
    for cell in table:
        k = 2 * cell.p_or_mn + 2 * cell.X - 1 if cell.scheme == "matdot" else None
        if k is not None:
            assert cell.N == k + cell.stragglers


def test_series_is_sorted_and_selects_cells(table):
    pts = mean_error_vs_delta(table, scheme="matdot", stragglers=0)
    assert [p.delta for p in pts] == sorted(p.delta for p in pts)
    assert len(pts) == 3
    assert all(p.stderr > 0 for p in pts)


def test_unswept_cell_raises_key_error(table):
    with pytest.raises(KeyError):
        mean_error_vs_delta(table, scheme="matdot", X=9)


def test_ambiguous_selector_is_rejected(table):
    with pytest.raises(ValueError):
        mean_error_vs_delta(table, scheme="matdot")


def test_error_non_increasing_in_delta(table):
    for scheme in ("matdot", "gasp"):
        for s in (0, 1):
            pts = mean_error_vs_delta(table, scheme=scheme, stragglers=s)
            for lo, hi in zip(pts, pts[1:]):
                assert hi.mean_err <= lo.mean_err + 2 * math.hypot(lo.stderr, hi.stderr)


def test_more_colluders_more_error():
    specs = [{**MATDOT, "x": 2}, {**MATDOT, "x": 3}]
    t = run_sweep(small_config(schemes=specs, delta_relative=[1e-2], trials=40))
    x2 = mean_error_vs_delta(t, X=2)[0].mean_err
    x3 = mean_error_vs_delta(t, X=3)[0].mean_err
    assert x3 > x2


def test_same_inputs_across_cells(table):
    # paired design: the same trial index sees the same matrices in every cell
    cells = [c for c in table if c.scheme == "matdot" and c.stragglers == 0]
    ratios = [c.mean_err * c.delta_bits for c in cells]
    # error scales with sigma2 ~ 1/delta, so error*delta is nearly constant
    assert max(ratios) / min(ratios) < 1.5


def test_json_mirror_with_per_trial_arrays(table, tmp_path):
    path = tmp_path / "cells.json"
    emit_json(table, path)
    doc = json.loads(path.read_text())
    assert "normalization" in doc["metadata"]
    assert len(doc["cells"]) == len(table)
    first = doc["cells"][0]
    for col in CSV_COLUMNS:
        assert first[col] == getattr(table.cells[0], col)
    assert len(first["trial_abs_error"]) == table.cells[0].trials
    emit_json(table, path, per_trial=False)
    assert "trial_abs_error" not in json.loads(path.read_text())["cells"][0]


def test_trials_csv_has_one_row_per_trial(table, tmp_path):
    path = tmp_path / "trials.csv"
    emit_trials_csv(table, path)
    n = sum(c.trials for c in table)
    assert len(path.read_text().splitlines()) == n + 1


def test_figures(table, tmp_path):
    emit_csv(table, tmp_path / "cells.csv")
    rows = read_csv(tmp_path / "cells.csv")
    fig1 = figure_data(rows, 1)
    assert len(fig1) == 2
    fig2 = figure_data(rows, 2)
    assert len(fig2) == 4
    csv_path, gp_path = emit_figure(rows, 2, tmp_path)
    text = open(gp_path).read()
    assert "set logscale xy" in text and "figure2.csv" in text
    assert len(open(csv_path).read().splitlines()) == 1 + len(rows)
    with pytest.raises(ValueError):
        figure_data(rows, 3)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(delta_relative=[])
    with pytest.raises(ValueError):
        small_config(delta_relative=[0.0])
    with pytest.raises(ValueError):
        small_config(input_kind="quaternion")
    with pytest.raises(ValueError):
        small_config(schemes=[{"scheme": "matdot", "p": 3, "x": 1, "n_servers": 5}])
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"schemes": [MATDOT], "delta_relative": [1], "bogus": 1})


def test_delta_grid_expands_log_spaced():
    cfg = ExperimentConfig.from_dict(
        {"schemes": [MATDOT], "delta_grid": {"start": 1e-4, "stop": 1e-1, "num": 4}, "dims": [8, 8, 8]}
    )
    np.testing.assert_allclose(cfg.delta_relative, [1e-4, 1e-3, 1e-2, 1e-1])


def test_complex_inputs_run():
    t = run_sweep(small_config(input_kind="complex", delta_relative=[1e-2], trials=3))
    assert t.metadata["input_kind"] == "complex"
    assert t.cells[0].mean_err > 0
