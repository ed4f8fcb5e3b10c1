"""Rendering tests, including the end-to-end run-directory acceptance.

The run directories are produced by invoking the simulator's own command
line (the renderer's single source of numerical truth); a coarse grid keeps
them fast.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from ce_figures import artifacts, figures
from ce_figures.cli import main as cli_main


COARSE = ["--n-age", "61", "--n-len", "41"]


@pytest.fixture(scope="module")
def run_dirs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    dirs = {}
    for which in (1, 2, 3):
        out = base / f"example{which}"
        cmd = [sys.executable, "-m", "clonal_evolve.cli", "example",
               "--id", str(which), "--out", str(out)] + COARSE
        res = subprocess.run(cmd, capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        dirs[which] = str(out)
    return dirs


# ---------------------------------------------------------------------------
# artifact readers
# ---------------------------------------------------------------------------

def test_load_totals(run_dirs):
    t = artifacts.load_totals(run_dirs[1])
    assert t.times[0] == 0.0 and t.times[-1] == pytest.approx(14.0)
    assert t.bands.shape[0] == 5
    np.testing.assert_allclose(t.bands.sum(axis=0), t.total, rtol=1e-8)


def test_load_snapshot(run_dirs):
    snaps = artifacts.list_snapshots(run_dirs[2])
    snap = artifacts.load_snapshot(snaps[0.0])
    assert snap.density.shape == (61, 41)
    assert snap.ages[-1] == pytest.approx(6.0)
    assert snap.lengths[-1] == pytest.approx(1.0)


def test_missing_file_diagnostic(tmp_path):
    with pytest.raises(artifacts.SchemaError, match="totals.csv"):
        artifacts.load_totals(str(tmp_path))


def test_missing_column_diagnostic(tmp_path):
    bad = tmp_path / "totals.csv"
    bad.write_text("time,band_0\n0,1\n1,2\n", encoding="utf-8")
    with pytest.raises(artifacts.SchemaError, match="'total'"):
        artifacts.load_totals(str(tmp_path))


def test_nan_diagnostic(tmp_path):
    bad = tmp_path / "totals.csv"
    bad.write_text("time,total,band_0\n0,nan,1\n1,2,2\n", encoding="utf-8")
    with pytest.raises(artifacts.SchemaError, match="'total'"):
        artifacts.load_totals(str(tmp_path))


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def test_render_all_figures_for_all_examples(run_dirs, tmp_path):
    # the acceptance pass: every figure id renders from the matching run
    for which, fids in ((1, [3, 4, 5]), (2, [8, 9]), (3, [10, 11])):
        out = tmp_path / f"img{which}"
        paths = figures.render_many(fids, run_dirs[which], str(out))
        for path in paths:
            assert os.path.getsize(path) > 0


def test_render_svg(run_dirs, tmp_path):
    (path,) = figures.render_many([5], run_dirs[1], str(tmp_path), "svg")
    assert path.endswith(".svg")
    assert b"<svg" in open(path, "rb").read(500)


def test_band_count_mismatch_is_schema_error(run_dirs, tmp_path):
    # figure 9 wants quarter bands; example 1 has quintiles
    with pytest.raises(artifacts.SchemaError, match="band"):
        figures.render_many([9], run_dirs[1], str(tmp_path))


def test_unknown_figure_id(run_dirs, tmp_path):
    with pytest.raises(artifacts.SchemaError, match="unknown figure id"):
        figures.render_many([7], run_dirs[1], str(tmp_path))


def test_deterministic_output(run_dirs, tmp_path):
    a = figures.render_many([5], run_dirs[1], str(tmp_path / "a"))[0]
    b = figures.render_many([5], run_dirs[1], str(tmp_path / "b"))[0]
    assert open(a, "rb").read() == open(b, "rb").read()


# ---------------------------------------------------------------------------
# caption orderings (the behavioral acceptance)
# ---------------------------------------------------------------------------

def test_example1_band_curves_all_decay(run_dirs):
    t = artifacts.load_totals(run_dirs[1])
    late = t.times > 3.0
    for k in range(t.bands.shape[0]):
        series = t.bands[k][late]
        # every band collapses toward zero (a small transient bump in the
        # second quintile is tolerated; the trend must be firmly downward)
        assert series[-1] < 1e-3 * series.max()
        slope = np.polyfit(t.times[late], np.log(np.maximum(series, 1e-300)),
                           1)[0]
        assert slope < -0.1


def test_example2_band_curves_all_grow(run_dirs):
    t = artifacts.load_totals(run_dirs[2])
    late = t.times >= 10.0
    for k in range(t.bands.shape[0]):
        series = t.bands[k][late]
        # exponential growth: log-slope clearly positive
        slope = np.polyfit(t.times[late], np.log(series), 1)[0]
        assert slope > 0.05


def test_example3_band_curves_flatten(run_dirs):
    t = artifacts.load_totals(run_dirs[3])
    for k in range(t.bands.shape[0]):
        series = t.bands[k]
        early = series[(t.times >= 10.0) & (t.times <= 20.0)]
        late = series[t.times >= 40.0]
        early_swing = (early.max() - early.min()) / late.mean()
        late_swing = (late.max() - late.min()) / late.mean()
        assert late_swing < 0.02
        assert late_swing < early_swing


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def test_cli_renders_requested_figures(run_dirs, tmp_path, capsys):
    out = tmp_path / "img"
    status = cli_main([run_dirs[2], "--figures", "8,9", "--format", "png",
                       "--out", str(out)])
    assert status == 0
    printed = capsys.readouterr().out.strip().splitlines()
    assert len(printed) == 2
    assert all(os.path.exists(p) for p in printed)


def test_cli_bad_run_dir(tmp_path, capsys):
    assert cli_main([str(tmp_path / "nope")]) == 1
    assert "not a directory" in capsys.readouterr().err


def test_cli_schema_error_exit(run_dirs, tmp_path, capsys):
    # quarter-band figure against the quintile run: nonzero with diagnostic
    assert cli_main([run_dirs[1], "--figures", "9",
                     "--out", str(tmp_path)]) == 1
    assert "band" in capsys.readouterr().err
