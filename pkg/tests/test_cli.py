"""Command line: artifact layout, schemas, exit codes, reproducibility."""

import json
import math
import os

import numpy as np
import pytest

from clonal_evolve import cli, model


def run_cli(*argv):
    return cli.parse_and_dispatch(list(argv))


def read_csv_header(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.readline().strip()


COARSE = ("--n-age", "31", "--n-len", "21")


# ---------------------------------------------------------------------------
# example subcommand, artifact layout
# ---------------------------------------------------------------------------

def test_example_run_writes_expected_files(tmp_path):
    out = tmp_path / "run1"
    assert run_cli("example", "--id", "1", "--out", str(out), *COARSE) == 0
    names = sorted(os.listdir(out))
    assert "totals.csv" in names
    assert "spectrum.json" in names
    assert "bound_curves.csv" in names
    assert "manifest.json" in names
    snaps = [n for n in names if n.startswith("snapshot_")]
    assert len(snaps) == 15  # cadence 1 over horizon 14, endpoints included
    header = read_csv_header(out / "totals.csv")
    assert header == "time,total,band_0,band_1,band_2,band_3,band_4"


def test_totals_csv_contents(tmp_path):
    out = tmp_path / "run"
    run_cli("example", "--id", "1", "--out", str(out), *COARSE)
    data = np.genfromtxt(out / "totals.csv", delimiter=",", names=True)
    assert data["time"][0] == 0.0
    assert data["time"][-1] == pytest.approx(14.0)
    # bands partition the domain, so they sum to the total
    band_sum = sum(data[f"band_{k}"] for k in range(5))
    np.testing.assert_allclose(band_sum, data["total"], rtol=1e-8)


def test_snapshot_csv_schema(tmp_path):
    out = tmp_path / "run"
    run_cli("example", "--id", "1", "--out", str(out), *COARSE)
    with open(out / "snapshot_0.csv", "r", encoding="utf-8") as fh:
        head = fh.readline().split(",")
        first = fh.readline().split(",")
    assert head[0] == "age/length"
    assert len(head) == 22  # corner label + 21 length nodes
    assert float(head[-1]) == pytest.approx(1.0)
    assert float(first[0]) == 0.0  # first age node


def test_spectrum_json_schema(tmp_path):
    out = tmp_path / "run"
    run_cli("example", "--id", "2", "--out", str(out), *COARSE)
    with open(out / "spectrum.json", "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    assert set(doc) == {"radius", "lambda_star", "bounds", "irreducible",
                        "eigenvector"}
    assert doc["radius"] > 1.0  # example 2 grows
    assert doc["lambda_star"] > 0.0
    assert len(doc["bounds"]) == 4
    assert doc["irreducible"] is True
    assert len(doc["eigenvector"]) == 21


def test_manifest_echoes_configuration(tmp_path):
    out = tmp_path / "run"
    run_cli("example", "--id", "3", "--out", str(out), *COARSE)
    with open(out / "manifest.json", "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    assert doc["subcommand"] == "example"
    assert doc["scenario"]["grid"] == {"n_age": 31, "n_len": 21,
                                       "a_max": 6.0, "l_max": 1.0}
    assert doc["scenario"]["crowding"] == {"kind": "linear", "gamma": 1e-5}
    assert doc["threads"] == 0
    assert doc["wall_time_s"] >= 0.0


# ---------------------------------------------------------------------------
# reproducibility and overwrite protection
# ---------------------------------------------------------------------------

def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("example", "--id", "1", "--out", str(a), *COARSE)
    run_cli("example", "--id", "1", "--out", str(b), *COARSE)
    for name in sorted(os.listdir(a)):
        if name == "manifest.json":
            continue  # carries wall time
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_overwrite_protection(tmp_path):
    out = tmp_path / "run"
    assert run_cli("example", "--id", "1", "--out", str(out), *COARSE) == 0
    assert run_cli("example", "--id", "1", "--out", str(out), *COARSE) == 1
    assert run_cli("example", "--id", "1", "--out", str(out), "--overwrite",
                   *COARSE) == 0


# ---------------------------------------------------------------------------
# simulate / spectrum / steady with scenario files
# ---------------------------------------------------------------------------

def scenario_file(tmp_path, scenario, name="scen.json"):
    path = tmp_path / name
    path.write_text(model.scenario_to_json(scenario), encoding="utf-8")
    return str(path)


def test_simulate_from_file(tmp_path):
    g = model.Grid(31, 21, 6.0, 1.0)
    s = model.example_scenario(2, g)
    path = scenario_file(tmp_path, s)
    out = tmp_path / "run"
    assert run_cli("simulate", "--scenario", path, "--out", str(out)) == 0
    assert (out / "totals.csv").exists()


def test_missing_scenario_file(tmp_path):
    assert run_cli("simulate", "--scenario", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "run")) == 1


def test_malformed_scenario_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{oops", encoding="utf-8")
    assert run_cli("simulate", "--scenario", str(path),
                   "--out", str(tmp_path / "run")) == 1
    path.write_text(json.dumps({"grid": {"n_age": 5}}), encoding="utf-8")
    assert run_cli("simulate", "--scenario", str(path),
                   "--out", str(tmp_path / "run2")) == 1


def test_steady_subcommand(tmp_path):
    out = tmp_path / "run"
    assert run_cli("steady", "--id", "3", "--out", str(out), *COARSE) == 0
    with open(out / "steady.json", "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    assert doc["classification"] == "positive-equilibrium"
    assert doc["P_star"] == pytest.approx(doc["lambda_star"] / 1e-5)
    assert (out / "profile.csv").exists()


def test_steady_without_crowding_is_validation_error(tmp_path):
    # example 1 has no crowding law, so the steady report cannot be built
    assert run_cli("steady", "--id", "1",
                   "--out", str(tmp_path / "run"), *COARSE) == 1


def test_spectrum_no_characteristic_root_exit_code(tmp_path):
    # zero kernel: radius is 0 for every shift. spectrum still reports, with
    # a null growth rate rather than a failure
    g = model.Grid(11, 11, 6.0, 1.0)
    s = model.Scenario(
        grid=g,
        coefficients=model.CoefficientField.constant(g, 1.0, 0.1),
        kernel=model.DivisionKernel(g, np.zeros((11, 11))),
        initial=model.build_initial_density(g),
        horizon=1.0, cadence=1.0)
    path = scenario_file(tmp_path, s)
    out = tmp_path / "run"
    assert run_cli("spectrum", "--scenario", path, "--out", str(out)) == 0
    with open(out / "spectrum.json", "r", encoding="utf-8") as fh:
        assert json.load(fh)["lambda_star"] is None


# ---------------------------------------------------------------------------
# bounds subcommand
# ---------------------------------------------------------------------------

def make_shifted_scenario(tmp_path):
    g = model.Grid(31, 41, 6.0, 1.0)
    l = g.lengths
    r = np.exp(-0.5 * ((l[:, None] - (l[None, :] - 0.3)) / 0.03) ** 2)
    r /= 0.03 * math.sqrt(2.0 * math.pi)
    r[l[:, None] > l[None, :] - 0.2 - 1e-12] = 0.0
    s = model.Scenario(
        grid=g,
        coefficients=model.CoefficientField.constant(g, 1.5, 0.4),
        kernel=model.DivisionKernel(g, r),
        initial=model.build_initial_density(g),
        horizon=4.0, cadence=4.0)
    return scenario_file(tmp_path, s)


def test_bounds_subcommand_writes_check_csv(tmp_path):
    path = make_shifted_scenario(tmp_path)
    out = tmp_path / "run"
    assert run_cli("bounds", "--scenario", path, "--out", str(out),
                   "--delta", "0.2", "--classes", "3") == 0
    header = read_csv_header(out / "bound_check.csv")
    assert header == "time,band,simulated,bound,ratio"
    data = np.genfromtxt(out / "bound_check.csv", delimiter=",", names=True)
    assert np.all(data["ratio"] <= 1.0 + 1e-6)
    with open(out / "manifest.json", "r", encoding="utf-8") as fh:
        assert json.load(fh)["passed"] is True


def test_bounds_refusal_maps_to_exit_2(tmp_path):
    # example 2 restores telomeres: the hypothesis check must refuse
    out = tmp_path / "run"
    assert run_cli("bounds", "--id", "2", "--out", str(out), *COARSE,
                   "--delta", "0.1", "--classes", "3") == 2


# ---------------------------------------------------------------------------
# flags, env, usage
# ---------------------------------------------------------------------------

def test_help_exits_zero(capsys):
    assert run_cli("--help") == 0
    assert "clonal-evolve" in capsys.readouterr().out


def test_unknown_flag_exits_one():
    assert run_cli("simulate", "--id", "1", "--out", "x", "--frobnicate") == 1


def test_missing_subcommand_exits_one():
    assert run_cli() == 1


def test_invalid_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CLONAL_EVOLVE_THREADS", "many")
    assert run_cli("example", "--id", "1",
                   "--out", str(tmp_path / "run"), *COARSE) == 1
    monkeypatch.setenv("CLONAL_EVOLVE_THREADS", "-2")
    assert run_cli("example", "--id", "1",
                   "--out", str(tmp_path / "run"), *COARSE) == 1


def test_thread_env_recorded(tmp_path, monkeypatch):
    monkeypatch.setenv("CLONAL_EVOLVE_THREADS", "4")
    out = tmp_path / "run"
    assert run_cli("spectrum", "--id", "1", "--out", str(out), *COARSE) == 0
    with open(out / "manifest.json", "r", encoding="utf-8") as fh:
        assert json.load(fh)["threads"] == 4


def test_cadence_override(tmp_path):
    out = tmp_path / "run"
    run_cli("simulate", "--id", "1", "--out", str(out), *COARSE,
            "--cadence", "7")
    snaps = sorted(n for n in os.listdir(out) if n.startswith("snapshot_"))
    assert snaps == ["snapshot_0.csv", "snapshot_14.csv", "snapshot_7.csv"]
