"""Command-line front end: scenario ingestion and reproducible artifacts.

Subcommands map one-to-one onto the library layers: `simulate` writes totals
and density snapshots, `spectrum` the renewal-operator report, `steady` the
equilibrium report, `bounds` the per-band decay-ceiling check, and `example`
runs one of the three built-in scenarios end to end.  All floats go through
fixed formats (10 significant digits in CSV, full round-trip in JSON) and
all reductions run in a fixed order, so identical configurations give
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import bounds as bounds_mod
from . import model, solver, spectral, steady
from .errors import (
    ConfigurationError,
    ContractViolation,
    EigenConvergenceError,
    NoCharacteristicRoot,
    NotCertifiable,
    SimulationBlowup,
)

__all__ = ["main", "parse_and_dispatch"]

_DEFAULT_N_AGE = 241
_DEFAULT_N_LEN = 101
_CSV_FMT = "%.10g"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clonal-evolve",
        description="Simulator and spectral analysis for an age- and "
                    "telomere-length-structured cell population model.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, needs_scenario=True):
        if needs_scenario:
            src = p.add_mutually_exclusive_group(required=True)
            src.add_argument("--scenario", help="path to a scenario JSON file")
            src.add_argument("--id", type=int, choices=(1, 2, 3),
                             help="built-in example id")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--n-age", type=int, default=None,
                       help="override the number of age nodes")
        p.add_argument("--n-len", type=int, default=None,
                       help="override the number of length nodes")
        p.add_argument("--cadence", type=float, default=None,
                       help="snapshot cadence in model time")
        p.add_argument("--overwrite", action="store_true",
                       help="allow replacing files in the output directory")

    add_common(sub.add_parser("simulate", help="run the time stepper"))
    add_common(sub.add_parser("spectrum", help="renewal-operator report"))
    add_common(sub.add_parser("steady", help="equilibrium report"))
    p_bounds = sub.add_parser("bounds", help="per-band decay ceiling check")
    add_common(p_bounds)
    p_bounds.add_argument("--delta", type=float, required=True,
                          help="guaranteed telomere loss per division")
    p_bounds.add_argument("--classes", type=int, default=3,
                          help="number of length bands counted from the top")
    p_example = sub.add_parser("example",
                               help="run a built-in example end to end")
    p_example.add_argument("--id", type=int, choices=(1, 2, 3), required=True)
    add_common(p_example, needs_scenario=False)
    return parser


def _thread_cap() -> int:
    raw = os.environ.get("CLONAL_EVOLVE_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigurationError(
            f"CLONAL_EVOLVE_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise ConfigurationError("CLONAL_EVOLVE_THREADS must be >= 0")
    return cap


def _resolve(args):
    """Scenario plus the configuration document echoed into the manifest."""
    if getattr(args, "scenario", None):
        try:
            with open(args.scenario, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read scenario file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"malformed scenario document: {exc}")
        if not isinstance(doc, dict) or "grid" not in doc:
            raise ConfigurationError("scenario document must be an object "
                                     "with a 'grid' field")
    else:
        grid = model.Grid(args.n_age or _DEFAULT_N_AGE,
                          args.n_len or _DEFAULT_N_LEN, 6.0, 1.0)
        doc = model.example_scenario_dict(args.id, grid)
    if args.n_age is not None:
        doc["grid"]["n_age"] = args.n_age
    if args.n_len is not None:
        doc["grid"]["n_len"] = args.n_len
    if args.cadence is not None:
        doc["cadence"] = args.cadence
    return model.scenario_from_dict(doc), doc


class _Writer:
    """Creates the output directory and guards against silent overwrites."""

    def __init__(self, out_dir: str, overwrite: bool):
        self.out_dir = out_dir
        self.overwrite = overwrite
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        target = os.path.join(self.out_dir, name)
        if os.path.exists(target) and not self.overwrite:
            raise ConfigurationError(
                f"refusing to overwrite {target} (pass --overwrite)")
        return target

    def csv(self, name: str, header: str, rows) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(_CSV_FMT % v for v in row) + "\n")

    def json(self, name: str, payload: dict) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def grid_csv(self, name: str, grid, values: np.ndarray) -> None:
        """Density grid with a length header row and an age header column."""
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("age/length," +
                     ",".join(_CSV_FMT % v for v in grid.lengths) + "\n")
            for k in range(grid.n_age):
                fh.write(_CSV_FMT % grid.ages[k] + "," +
                         ",".join(_CSV_FMT % v for v in values[k]) + "\n")


def _manifest(writer: _Writer, args, doc: dict, wall: float,
              extra: dict = None) -> None:
    payload = {
        "subcommand": args.subcommand,
        "scenario": doc,
        "threads": _thread_cap(),
        "wall_time_s": wall,
    }
    if extra:
        payload.update(extra)
    writer.json("manifest.json", payload)


def _snapshot_name(t: float) -> str:
    return "snapshot_%g.csv" % t


def _write_trace(writer: _Writer, trace: solver.SimulationTrace) -> None:
    n_bands = trace.class_totals.shape[0]
    header = "time,total" + "".join(f",band_{k}" for k in range(n_bands))
    rows = np.column_stack([trace.times, trace.totals] +
                           [trace.class_totals[k] for k in range(n_bands)])
    writer.csv("totals.csv", header, rows)
    for t, snap in zip(trace.snapshot_times, trace.snapshots):
        writer.grid_csv(_snapshot_name(t), trace.scenario.grid, snap.p)


def _run_simulate(args, writer, scenario, doc) -> None:
    start = time.perf_counter()
    trace = solver.simulate(scenario)
    wall = time.perf_counter() - start
    _write_trace(writer, trace)
    _manifest(writer, args, doc, wall)


def _spectrum_payload(scenario):
    rep = spectral.report(scenario.coefficients, scenario.kernel)
    try:
        lam = spectral.growth_rate(scenario.coefficients, scenario.kernel)
    except NoCharacteristicRoot:
        lam = None
    return rep, lam


def _write_spectrum(writer, scenario) -> None:
    rep, lam = _spectrum_payload(scenario)
    writer.json("spectrum.json", {
        "radius": rep.radius,
        "lambda_star": lam,
        "bounds": list(rep.bounds),
        "irreducible": rep.irreducible,
        "eigenvector": rep.eigenvector.tolist(),
    })
    mother, daughter = spectral.bound_curves(scenario.coefficients,
                                             scenario.kernel)
    writer.csv("bound_curves.csv", "length,mother_estimate,daughter_estimate",
               np.column_stack([scenario.grid.lengths, mother, daughter]))


def _run_spectrum(args, writer, scenario, doc) -> None:
    start = time.perf_counter()
    _write_spectrum(writer, scenario)
    _manifest(writer, args, doc, time.perf_counter() - start)


def _run_steady(args, writer, scenario, doc) -> None:
    start = time.perf_counter()
    rep = steady.find_equilibrium(scenario)
    writer.json("steady.json", {
        "lambda_star": rep.lambda_star,
        "classification": rep.classification,
        "P_star": rep.P_star,
        "c": rep.c,
        "stability_margin": rep.stability_margin,
        "extinction_stable": rep.extinction_stable,
        "instability_flag": rep.instability_flag,
    })
    if rep.profile is not None:
        writer.grid_csv("profile.csv", scenario.grid, rep.profile.p)
    _manifest(writer, args, doc, time.perf_counter() - start)


def _run_bounds(args, writer, scenario, doc) -> None:
    start = time.perf_counter()
    beta = scenario.coefficients.beta
    mu = scenario.coefficients.mu
    config = bounds_mod.ClassBoundConfig.from_ingredients(
        delta=args.delta,
        n_classes=args.classes,
        l_max=scenario.grid.l_max,
        r_max=float(scenario.kernel.r.max(initial=0.0)),
        beta_max=float(beta.max()),
        beta_min=float(beta.min()),
        mu_min=float(mu.min()),
    )
    bands = bounds_mod.top_down_bands(config)
    trace = solver.simulate(dataclasses.replace(scenario, bands=bands))
    report = bounds_mod.verify_class_bounds(trace, config)
    rows = []
    for j in range(config.n_classes):
        sim = trace.class_totals[j]
        for k, t in enumerate(trace.times):
            rows.append((t, j, sim[k], report.bounds[j, k],
                         report.ratios[j, k]))
    writer.csv("bound_check.csv", "time,band,simulated,bound,ratio", rows)
    _manifest(writer, args, doc, time.perf_counter() - start, extra={
        "delta": args.delta,
        "classes": args.classes,
        "passed": report.passed,
        "worst_ratio": report.worst_ratio,
    })


def _run_example(args, writer, scenario, doc) -> None:
    start = time.perf_counter()
    trace = solver.simulate(scenario)
    _write_trace(writer, trace)
    _write_spectrum(writer, scenario)
    _manifest(writer, args, doc, time.perf_counter() - start,
              extra={"example_id": args.id})


_RUNNERS = {
    "simulate": _run_simulate,
    "spectrum": _run_spectrum,
    "steady": _run_steady,
    "bounds": _run_bounds,
    "example": _run_example,
}


def parse_and_dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; the contract wants 1 for
        # validation failures and 0 for --help
        return 0 if exc.code == 0 else 1
    try:
        _thread_cap()
        scenario, doc = _resolve(args)
        writer = _Writer(args.out, args.overwrite)
        _RUNNERS[args.subcommand](args, writer, scenario, doc)
        return 0
    except (ConfigurationError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SimulationBlowup, NoCharacteristicRoot, NotCertifiable,
            EigenConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
