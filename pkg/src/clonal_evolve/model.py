"""Grids, coefficient fields, division kernels, crowding laws and scenarios.

Everything here is a pure value object: constructors validate their inputs,
enforce the structural invariants (nonnegativity, declared normalization of
the division kernel) and are immutable afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation

__all__ = [
    "Grid",
    "CoefficientField",
    "DivisionKernel",
    "CrowdingLaw",
    "DensityField",
    "Scenario",
    "trapezoid_weights",
    "build_initial_density",
    "initial_density_formula",
    "beta_formula",
    "build_beta",
    "build_gaussian_kernel",
    "example_scenario",
    "example_scenario_dict",
    "scenario_from_dict",
    "scenario_to_dict",
    "scenario_from_json",
    "scenario_to_json",
    "EXAMPLE_HORIZONS",
    "QUINTILE_BANDS",
    "QUARTER_BANDS",
]


def trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    """Trapezoid quadrature weights on n uniformly spaced nodes."""
    w = np.full(n, spacing)
    w[0] = w[-1] = 0.5 * spacing
    return w


@dataclass(frozen=True)
class Grid:
    """Uniform age x telomere-length grid.

    The time step is locked to the age step (dt = da), so transport along
    characteristics is an exact one-node shift.  Nodes include both endpoints
    in each direction.
    """

    n_age: int
    n_len: int
    a_max: float
    l_max: float

    def __post_init__(self):
        if self.n_age < 3 or self.n_len < 3:
            raise ConfigurationError("grid needs at least 3 nodes per axis")
        if self.a_max <= 0 or self.l_max <= 0:
            raise ConfigurationError("grid extents must be positive")

    @property
    def da(self) -> float:
        return self.a_max / (self.n_age - 1)

    @property
    def dl(self) -> float:
        return self.l_max / (self.n_len - 1)

    @property
    def dt(self) -> float:
        return self.da

    @cached_property
    def ages(self) -> np.ndarray:
        return np.linspace(0.0, self.a_max, self.n_age)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.linspace(0.0, self.l_max, self.n_len)

    @cached_property
    def age_weights(self) -> np.ndarray:
        return trapezoid_weights(self.n_age, self.da)

    @cached_property
    def len_weights(self) -> np.ndarray:
        return trapezoid_weights(self.n_len, self.dl)


def _as_field_array(grid: Grid, values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape == ():
        arr = np.full((grid.n_age, grid.n_len), float(arr))
    if arr.shape != (grid.n_age, grid.n_len):
        raise ConfigurationError(
            f"{name} must have shape (n_age, n_len) = "
            f"({grid.n_age}, {grid.n_len}), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ConfigurationError(f"{name} must be nonnegative everywhere")
    return arr


@dataclass(frozen=True)
class CoefficientField:
    """Sampled division modulus beta(a, l) and mortality mu(a, l)."""

    grid: Grid
    beta: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        beta = _as_field_array(self.grid, self.beta, "beta").copy()
        mu = _as_field_array(self.grid, self.mu, "mu").copy()
        beta.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def constant(cls, grid: Grid, beta0: float, mu0: float) -> "CoefficientField":
        return cls(grid, np.full((grid.n_age, grid.n_len), float(beta0)),
                   np.full((grid.n_age, grid.n_len), float(mu0)))


@dataclass(frozen=True)
class DivisionKernel:
    """Sampled daughter-length distribution r(l, l_hat).

    Entry (i, j) is the density of daughters of length l_i from a mother of
    length l_hat_j.  ``weights`` are the trapezoid weights used for every
    telomere integral.  When ``normalized`` is set the double integral
    sum_i sum_j w_i w_j r[i, j] must be within ``norm_tol`` of 1.
    """

    grid: Grid
    r: np.ndarray
    normalized: bool = False
    norm_tol: float = 0.05

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        n = self.grid.n_len
        if r.shape != (n, n):
            raise ConfigurationError(
                f"kernel must have shape ({n}, {n}), got {r.shape}"
            )
        if not np.all(np.isfinite(r)):
            raise ConfigurationError("kernel contains non-finite entries")
        if np.any(r < 0):
            raise ConfigurationError("kernel must be nonnegative")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        if self.normalized:
            mass = self.double_mass()
            if abs(mass - 1.0) > self.norm_tol:
                raise ConfigurationError(
                    f"kernel declared normalized but double integral is {mass:.6g}"
                )

    @property
    def weights(self) -> np.ndarray:
        return self.grid.len_weights

    def double_mass(self) -> float:
        """Trapezoid approximation of the double integral of r."""
        w = self.weights
        return float(w @ self.r @ w)

    def daughter_mass(self) -> np.ndarray:
        """Per-mother daughter mass: integral of r(l, l_hat) over l."""
        return self.weights @ self.r


@dataclass(frozen=True)
class CrowdingLaw:
    """Density-dependent extra mortality F(P) with derivative F'(P).

    ``monotonicity`` is one of 'increasing', 'decreasing', 'none'.  For the
    linear law F(P) = gamma * P the coefficient is kept in ``gamma``.
    Nonnegativity and the declared monotonicity are spot-checked on sample
    points at construction.
    """

    evaluate: Callable[[float], float]
    derivative: Callable[[float], float]
    monotonicity: str = "none"
    gamma: Optional[float] = None

    _SAMPLES = (0.0, 1.0, 10.0, 1e3, 1e6)

    def __post_init__(self):
        if self.monotonicity not in ("increasing", "decreasing", "none"):
            raise ConfigurationError(f"unknown monotonicity {self.monotonicity!r}")
        vals = [self.evaluate(p) for p in self._SAMPLES]
        if any(v < 0 for v in vals):
            raise ConfigurationError("crowding law must be nonnegative for P >= 0")
        pairs = zip(vals, vals[1:])
        if self.monotonicity == "increasing" and any(b < a for a, b in pairs):
            raise ConfigurationError("crowding law is not increasing on samples")
        if self.monotonicity == "decreasing" and any(b > a for a, b in pairs):
            raise ConfigurationError("crowding law is not decreasing on samples")

    @classmethod
    def linear(cls, gamma: float) -> "CrowdingLaw":
        if gamma < 0:
            raise ConfigurationError("linear crowding coefficient must be >= 0")
        return cls(
            evaluate=lambda p: gamma * p,
            derivative=lambda p: gamma,
            monotonicity="increasing",
            gamma=gamma,
        )

    @classmethod
    def constant(cls, level: float) -> "CrowdingLaw":
        if level < 0:
            raise ConfigurationError("constant crowding level must be >= 0")
        return cls(
            evaluate=lambda p: level,
            derivative=lambda p: 0.0,
            monotonicity="none",
            gamma=None,
        )


@dataclass(frozen=True)
class DensityField:
    """Population density p(a, l) on a grid at one instant."""

    grid: Grid
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.grid.n_age, self.grid.n_len):
            raise ConfigurationError(
                f"density must have shape ({self.grid.n_age}, {self.grid.n_len}),"
                f" got {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise ContractViolation("density contains non-finite entries")
        if np.any(p < 0):
            raise ContractViolation("density must be nonnegative")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def total(self) -> float:
        """Total population: trapezoid double integral of the density."""
        g = self.grid
        return float(g.age_weights @ self.p @ g.len_weights)


def _validate_bands(bands, l_max: float):
    out = []
    for band in bands:
        lo, hi = float(band[0]), float(band[1])
        if not (0.0 <= lo < hi <= l_max + 1e-12):
            raise ConfigurationError(f"band [{lo}, {hi}] outside [0, {l_max}]")
        out.append((lo, min(hi, l_max)))
    return tuple(out)


@dataclass(frozen=True)
class Scenario:
    """Full problem definition for one simulation run."""

    grid: Grid
    coefficients: CoefficientField
    kernel: DivisionKernel
    initial: DensityField
    horizon: float
    cadence: float
    crowding: Optional[CrowdingLaw] = None
    bands: Sequence[tuple] = ()

    def __post_init__(self):
        for part, name in ((self.coefficients, "coefficients"),
                           (self.kernel, "kernel"),
                           (self.initial, "initial density")):
            if part.grid != self.grid:
                raise ConfigurationError(f"{name} grid does not match scenario grid")
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")
        if self.cadence <= 0:
            raise ConfigurationError("cadence must be positive")
        object.__setattr__(self, "bands", _validate_bands(self.bands, self.grid.l_max))

    @property
    def is_linear(self) -> bool:
        return self.crowding is None


# ---------------------------------------------------------------------------
# Builders for the worked examples
# ---------------------------------------------------------------------------

EXAMPLE_HORIZONS = {1: 14.0, 2: 20.0, 3: 50.0}

# Band partitions used in the example time plots: quintiles for example 1,
# quarters for examples 2 and 3.
QUINTILE_BANDS = tuple((0.2 * k, 0.2 * (k + 1)) for k in range(5))
QUARTER_BANDS = tuple((0.25 * k, 0.25 * (k + 1)) for k in range(4))


def initial_density_formula(a, l):
    """Initial condition 1000 * l * max(a(1-a), 0)."""
    return 1000.0 * l * np.maximum(a * (1.0 - a), 0.0)


def build_initial_density(grid: Grid) -> DensityField:
    """Sample the examples' initial population density on the grid."""
    a = grid.ages[:, None]
    l = grid.lengths[None, :]
    return DensityField(grid, initial_density_formula(a, l))


def beta_formula(a, l, beta0):
    """Division modulus used in all three examples.

    Age factor beta0*(a-1)*exp(-6(a-1)) for a >= 1 (zero before), times a
    smooth arctan step in l that drops sharply below the critical length 0.5
    while staying strictly positive.
    """
    a = np.asarray(a, dtype=float)
    l = np.asarray(l, dtype=float)
    age = np.where(a >= 1.0,
                   np.maximum(beta0 * (a - 1.0) * np.exp(-6.0 * (a - 1.0)), 0.0),
                   0.0)
    step = (np.arctan(100.0 * (l - 0.5)) + np.pi / 2.0) / np.pi
    return age * step


def build_beta(grid: Grid, beta0: float, return_clipped: bool = False):
    """Sample the examples' beta on the grid, zeroing the last age row.

    With ``return_clipped`` the largest formula value removed at a = a_max is
    returned alongside the samples (it is ~beta0*exp(-30) for a_max = 6).
    """
    if beta0 <= 0:
        raise ConfigurationError("beta0 must be positive")
    vals = beta_formula(grid.ages[:, None], grid.lengths[None, :], beta0)
    clipped = float(vals[-1].max())
    vals[-1, :] = 0.0
    if return_clipped:
        return vals, clipped
    return vals


def build_gaussian_kernel(grid: Grid,
                          mean_fn: Callable[[np.ndarray], np.ndarray],
                          sd: float,
                          divisor: float,
                          renormalize_rows: bool = False,
                          normalized: bool = False,
                          norm_tol: float = 0.05) -> DivisionKernel:
    """Daughter-length kernel: Gaussian in l with mother-dependent mean.

    Entry (i, j) is the Gaussian density at l_i with mean mean_fn(l_hat_j)
    and the given sd, divided by ``divisor``.  Mass outside [0, l_max] is
    simply lost (nodes all lie inside).  With ``renormalize_rows`` each
    mother column is rescaled so its l-integral is exactly 1.
    """
    if sd <= 0:
        raise ConfigurationError("sd must be positive")
    if divisor <= 0:
        raise ConfigurationError("divisor must be positive")
    l = grid.lengths[:, None]
    means = np.asarray(mean_fn(grid.lengths))[None, :]
    z = (l - means) / sd
    r = np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi)) / divisor
    if renormalize_rows:
        mass = grid.len_weights @ r
        safe = np.where(mass > 0, mass, 1.0)
        r = r / safe[None, :]
    return DivisionKernel(grid, r, normalized=normalized, norm_tol=norm_tol)


def _example_params(which: int) -> dict:
    if which == 1:
        return dict(beta0=13.0, mu0=0.05,
                    kernel=dict(kind="gaussian", mean="shift", shift=0.2,
                                sd=0.05, divisor=0.8),
                    crowding=dict(kind="none"),
                    bands=QUINTILE_BANDS)
    if which in (2, 3):
        params = dict(beta0=180.0, mu0=0.3,
                      kernel=dict(kind="gaussian", mean="affine", slope=2.0,
                                  intercept=-0.8, sd=0.05, divisor=0.5),
                      crowding=dict(kind="none"),
                      bands=QUARTER_BANDS)
        if which == 3:
            params["crowding"] = dict(kind="linear", gamma=1e-5)
        return params
    raise ConfigurationError(f"unknown example id {which}; expected 1, 2 or 3")


def example_scenario_dict(which: int, grid: Grid, cadence: float = 1.0) -> dict:
    """Configuration document for one of the three worked examples."""
    params = _example_params(which)
    return {
        "grid": {"n_age": grid.n_age, "n_len": grid.n_len,
                 "a_max": grid.a_max, "l_max": grid.l_max},
        "beta": {"kind": "example", "beta0": params["beta0"]},
        "mu": {"kind": "constant", "value": params["mu0"]},
        "kernel": params["kernel"],
        "crowding": params["crowding"],
        "horizon": EXAMPLE_HORIZONS[which],
        "cadence": cadence,
        "bands": [list(b) for b in params["bands"]],
    }


def example_scenario(which: int, grid: Grid, cadence: float = 1.0) -> Scenario:
    """Assemble one of the three worked example scenarios on the given grid."""
    if not (math.isclose(grid.a_max, 6.0) and math.isclose(grid.l_max, 1.0)):
        raise ConfigurationError(
            "example scenarios require a_max = 6 and l_max = 1, got "
            f"a_max={grid.a_max}, l_max={grid.l_max}"
        )
    return scenario_from_dict(example_scenario_dict(which, grid, cadence))


# ---------------------------------------------------------------------------
# Scenario (de)serialization
# ---------------------------------------------------------------------------

def _coefficient_from_spec(grid: Grid, spec: dict, name: str) -> np.ndarray:
    kind = spec.get("kind")
    if kind == "example":
        if name != "beta":
            raise ConfigurationError("'example' kind is only valid for beta")
        return build_beta(grid, float(spec["beta0"]))
    if kind == "constant":
        return np.full((grid.n_age, grid.n_len), float(spec["value"]))
    if kind == "table":
        arr = np.asarray(spec["values"], dtype=float)
        return arr.reshape(grid.n_age, grid.n_len)
    raise ConfigurationError(f"unknown {name} kind {kind!r}")


def _kernel_from_spec(grid: Grid, spec: dict) -> DivisionKernel:
    kind = spec.get("kind")
    if kind == "gaussian":
        mean = spec.get("mean")
        if mean == "shift":
            shift = float(spec["shift"])
            mean_fn = lambda lh: lh - shift
        elif mean == "affine":
            slope = float(spec["slope"])
            intercept = float(spec["intercept"])
            mean_fn = lambda lh: intercept + slope * lh
        else:
            raise ConfigurationError(f"unknown gaussian mean kind {mean!r}")
        return build_gaussian_kernel(
            grid, mean_fn, float(spec["sd"]), float(spec["divisor"]),
            renormalize_rows=bool(spec.get("renormalize_rows", False)),
            normalized=bool(spec.get("normalized", False)),
            norm_tol=float(spec.get("norm_tol", 0.05)),
        )
    if kind == "table":
        arr = np.asarray(spec["values"], dtype=float).reshape(grid.n_len,
                                                              grid.n_len)
        return DivisionKernel(grid, arr,
                              normalized=bool(spec.get("normalized", False)),
                              norm_tol=float(spec.get("norm_tol", 0.05)))
    raise ConfigurationError(f"unknown kernel kind {kind!r}")


def _crowding_from_spec(spec: Optional[dict]) -> Optional[CrowdingLaw]:
    if spec is None:
        return None
    kind = spec.get("kind", "none")
    if kind == "none":
        return None
    if kind == "linear":
        return CrowdingLaw.linear(float(spec["gamma"]))
    raise ConfigurationError(f"unknown crowding kind {kind!r}")


def scenario_from_dict(doc: dict) -> Scenario:
    """Materialize a Scenario from its configuration document."""
    try:
        g = doc["grid"]
        grid = Grid(int(g["n_age"]), int(g["n_len"]),
                    float(g["a_max"]), float(g["l_max"]))
        beta = _coefficient_from_spec(grid, doc["beta"], "beta")
        mu = _coefficient_from_spec(grid, doc["mu"], "mu")
        coefficients = CoefficientField(grid, beta, mu)
        kernel = _kernel_from_spec(grid, doc["kernel"])
        crowding = _crowding_from_spec(doc.get("crowding"))
        initial_spec = doc.get("initial", {"kind": "example"})
        if initial_spec.get("kind") == "example":
            initial = build_initial_density(grid)
        elif initial_spec.get("kind") == "table":
            arr = np.asarray(initial_spec["values"], dtype=float)
            initial = DensityField(grid, arr.reshape(grid.n_age, grid.n_len))
        else:
            raise ConfigurationError(
                f"unknown initial kind {initial_spec.get('kind')!r}")
        return Scenario(
            grid=grid,
            coefficients=coefficients,
            kernel=kernel,
            initial=initial,
            horizon=float(doc["horizon"]),
            cadence=float(doc["cadence"]),
            crowding=crowding,
            bands=[tuple(b) for b in doc.get("bands", [])],
        )
    except KeyError as exc:
        raise ConfigurationError(f"scenario document missing field {exc}") from exc


def scenario_to_dict(scenario: Scenario) -> dict:
    """Configuration document for a Scenario (table kinds; always faithful)."""
    if scenario.crowding is None:
        crowding = {"kind": "none"}
    elif scenario.crowding.gamma is not None:
        crowding = {"kind": "linear", "gamma": scenario.crowding.gamma}
    else:
        raise ConfigurationError("only linear crowding laws are serializable")
    g = scenario.grid
    return {
        "grid": {"n_age": g.n_age, "n_len": g.n_len,
                 "a_max": g.a_max, "l_max": g.l_max},
        "beta": {"kind": "table",
                 "values": scenario.coefficients.beta.ravel().tolist()},
        "mu": {"kind": "table",
               "values": scenario.coefficients.mu.ravel().tolist()},
        "kernel": {"kind": "table",
                   "values": scenario.kernel.r.ravel().tolist(),
                   "normalized": scenario.kernel.normalized},
        "crowding": crowding,
        "initial": {"kind": "table",
                    "values": scenario.initial.p.ravel().tolist()},
        "horizon": scenario.horizon,
        "cadence": scenario.cadence,
        "bands": [list(b) for b in scenario.bands],
    }


def scenario_from_json(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed scenario document: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_to_json(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True)
