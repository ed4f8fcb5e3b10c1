"""Time stepping for the linear and crowding-regulated population models.

The scheme follows the characteristics exactly: with dt = da every step is a
one-node shift in age, a decay factor accumulated by trapezoid along the
characteristic segment, and a renewal inflow at age zero.  The renewal row is
evaluated against the post-transport density (with a fixed-point correction
for any self-coupling through beta at age 0) and is not decayed, which makes
the stepper exactly consistent with the trapezoid-discretized eigenproblem in
`spectral`: the discrete steady profile is a fixed point to solver precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation, SimulationBlowup
from .model import (
    CoefficientField,
    CrowdingLaw,
    DensityField,
    DivisionKernel,
    Grid,
    Scenario,
)

__all__ = [
    "SimulationTrace",
    "renewal_boundary",
    "step",
    "simulate",
    "nilpotency_check",
    "explicit_crowding_oracle",
    "band_weights",
    "class_population",
    "Stepper",
]

_BLOWUP_LIMIT = 1e250


@dataclass(frozen=True)
class SimulationTrace:
    """Totals at every step, band totals, and density snapshots at cadence."""

    scenario: Scenario
    times: np.ndarray
    totals: np.ndarray
    class_totals: np.ndarray  # (n_bands, n_times)
    snapshot_times: np.ndarray
    snapshots: Sequence[DensityField]

    @property
    def bands(self):
        return self.scenario.bands

    def band_series(self, band) -> np.ndarray:
        """Time series for one configured band (matched within 1e-12)."""
        for k, b in enumerate(self.scenario.bands):
            if abs(b[0] - band[0]) < 1e-12 and abs(b[1] - band[1]) < 1e-12:
                return self.class_totals[k]
        raise KeyError(f"band {band} is not configured in this trace")


def _boundary_from_array(p: np.ndarray, coefficients: CoefficientField,
                         kernel: DivisionKernel) -> np.ndarray:
    grid = coefficients.grid
    inner = grid.age_weights @ (coefficients.beta * p)
    return 2.0 * (kernel.r @ (kernel.weights * inner))


def renewal_boundary(density: DensityField, coefficients: CoefficientField,
                     kernel: DivisionKernel) -> np.ndarray:
    """Newborn density: 2 * integral r(l, l_hat) integral beta p da dl_hat."""
    if density.grid != coefficients.grid or kernel.grid != coefficients.grid:
        raise ConfigurationError("density, coefficients and kernel grids differ")
    return _boundary_from_array(density.p, coefficients, kernel)


class Stepper:
    """Precomputed single-step update for one scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        grid = scenario.grid
        loss = scenario.coefficients.beta + scenario.coefficients.mu
        # trapezoid average of beta+mu along each characteristic segment
        seg = 0.5 * (loss[:-1] + loss[1:])
        self._interior_decay = np.exp(-seg * grid.dt)
        beta = scenario.coefficients.beta
        w_len = scenario.kernel.weights
        self._inner_w = grid.age_weights[1:, None] * beta[1:]
        # self-coupling of the renewal row through beta at age 0
        self._row0_coef = w_len * grid.age_weights[0] * beta[0]
        self._has_row0_coupling = bool(np.any(self._row0_coef > 0))
        self._r = scenario.kernel.r
        self._w_len = w_len
        self._age_w = grid.age_weights
        self._dt = grid.dt

    def total(self, p: np.ndarray) -> float:
        return float(self._age_w @ p @ self._w_len)

    def _renewal_row(self, interior: np.ndarray) -> np.ndarray:
        """Renewal inflow consistent with the post-step density."""
        inner = np.einsum("ij,ij->j", self._inner_w, interior)
        base = 2.0 * (self._r @ (self._w_len * inner))
        if not self._has_row0_coupling:
            return base
        row0 = base
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(100):
                nxt = base + 2.0 * (self._r @ (self._row0_coef * row0))
                if not np.all(np.isfinite(nxt)):
                    # diverging self-coupling; hand the overflow to the
                    # blowup guard in simulate()
                    return nxt
                if np.max(np.abs(nxt - row0)) <= 1e-14 * max(np.max(nxt),
                                                             1e-300):
                    return nxt
                row0 = nxt
        return row0

    def _advance(self, p: np.ndarray, extra_rate: float) -> np.ndarray:
        new = np.empty_like(p)
        decay = self._interior_decay
        if extra_rate != 0.0:
            decay = decay * np.exp(-extra_rate * self._dt)
        np.multiply(p[:-1], decay, out=new[1:])
        new[0] = self._renewal_row(new[1:])
        return new

    def advance(self, p: np.ndarray) -> np.ndarray:
        crowding = self.scenario.crowding
        if crowding is None:
            return self._advance(p, 0.0)
        f_start = crowding.evaluate(self.total(p))
        predictor = self._advance(p, f_start)
        f_end = crowding.evaluate(self.total(predictor))
        return self._advance(p, 0.5 * (f_start + f_end))


def step(density: DensityField, scenario: Scenario) -> DensityField:
    """Advance a density by one time step dt = da."""
    if density.grid != scenario.grid:
        raise ConfigurationError("density grid does not match scenario grid")
    if np.any(density.p < 0):
        raise ContractViolation("density must be nonnegative")
    return DensityField(scenario.grid, Stepper(scenario).advance(density.p))


def band_weights(grid: Grid, band) -> np.ndarray:
    """Quadrature weights for the band integral of the age-marginal density.

    Integrates the piecewise-linear interpolant of the marginal exactly over
    [lo, hi], so cells cut by a band edge are split linearly and
    complementary bands add up to the full trapezoid weights.
    """
    lo, hi = float(band[0]), float(band[1])
    if not (0.0 <= lo < hi <= grid.l_max + 1e-12):
        raise ConfigurationError(f"band [{lo}, {hi}] outside [0, {grid.l_max}]")
    hi = min(hi, grid.l_max)
    l = grid.lengths
    dl = grid.dl
    w = np.zeros(grid.n_len)
    for k in range(grid.n_len - 1):
        x0 = max(lo, l[k])
        x1 = min(hi, l[k + 1])
        if x1 <= x0:
            continue
        span = x1 - x0
        w[k] += 0.5 * span * ((l[k + 1] - x0) + (l[k + 1] - x1)) / dl
        w[k + 1] += 0.5 * span * ((x0 - l[k]) + (x1 - l[k])) / dl
    return w


def class_population(density: DensityField, band) -> float:
    """Population within one telomere-length band."""
    marginal = density.grid.age_weights @ density.p
    return float(band_weights(density.grid, band) @ marginal)


def _snapshot_due(t: float, cadence: float) -> bool:
    return abs(t - round(t / cadence) * cadence) < 1e-9


def simulate(scenario: Scenario) -> SimulationTrace:
    """Run the scenario to its horizon, recording totals every step."""
    grid = scenario.grid
    stepper = Stepper(scenario)
    dt = grid.dt
    n_steps = int(round(scenario.horizon / dt))
    if n_steps < 1:
        raise ConfigurationError("horizon shorter than one time step")
    band_w = [band_weights(grid, b) for b in scenario.bands]

    p = scenario.initial.p.copy()
    times = np.arange(n_steps + 1) * dt
    totals = np.empty(n_steps + 1)
    class_totals = np.empty((len(band_w), n_steps + 1))
    snapshot_times = []
    snapshots = []

    for k in range(n_steps + 1):
        t = times[k]
        total = stepper.total(p)
        if not np.isfinite(total) or total > _BLOWUP_LIMIT:
            raise SimulationBlowup(t, float(np.max(p)))
        totals[k] = total
        if band_w:
            marginal = grid.age_weights @ p
            for b, w in enumerate(band_w):
                class_totals[b, k] = w @ marginal
        if _snapshot_due(t, scenario.cadence) or k == n_steps:
            snapshot_times.append(t)
            snapshots.append(DensityField(grid, p))
        if k < n_steps:
            p = stepper.advance(p)

    return SimulationTrace(
        scenario=scenario,
        times=times,
        totals=totals,
        class_totals=class_totals,
        snapshot_times=np.asarray(snapshot_times),
        snapshots=tuple(snapshots),
    )


def nilpotency_check(grid: Grid, p0: DensityField) -> float:
    """Residual total at the first time beyond a_max for the pure shift.

    With beta = mu = 0 the dynamics is bare transport; every cell leaves
    through the maximal age by t = a_max, so the returned total must be
    exactly zero.
    """
    zeros = np.zeros((grid.n_age, grid.n_len))
    scenario = Scenario(
        grid=grid,
        coefficients=CoefficientField(grid, zeros, zeros),
        kernel=DivisionKernel(grid, np.zeros((grid.n_len, grid.n_len))),
        initial=p0,
        horizon=grid.a_max + grid.dt,
        cadence=grid.a_max + grid.dt,
    )
    trace = simulate(scenario)
    return float(trace.totals[-1])


def explicit_crowding_oracle(linear_trace: SimulationTrace,
                             crowding: CrowdingLaw) -> np.ndarray:
    """Nonlinear totals predicted from a linear run.

    For a linear crowding law the nonlinear solution is the linear one
    divided by 1 + integral_0^t F(P_lin(s)) ds; the time integral uses
    trapezoid over the stored per-step totals.
    """
    if linear_trace.scenario.crowding is not None:
        raise ContractViolation("oracle needs a trace of the linear model")
    if crowding.gamma is None:
        raise ContractViolation("oracle needs a linear crowding law")
    f_vals = crowding.gamma * linear_trace.totals
    t = linear_trace.times
    cum = np.zeros_like(f_vals)
    np.cumsum(0.5 * np.diff(t) * (f_vals[:-1] + f_vals[1:]), out=cum[1:])
    return linear_trace.totals / (1.0 + cum)
