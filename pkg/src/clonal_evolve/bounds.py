"""Verification harnesses for the two quantitative decay/growth statements.

Without self-renewal (every daughter at least delta shorter than its mother)
the population of the j-th length band from the top obeys an explicit
exponential-times-polynomial ceiling.  With self-renewal concentrated in the
top band the same band grows at least like exp((2 r1 - 1) beta1 - mu1) once
transients of one maximal lifespan have passed.  Both harnesses take a
finished simulation trace, re-check the hypotheses they rely on, and refuse
to certify rather than report a meaningless pass when a hypothesis fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, NotCertifiable
from .model import DivisionKernel
from .solver import SimulationTrace, band_weights

__all__ = [
    "ClassBoundConfig",
    "ClassBoundReport",
    "RenewalRateReport",
    "check_no_self_renewal",
    "class_bound_curve",
    "top_down_bands",
    "verify_class_bounds",
    "verify_renewal_lower_bound",
]

_MAX_CLASSES = 20  # binomials stay exact machine integers well past this


@dataclass(frozen=True)
class ClassBoundConfig:
    """Ingredients of the per-band decay ceiling.

    delta is the guaranteed telomere loss per division, sigma the uniform
    exit rate (division plus death minima), omega the maximal rate at which
    one band feeds the next (2 * delta * r_max * beta_max).
    """

    delta: float
    n_classes: int
    sigma: float
    omega: float
    l_max: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigurationError("delta must be positive")
        if not 1 <= self.n_classes <= _MAX_CLASSES:
            raise ConfigurationError(
                f"n_classes must be in [1, {_MAX_CLASSES}]")
        if (self.n_classes + 1) * self.delta >= self.l_max:
            raise ConfigurationError(
                "(n_classes + 1) * delta must stay below l_max")
        if self.sigma < 0 or self.omega < 0:
            raise ConfigurationError("sigma and omega must be nonnegative")

    @classmethod
    def from_ingredients(cls, delta, n_classes, l_max, r_max, beta_max,
                         beta_min, mu_min):
        return cls(delta=float(delta), n_classes=int(n_classes),
                   sigma=float(beta_min) + float(mu_min),
                   omega=2.0 * float(delta) * float(r_max) * float(beta_max),
                   l_max=float(l_max))


def check_no_self_renewal(kernel: DivisionKernel, delta: float,
                          rel_tol: float = 1e-12) -> bool:
    """True when daughters are always at least delta shorter than mothers.

    Checks that every kernel entry with daughter length inside
    [mother - delta, mother] is below rel_tol times the maximal entry.
    """
    if not 0 < delta < kernel.grid.l_max:
        raise ConfigurationError("delta must lie in (0, l_max)")
    lengths = kernel.grid.lengths
    top = float(kernel.r.max(initial=0.0))
    if top == 0.0:
        return True
    daughters = lengths[:, None]
    mothers = lengths[None, :]
    on_band = (daughters >= mothers - delta) & (daughters <= mothers)
    return bool(np.all(kernel.r[on_band] <= rel_tol * top))


def class_bound_curve(config: ClassBoundConfig, j: int,
                      P_init: Sequence[float], t) -> np.ndarray:
    """Ceiling for band j at times t given the initial band populations.

    exp(-sigma t) * (P_j(0) + sum_{k=1}^{j} omega^k t^k / k!
                     * sum_{i=0}^{j-k} C(j-1-i, k-1) P_i(0))
    """
    if not 0 <= j < config.n_classes:
        raise ConfigurationError(f"band index {j} outside [0, {config.n_classes})")
    P_init = np.asarray(P_init, dtype=float)
    if P_init.shape[0] <= j:
        raise ConfigurationError("need initial populations for bands 0..j")
    t = np.asarray(t, dtype=float)
    acc = np.full(t.shape, P_init[j])
    for k in range(1, j + 1):
        coef = sum(math.comb(j - 1 - i, k - 1) * P_init[i]
                   for i in range(j - k + 1))
        acc = acc + (config.omega ** k / math.factorial(k)) * t ** k * coef
    return np.exp(-config.sigma * t) * acc


def top_down_bands(config: ClassBoundConfig):
    """The n_classes length bands counted downward from l_max."""
    return tuple(
        (config.l_max - (j + 1) * config.delta, config.l_max - j * config.delta)
        for j in range(config.n_classes)
    )


@dataclass(frozen=True)
class ClassBoundReport:
    passed: bool
    worst_ratio: float  # max over bands/times of simulated / bound
    worst_band: int
    worst_time: float
    ratios: np.ndarray  # (n_classes, n_times)
    bounds: np.ndarray  # (n_classes, n_times)


def verify_class_bounds(trace: SimulationTrace, config: ClassBoundConfig,
                        require_hypothesis: bool = True,
                        rel_tol: float = 1e-6,
                        abs_tol: float = 1e-12) -> ClassBoundReport:
    """Compare every stored band total against its decay ceiling."""
    if require_hypothesis and not check_no_self_renewal(
            trace.scenario.kernel, config.delta):
        raise NotCertifiable(
            "kernel has self-renewal within delta; bound does not apply")
    expected = top_down_bands(config)
    bands = trace.scenario.bands
    if len(bands) < config.n_classes:
        raise NotCertifiable(
            f"trace has {len(bands)} bands, need {config.n_classes}")
    for j, (lo, hi) in enumerate(expected):
        blo, bhi = bands[j]
        if abs(blo - lo) > 1e-12 or abs(bhi - hi) > 1e-12:
            raise NotCertifiable(
                f"trace band {j} is [{blo}, {bhi}], expected [{lo}, {hi}]")

    t = trace.times
    P0 = trace.class_totals[:config.n_classes, 0]
    bound = np.vstack([class_bound_curve(config, j, P0, t)
                       for j in range(config.n_classes)])
    sim = trace.class_totals[:config.n_classes]
    allowance = bound * (1.0 + rel_tol) + abs_tol
    ratios = sim / np.maximum(bound, abs_tol)
    passed = bool(np.all(sim <= allowance))
    flat = int(np.argmax(ratios))
    wb, wt = np.unravel_index(flat, ratios.shape)
    return ClassBoundReport(
        passed=passed,
        worst_ratio=float(ratios[wb, wt]),
        worst_band=int(wb),
        worst_time=float(t[wt]),
        ratios=ratios,
        bounds=bound,
    )


@dataclass(frozen=True)
class RenewalRateReport:
    slope: float
    rate_bound: float
    passed: bool
    fit_window: tuple


def verify_renewal_lower_bound(trace: SimulationTrace, delta: float,
                               r1: float, beta1: float,
                               mu1: float) -> RenewalRateReport:
    """Fit the growth rate of the top length band and compare to the floor.

    The floor 2*r1*beta1 - beta1 - mu1 applies once the initial cohort has
    aged out, so the least-squares fit of log population runs on
    t in [a_max, horizon].  Certification requires the scenario to actually
    satisfy the hypotheses: constant rates beta1 and mu1 on the top band
    (beta may be zeroed on the final age row, where cells exit anyway),
    per-mother kernel mass of at least r1 staying inside the band, and
    (2*r1 - 1)*beta1 >= mu1.
    """
    scenario = trace.scenario
    grid = scenario.grid
    if not 0 < delta < grid.l_max:
        raise ConfigurationError("delta must lie in (0, l_max)")
    if (2.0 * r1 - 1.0) * beta1 < mu1:
        raise NotCertifiable(
            "(2 r1 - 1) beta1 < mu1: growth floor hypothesis fails")
    in_band = grid.lengths >= grid.l_max - delta - 1e-12
    beta_band = scenario.coefficients.beta[:, in_band]
    mu_band = scenario.coefficients.mu[:, in_band]
    interior = beta_band[:-1]  # final age row may be zeroed by construction
    if np.max(np.abs(interior - beta1)) > 1e-9 or np.max(
            np.abs(mu_band - mu1)) > 1e-9:
        raise NotCertifiable("rates are not constant on the top band")
    band = (grid.l_max - delta, grid.l_max)
    bw = band_weights(grid, band)
    retained = bw @ scenario.kernel.r[:, in_band]
    if np.min(retained) < r1 - 1e-9:
        raise NotCertifiable(
            "kernel keeps less than r1 of some in-band mother's daughters")

    series = trace.band_series(band)
    mask = trace.times >= grid.a_max - 1e-9
    if mask.sum() < 2:
        raise NotCertifiable("horizon too short: no fit window past a_max")
    if np.any(series[mask] <= 0):
        raise NotCertifiable("top band emptied; log fit impossible")
    slope = float(np.polyfit(trace.times[mask], np.log(series[mask]), 1)[0])
    rate = 2.0 * r1 * beta1 - beta1 - mu1
    passed = slope >= rate - 0.02 * abs(rate)
    return RenewalRateReport(slope=slope, rate_bound=rate, passed=passed,
                             fit_window=(float(grid.a_max),
                                         float(trace.times[-1])))
