"""Positive steady states of the crowding-regulated model and their stability.

A positive equilibrium with total population P must make the renewal operator
shifted by F(P) have radius 1; by strict monotonicity of the shifted radius
that is the single equation F(P) = lambda_star, where lambda_star is the
characteristic root of the crowding-free part.  The stability report carries
the margin of the dissipativity-based sufficient condition and the
positivity-based instability flag rather than solving the implicit
linearized eigenproblem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import spectral
from .errors import ConfigurationError, EigenConvergenceError
from .model import CoefficientField, CrowdingLaw, DensityField, DivisionKernel, Scenario

__all__ = [
    "SteadyStateReport",
    "find_equilibrium",
    "build_profile",
    "stability_margin_field",
    "stability_condition",
    "extinction_stability",
    "instability_check",
    "scan_equilibria",
]


@dataclass(frozen=True)
class SteadyStateReport:
    lambda_star: float
    classification: str  # 'positive-equilibrium' | 'extinction-only' | 'steady-family'
    P_star: Optional[float] = None
    profile: Optional[DensityField] = None
    c: Optional[float] = None
    stability_margin: Optional[float] = None
    extinction_stable: bool = False
    instability_flag: bool = False
    equilibria: tuple = ()


def _perron_pair(coefficients: CoefficientField, kernel: DivisionKernel,
                 lam: float, radius_tol: float = 1e-4):
    res = spectral.spectral_radius(spectral.assemble(coefficients, kernel, lam))
    if not res.converged:
        raise EigenConvergenceError(
            f"power iteration did not converge at lambda={lam:g}")
    if abs(res.radius - 1.0) > radius_tol:
        raise ConfigurationError(
            f"renewal radius at lambda={lam:g} is {res.radius:.8g}, expected 1")
    return res


def build_profile(coefficients: CoefficientField, kernel: DivisionKernel,
                  lambda_star: float, P_star: float) -> DensityField:
    """Steady density c * x(l) * exp(-integral (beta+mu)) * exp(-a F(P*)).

    The newborn profile x is the Perron eigenvector of the renewal operator
    at the equilibrium shift (radius 1); c normalizes the double integral of
    the profile to P_star.
    """
    res = _perron_pair(coefficients, kernel, lambda_star)
    unit = spectral.eigenfunction(coefficients, lambda_star, res.eigenvector)
    total = unit.total()
    if total <= 0:
        raise ConfigurationError("eigen-profile has zero mass")
    return DensityField(coefficients.grid, (P_star / total) * unit.p)


def stability_margin_field(coefficients: CoefficientField,
                           kernel: DivisionKernel,
                           crowding: Optional[CrowdingLaw],
                           P_star: float) -> np.ndarray:
    """Per-node margin of the sufficient stability condition.

    LHS - RHS of: mu + beta + F(P*) > |F'(P*)| P* + 2 beta * (per-mother
    daughter mass at the node's length).  Positive everywhere means the
    condition certifies asymptotic stability.
    """
    if crowding is None:
        f_val, f_prime = 0.0, 0.0
    else:
        f_val = crowding.evaluate(P_star)
        f_prime = crowding.derivative(P_star)
    mass = kernel.daughter_mass()[None, :]
    lhs = coefficients.mu + coefficients.beta + f_val
    rhs = abs(f_prime) * P_star + 2.0 * coefficients.beta * mass
    return lhs - rhs


def stability_condition(coefficients: CoefficientField, kernel: DivisionKernel,
                        crowding: Optional[CrowdingLaw],
                        P_star: float) -> float:
    """Minimum margin over all grid nodes; positive means certified stable."""
    return float(stability_margin_field(coefficients, kernel, crowding,
                                        P_star).min())


def extinction_stability(coefficients: CoefficientField,
                         kernel: DivisionKernel,
                         crowding: Optional[CrowdingLaw]) -> bool:
    """Whether the zero steady state passes the sufficient stability check."""
    return stability_condition(coefficients, kernel, crowding, 0.0) >= 0.0


def instability_check(crowding: CrowdingLaw, P_star: float,
                      irreducible_flag: bool) -> bool:
    """Positive equilibrium is certified unstable when F'(P*) < 0 and the
    kernel is irreducible; otherwise no claim is made."""
    return bool(crowding.derivative(P_star) < 0.0 and irreducible_flag)


def _is_constant(crowding: CrowdingLaw) -> bool:
    samples = (0.0, 1.0, 10.0, 1e3, 1e6)
    vals = [crowding.evaluate(p) for p in samples]
    return max(vals) - min(vals) == 0.0


def scan_equilibria(crowding: CrowdingLaw, lambda_star: float,
                    p_grid: Optional[Sequence[float]] = None) -> tuple:
    """All sign changes of F(P) - lambda_star on a log grid, refined.

    Used for non-monotone crowding laws, where multiple equilibria are
    possible and uniqueness is not claimed.
    """
    if p_grid is None:
        p_grid = np.concatenate(([0.0], np.logspace(-6, 12, 181)))
    g = np.array([crowding.evaluate(p) - lambda_star for p in p_grid])
    roots = []
    for k in range(len(p_grid) - 1):
        if g[k] == 0.0:
            roots.append(float(p_grid[k]))
            continue
        if g[k] * g[k + 1] < 0.0:
            lo, hi = float(p_grid[k]), float(p_grid[k + 1])
            glo = g[k]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                gm = crowding.evaluate(mid) - lambda_star
                if gm == 0.0:
                    lo = hi = mid
                    break
                if (gm > 0) == (glo > 0):
                    lo, glo = mid, gm
                else:
                    hi = mid
                if hi - lo <= 1e-12 * max(1.0, hi):
                    break
            roots.append(0.5 * (lo + hi))
    if g[-1] == 0.0:
        roots.append(float(p_grid[-1]))
    return tuple(roots)


def _solve_monotone(crowding: CrowdingLaw, lambda_star: float) -> Optional[float]:
    """Unique P with F(P) = lambda_star for a monotone law, or None."""
    if crowding.gamma is not None and crowding.gamma > 0:
        p = lambda_star / crowding.gamma
        return p if p > 0 else None
    increasing = crowding.monotonicity == "increasing"
    g0 = crowding.evaluate(0.0) - lambda_star
    if (increasing and g0 >= 0) or (not increasing and g0 <= 0):
        return None  # F(0) already on the wrong side; no positive solution
    hi = 1.0
    for _ in range(80):
        gh = crowding.evaluate(hi) - lambda_star
        if (increasing and gh >= 0) or (not increasing and gh <= 0):
            break
        hi *= 4.0
    else:
        return None
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = crowding.evaluate(mid) - lambda_star
        below = gm < 0 if increasing else gm > 0
        if below:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def find_equilibrium(scenario: Scenario) -> SteadyStateReport:
    """Locate the positive steady state of a crowding scenario, if any."""
    crowding = scenario.crowding
    if crowding is None:
        raise ConfigurationError("scenario has no crowding law")
    coefficients, kernel = scenario.coefficients, scenario.kernel
    lambda_star = spectral.growth_rate(coefficients, kernel)
    irr = spectral.irreducible(kernel,
                               spectral.survival_kernel(coefficients, 0.0))
    ext_stable = extinction_stability(coefficients, kernel, crowding)

    if _is_constant(crowding):
        if abs(crowding.evaluate(0.0) - lambda_star) <= 1e-10:
            # every total is an equilibrium: a one-parameter family
            return SteadyStateReport(lambda_star, "steady-family",
                                     extinction_stable=ext_stable)
        return SteadyStateReport(lambda_star, "extinction-only",
                                 extinction_stable=ext_stable)

    if crowding.monotonicity in ("increasing", "decreasing"):
        equilibria = ()
        p_star = _solve_monotone(crowding, lambda_star)
        if p_star is not None:
            equilibria = (p_star,)
    else:
        equilibria = scan_equilibria(crowding, lambda_star)
        p_star = next((p for p in equilibria if p > 0), None)

    if p_star is None:
        return SteadyStateReport(lambda_star, "extinction-only",
                                 extinction_stable=ext_stable,
                                 equilibria=equilibria)

    res = _perron_pair(coefficients, kernel, lambda_star)
    unit = spectral.eigenfunction(coefficients, lambda_star, res.eigenvector)
    c = p_star / unit.total()
    profile = DensityField(scenario.grid, c * unit.p)
    margin = stability_condition(coefficients, kernel, crowding, p_star)
    return SteadyStateReport(
        lambda_star=lambda_star,
        classification="positive-equilibrium",
        P_star=p_star,
        profile=profile,
        c=c,
        stability_margin=margin,
        extinction_stable=ext_stable,
        instability_flag=instability_check(crowding, p_star, irr),
        equilibria=equilibria,
    )
