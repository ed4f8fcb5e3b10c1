"""Discretized renewal integral operator and its Perron spectral data.

The operator maps a newborn telomere profile x(l_hat) to
2 * integral r(l, l_hat) K(l_hat, lambda) x(l_hat) dl_hat, where K is the
expected lifetime division output discounted at rate lambda.  Its spectral
radius at lambda = 0 decides decay vs growth; the characteristic root
lambda_star is where the radius crosses 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError, NoCharacteristicRoot
from .model import CoefficientField, DensityField, DivisionKernel

__all__ = [
    "DiscreteRenewalOperator",
    "PowerResult",
    "RadiusBounds",
    "Classification",
    "SpectralReport",
    "cumulative_age_integral",
    "survival_kernel",
    "assemble",
    "spectral_radius",
    "separable_radius",
    "radius_bounds",
    "bound_curves",
    "irreducible",
    "growth_rate",
    "eigenfunction",
    "classify",
    "report",
]


@dataclass(frozen=True)
class DiscreteRenewalOperator:
    """Nystrom matrix of the renewal operator at shift parameter lambda."""

    lam: float
    m: np.ndarray  # (n_len, n_len), entry (i,j) = 2 r(l_i,l_hat_j) K(l_hat_j) w_j

    def __post_init__(self):
        if np.any(self.m < 0):
            raise ConfigurationError("renewal operator entries must be >= 0")


class PowerResult(NamedTuple):
    radius: float
    eigenvector: np.ndarray  # nonnegative, max-norm 1
    iterations: int
    converged: bool


class RadiusBounds(NamedTuple):
    """min/max of the two estimate curves bracketing the spectral radius.

    The 'mother' pair scans 2 K(l_hat,0) * integral_l r(l,l_hat) dl over the
    mother length l_hat; the 'daughter' pair scans
    2 * integral r(l,l_hat) K(l_hat,0) dl_hat over the daughter length l.
    """

    lower_mother: float
    upper_mother: float
    lower_daughter: float
    upper_daughter: float


class Classification(NamedTuple):
    label: str  # 'decay' | 'growth' | 'steady-family'
    radius: float
    irreducible: bool


@dataclass(frozen=True)
class SpectralReport:
    radius: float
    eigenvector: np.ndarray
    iterations: int
    converged: bool
    bounds: RadiusBounds
    irreducible: bool


def cumulative_age_integral(grid, values: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral along age of a (n_age, n_len) field."""
    da = grid.da
    out = np.zeros_like(values)
    np.cumsum(0.5 * da * (values[:-1] + values[1:]), axis=0, out=out[1:])
    return out


def survival_kernel(coefficients: CoefficientField, lam: float) -> np.ndarray:
    """K(l_hat, lambda): expected discounted division output over a lifetime.

    Per telomere node, integral over age of
    beta * exp(-integral_0^a (beta + mu + lambda)), with both integrals by
    trapezoid on the grid nodes.
    """
    grid = coefficients.grid
    g = coefficients.beta + coefficients.mu + lam
    c = cumulative_age_integral(grid, g)
    integrand = coefficients.beta * np.exp(-c)
    return grid.age_weights @ integrand


def assemble(coefficients: CoefficientField, kernel: DivisionKernel,
             lam: float) -> DiscreteRenewalOperator:
    """Nystrom discretization of the renewal operator at shift lambda."""
    if kernel.grid != coefficients.grid:
        raise ConfigurationError("kernel and coefficients use different grids")
    k = survival_kernel(coefficients, lam)
    m = 2.0 * kernel.r * (k * kernel.weights)[None, :]
    return DiscreteRenewalOperator(lam, m)


def spectral_radius(op: DiscreteRenewalOperator, tol: float = 1e-10,
                    max_iter: int = 100_000) -> PowerResult:
    """Perron radius and eigenvector by shifted power iteration.

    The iteration runs on m + eps*I with eps = 1e-8 * max entry; for a
    nonnegative matrix the shift moves every eigenvalue by exactly eps, so
    the reported radius is the shifted estimate minus eps.  The start vector
    is all ones, making runs bit-reproducible.
    """
    m = op.m
    n = m.shape[0]
    top = float(m.max(initial=0.0))
    if top == 0.0:
        return PowerResult(0.0, np.ones(n), 0, True)
    eps = 1e-8 * top
    shifted = m + eps * np.eye(n)
    v = np.ones(n)
    prev_est = None
    est = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = shifted @ v
        est = float(w.max())
        w /= est
        if (prev_est is not None
                and abs(est - prev_est) <= tol * max(est, 1e-300)
                and float(np.max(np.abs(w - v))) <= tol):
            v = w
            converged = True
            break
        prev_est = est
        v = w
    return PowerResult(est - eps, v / v.max(), it, converged)


def separable_radius(r1_const: float, r2_const: float, beta_const: float,
                     mu_const: float) -> float:
    """Closed-form radius for constant separable ingredients on unit extents."""
    s = beta_const + mu_const
    if s <= 0:
        raise ConfigurationError("beta_const + mu_const must be positive")
    return 2.0 * r1_const * r2_const * (1.0 - np.exp(-s)) / s


def bound_curves(coefficients: CoefficientField, kernel: DivisionKernel):
    """The two radius-estimate curves (over mother length, daughter length)."""
    k0 = survival_kernel(coefficients, 0.0)
    mother_curve = 2.0 * k0 * kernel.daughter_mass()
    daughter_curve = 2.0 * (kernel.r @ (k0 * kernel.weights))
    return mother_curve, daughter_curve


def radius_bounds(coefficients: CoefficientField,
                  kernel: DivisionKernel) -> RadiusBounds:
    """Quadruple of lower/upper radius estimates from the two bound curves."""
    mother_curve, daughter_curve = bound_curves(coefficients, kernel)
    return RadiusBounds(float(mother_curve.min()), float(mother_curve.max()),
                        float(daughter_curve.min()), float(daughter_curve.max()))


def _strongly_connected(adj: np.ndarray) -> bool:
    """Strong connectivity of a dense boolean adjacency matrix.

    adj[j, i] True means an edge j -> i.  A graph is strongly connected iff
    every node is reachable from node 0 and node 0 is reachable from every
    node (BFS on the graph and its transpose).
    """
    n = adj.shape[0]
    for mat in (adj, adj.T):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = seen.copy()
        while frontier.any():
            reached = mat[frontier].any(axis=0) & ~seen
            seen |= reached
            frontier = reached
        if not seen.all():
            return False
    return True


def irreducible(kernel: DivisionKernel, survival: np.ndarray,
                rel_tol: float = 0.0) -> bool:
    """Discrete proxy for irreducibility of the renewal operator.

    Builds a directed graph with an edge mother-node j -> daughter-node i
    whenever 2 r(l_i, l_hat_j) K(l_hat_j, 0) w_j exceeds rel_tol times the
    max entry, and tests strong connectivity.  The default threshold is
    support-based (strictly positive entries): the continuum condition is
    about the support of r, and Gaussian far tails are positive but can sit
    arbitrarily many orders of magnitude below the peak.
    """
    m = 2.0 * kernel.r * (np.asarray(survival) * kernel.weights)[None, :]
    top = float(m.max(initial=0.0))
    if top == 0.0:
        return False
    adj = (m > rel_tol * top).T  # adj[j, i]: mother j produces daughter i
    return _strongly_connected(adj)


def growth_rate(coefficients: CoefficientField, kernel: DivisionKernel,
                tol: float = 1e-8, bracket=(-10.0, 10.0),
                limit=(-50.0, 50.0)) -> float:
    """Characteristic root lambda_star where the renewal radius equals 1.

    Bisection on g(lambda) = radius(lambda) - 1 over an expanding bracket;
    g is strictly decreasing, so a sign change pins a unique root.
    """

    def g(lam):
        return spectral_radius(assemble(coefficients, kernel, lam)).radius - 1.0

    lo, hi = float(bracket[0]), float(bracket[1])
    lo_lim, hi_lim = float(limit[0]), float(limit[1])
    glo, ghi = g(lo), g(hi)
    while glo < 0.0 and lo > lo_lim:
        lo = max(lo_lim, 2.0 * lo if lo < 0 else -10.0)
        glo = g(lo)
    while ghi > 0.0 and hi < hi_lim:
        hi = min(hi_lim, 2.0 * hi if hi > 0 else 10.0)
        ghi = g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo < 0.0 or ghi > 0.0:
        raise NoCharacteristicRoot(
            f"radius - 1 does not change sign on [{lo_lim}, {hi_lim}]"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm > 0.0:
            lo = mid
        elif gm < 0.0:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def eigenfunction(coefficients: CoefficientField, lam: float,
                  boundary_vec: np.ndarray) -> DensityField:
    """Density psi(a, l) = boundary(l) * exp(-integral_0^a (beta+mu+lambda))."""
    boundary_vec = np.asarray(boundary_vec, dtype=float)
    if np.any(boundary_vec < 0):
        raise ConfigurationError("boundary vector must be nonnegative")
    grid = coefficients.grid
    c = cumulative_age_integral(grid, coefficients.beta + coefficients.mu + lam)
    return DensityField(grid, boundary_vec[None, :] * np.exp(-c))


def classify(coefficients: CoefficientField, kernel: DivisionKernel,
             tol: float = 1e-6) -> Classification:
    """Asymptotic trichotomy from the radius at lambda = 0."""
    res = spectral_radius(assemble(coefficients, kernel, 0.0))
    if res.radius < 1.0 - tol:
        label = "decay"
    elif res.radius > 1.0 + tol:
        label = "growth"
    else:
        label = "steady-family"
    irr = irreducible(kernel, survival_kernel(coefficients, 0.0))
    return Classification(label, res.radius, irr)


def report(coefficients: CoefficientField,
           kernel: DivisionKernel) -> SpectralReport:
    """Radius, Perron eigenvector, estimate quadruple and irreducibility."""
    res = spectral_radius(assemble(coefficients, kernel, 0.0))
    return SpectralReport(
        radius=res.radius,
        eigenvector=res.eigenvector,
        iterations=res.iterations,
        converged=res.converged,
        bounds=radius_bounds(coefficients, kernel),
        irreducible=irreducible(kernel, survival_kernel(coefficients, 0.0)),
    )
