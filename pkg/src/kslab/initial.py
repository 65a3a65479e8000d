"""Initial data families, admissibility checks, and sufficient blowup
criteria.

Two checks gate a run:

* ``validate_i0``: nonnegative, radially nonincreasing, nonconstant data;
* ``validate_i2``: the structural inequality
  ``z(r) = r^{n-1} u0_r + u0 * int_0^r (u0 - mu) s^{n-1} ds >= 0``
  which propagates to pointwise time monotonicity of the mass function.

The sufficient blowup criteria mirror the sharp conditions of the
eigenfunction argument: on a ball, mean density at least the first
Dirichlet eigenvalue of the (n+2)-dimensional ball; on whole space, the
Gaussian-weighted mass functional above its positivity threshold
``4(n+2)/(n-2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import (
    Ball,
    Params,
    RadialField,
    RadialGrid,
    WholeSpace,
    ball_volume,
    cumulative_weighted_integral,
    field_mass,
    radial_derivative,
)
from .errors import ConfigError, DomainError

__all__ = [
    "InitialSpec",
    "ValidationReport",
    "CriterionReport",
    "sample",
    "validate_i0",
    "validate_i2",
    "min_lambda_for_i2",
    "blowup_criterion",
    "first_dirichlet_eigenvalue",
]

FAMILIES = ("cosine_cap", "quartic_cap", "gaussian", "plateau")

_I2_RTOL = 1e-8  # sign tolerance relative to max|z|; absorbs O(h^2) stencil noise
_LAMBDA_CAP = 1e6


@dataclass(frozen=True)
class InitialSpec:
    """A parametrized radial cap: family name, amplitude, shape knobs.

    All built-in families are nonincreasing with zero slope at the outer
    radius, so large multiples of them satisfy the structural inequality.
    """

    family: str
    lam: float = 1.0
    a: float = 2.0           # cosine_cap offset, must be >= 1
    width: float = 1.0       # gaussian width
    core_radius: float = 0.5  # plateau core

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if not self.lam > 0.0:
            raise ConfigError("amplitude must be positive")
        if self.family == "cosine_cap" and not self.a >= 1.0:
            raise ConfigError("cosine_cap offset must be >= 1")
        if self.family == "gaussian" and not self.width > 0.0:
            raise ConfigError("gaussian width must be positive")
        if self.family == "plateau" and not self.core_radius > 0.0:
            raise ConfigError("plateau core radius must be positive")


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    checks: dict
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CriterionReport:
    """Sufficient-condition evaluation for finite-time blowup."""

    kind: str                  # "eigenvalue" | "kaplan"
    mass: float
    mu: float
    lambda1: float | None
    kaplan_y0: float | None
    threshold: float
    sufficient: bool
    margin: float              # (statistic - threshold) / threshold


def sample(spec: InitialSpec, grid: RadialGrid, domain: Ball | WholeSpace) -> RadialField:
    """Sample the family on the grid.

    The gaussian lives on whole space only; caps and plateaus use the
    outer radius of the bound domain.
    """
    r = grid.nodes
    R = domain.radius
    lam = spec.lam
    if spec.family == "cosine_cap":
        vals = lam * (spec.a + np.cos(np.pi * r / R))
    elif spec.family == "quartic_cap":
        vals = lam * (1.0 + (1.0 - (r / R) ** 2) ** 2)
    elif spec.family == "gaussian":
        if not isinstance(domain, WholeSpace):
            raise ConfigError("gaussian initial data requires a whole-space domain")
        vals = lam * np.exp(-((r / spec.width) ** 2))
    elif spec.family == "plateau":
        rc = spec.core_radius
        if rc >= R:
            raise ConfigError("plateau core radius must be inside the domain")
        floor = 0.1
        ramp = 0.5 * (1.0 + np.cos(np.pi * (r - rc) / (R - rc)))
        vals = lam * np.where(r <= rc, 1.0, floor + (1.0 - floor) * ramp)
    else:  # pragma: no cover
        raise ConfigError(spec.family)
    return RadialField(grid, vals)


def validate_i0(u0: RadialField, rtol: float = 1e-12) -> ValidationReport:
    """Check nonnegativity, discrete monotonicity, and nonconstancy."""
    v = u0.values
    scale = float(np.max(np.abs(v))) or 1.0
    nonnegative = bool(np.min(v) >= -rtol * scale)
    nonincreasing = bool(np.max(np.diff(v)) <= rtol * scale)
    nonconstant = bool(np.ptp(v) > rtol * scale)
    checks = {
        "nonnegative": nonnegative,
        "nonincreasing": nonincreasing,
        "nonconstant": nonconstant,
    }
    return ValidationReport(ok=all(checks.values()), checks=checks,
                            detail={"min": float(np.min(v)), "range": float(np.ptp(v))})


def _i2_profile(u0: RadialField, params: Params) -> np.ndarray:
    r = u0.grid.nodes
    n = params.n
    u = u0.values
    ur = radial_derivative(u0.grid, u, even_at_origin=True)
    excess = cumulative_weighted_integral(u0.grid, u - params.mu, n)
    return r ** (n - 1) * ur + u * excess


def validate_i2(u0: RadialField, params: Params) -> ValidationReport:
    """Evaluate the structural inequality at the interior nodes.

    Passes iff ``min z >= -1e-8 * max|z|``; the relative tolerance absorbs
    the O(h^2) noise of discrete derivatives at a sign boundary.
    """
    z = _i2_profile(u0, params)[1:-1]
    scale = float(np.max(np.abs(z))) or 1.0
    z_min = float(np.min(z)) if z.size else 0.0
    ok = z_min >= -_I2_RTOL * scale
    return ValidationReport(ok=ok, checks={"structural_inequality": ok},
                            detail={"z_min": z_min, "scale": scale})


def _i2_passes_at(phi: RadialField, lam: float, n: int, domain) -> bool:
    scaled = RadialField(phi.grid, lam * phi.values)
    params = Params.from_initial_data(n, domain, scaled)
    return validate_i2(scaled, params).ok


def min_lambda_for_i2(phi: RadialField, params: Params, rtol: float = 1e-3) -> float:
    """Smallest multiplier (on a bisection lattice) making ``lam * phi``
    satisfy the structural inequality.

    Requires a cap shape: nonincreasing, nonconstant, positive at the
    outer radius, with zero outer slope.  The inequality is monotone in
    the multiplier for such shapes (checked again after bisection).
    """
    rep0 = validate_i0(phi)
    if not rep0.ok:
        raise ConfigError(f"multiplier search requires admissible shape data: {rep0.checks}")
    phir = radial_derivative(phi.grid, phi.values, even_at_origin=True)
    slope_scale = float(np.max(np.abs(phir))) or 1.0
    if abs(phir[-1]) > 1e-6 * slope_scale:
        raise ConfigError("cap shape must have zero slope at the outer radius")
    if not phi.values[-1] > 0.0:
        raise ConfigError("cap shape must be positive at the outer radius")

    n, domain = params.n, params.domain
    hi = 1.0
    while not _i2_passes_at(phi, hi, n, domain):
        hi *= 2.0
        if hi > _LAMBDA_CAP:
            raise DomainError(f"no passing multiplier below {_LAMBDA_CAP:g}")
    lo = hi / 2.0
    if hi == 1.0:
        while lo > 1e-12 and _i2_passes_at(phi, lo, n, domain):
            hi, lo = lo, lo / 2.0
    while (hi - lo) > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _i2_passes_at(phi, mid, n, domain):
            hi = mid
        else:
            lo = mid
    if not _i2_passes_at(phi, 2.0 * hi, n, domain):
        raise DomainError("multiplier search lattice is not monotone for this shape")
    return hi


def first_dirichlet_eigenvalue(dim: int, radius: float) -> float:
    """First Dirichlet eigenvalue of the Laplacian on a ball in ``dim``
    dimensions, by shooting on the radial eigenfunction equation.

    Integrates ``psi'' + (dim-1)/rho psi' + psi = 0`` from the origin and
    locates the first zero ``j``; the eigenvalue is ``(j / radius)^2``.
    """
    if dim < 2:
        raise ConfigError("eigenvalue shooting needs dim >= 2")

    def rhs(rho, y):
        psi, dpsi = y
        return [dpsi, -psi - (dim - 1) / rho * dpsi]

    rho0 = 1e-8
    y0 = [1.0 - rho0**2 / (2.0 * dim), -rho0 / dim]

    def hit_zero(rho, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    sol = solve_ivp(rhs, (rho0, 40.0), y0, events=hit_zero,
                    rtol=1e-12, atol=1e-14, dense_output=True)
    if not sol.t_events[0].size:
        raise DomainError(f"no eigenfunction zero found up to rho=40 in dim {dim}")
    j_event = float(sol.t_events[0][0])
    # polish the root on the dense output
    f = lambda rho: float(sol.sol(rho)[0])
    lo = j_event * (1.0 - 1e-6)
    hi = min(j_event * (1.0 + 1e-6), sol.t[-1])
    if f(lo) * f(hi) < 0.0:
        j = brentq(f, lo, hi, xtol=1e-13, rtol=8.9e-16)
    else:
        j = j_event
    return (j / radius) ** 2


def blowup_criterion(u0: RadialField, params: Params) -> CriterionReport:
    """Evaluate the sufficient blowup condition for the given data.

    Ball: mean density ``mu >= lambda_1`` of the (n+2)-dimensional ball.
    Whole space (n >= 3): Gaussian-weighted functional
    ``y0 = (2 / Gamma((n+2)/2)) * I`` with
    ``I = 1/2 int_0^inf u0(s) e^{-s^2} s^{n-1} ds`` above
    ``4(n+2)/(n-2)``.
    """
    n = params.n
    mass = field_mass(u0, n)
    if isinstance(params.domain, Ball):
        R = params.domain.R
        mu = mass / ball_volume(n, R)
        lambda1 = first_dirichlet_eigenvalue(n + 2, R)
        margin = (mu - lambda1) / lambda1
        return CriterionReport(kind="eigenvalue", mass=mass, mu=mu, lambda1=lambda1,
                               kaplan_y0=None, threshold=lambda1,
                               sufficient=mu >= lambda1, margin=margin)
    if n == 2:
        raise ConfigError("the whole-space criterion is unsupported in dimension 2")
    r = u0.grid.nodes
    integrand = u0.values * np.exp(-(r**2)) * r ** (n - 1)
    I = 0.5 * float(np.trapezoid(integrand, r))
    y0 = 2.0 / math.gamma((n + 2) / 2.0) * I
    threshold = 4.0 * (n + 2) / (n - 2)
    margin = (y0 - threshold) / threshold
    return CriterionReport(kind="kaplan", mass=mass, mu=0.0, lambda1=None,
                           kaplan_y0=y0, threshold=threshold,
                           sufficient=y0 > threshold, margin=margin)
