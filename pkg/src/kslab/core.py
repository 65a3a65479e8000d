"""Domain types, radial grids, and the transforms between the density u,
the ball-averaged mass function w, and the radial drift velocity.

Conventions used throughout the package:

* fields are sampled on nodes ``0 = r_0 < r_1 < ... < r_N`` of a
  :class:`RadialGrid`;
* ``w(r) = r^{-n} \\int_0^r s^{n-1} u(s) ds`` with the removable singularity
  at the origin filled by its limit ``w(0) = u(0)/n``;
* the inverse reads ``u = r w_r + n w`` and the drift velocity is
  ``v_r = -r (w - mu_tilde)``;
* radial integrals use a product-trapezoidal rule: the density is
  interpolated linearly on each cell and the geometric weight ``s^{n-1}``
  is integrated exactly.  A plain trapezoid of ``s^{n-1} u`` loses all
  accuracy at the first off-origin node, so it is not used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "Ball",
    "WholeSpace",
    "Params",
    "RadialGrid",
    "RadialField",
    "State",
    "build_grid",
    "sphere_surface_area",
    "ball_volume",
    "radial_derivative",
    "cumulative_weighted_integral",
    "w_from_u",
    "u_from_w",
    "u_from_w_conservative",
    "vr_from_w",
    "field_mass",
]


def sphere_surface_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, radius: float) -> float:
    """Volume of the ball of the given radius in R^n."""
    return sphere_surface_area(n) * radius**n / n


@dataclass(frozen=True)
class Ball:
    """Bounded radial domain of radius ``R`` with a no-flux outer wall."""

    R: float

    def __post_init__(self):
        if not (self.R > 0.0 and math.isfinite(self.R)):
            raise ConfigError(f"ball radius must be positive and finite, got {self.R}")

    @property
    def radius(self) -> float:
        return self.R


@dataclass(frozen=True)
class WholeSpace:
    """Unbounded domain, represented numerically on ``[0, R_trunc]``."""

    R_trunc: float

    def __post_init__(self):
        if not (self.R_trunc > 0.0 and math.isfinite(self.R_trunc)):
            raise ConfigError(f"truncation radius must be positive and finite, got {self.R_trunc}")

    @property
    def radius(self) -> float:
        return self.R_trunc


@dataclass(frozen=True)
class Params:
    """Problem parameters.

    ``mu`` is the domain average of the initial density on a ball and zero
    on whole space; ``mu_tilde = mu/n`` and ``b = 1/n`` are the constants
    appearing in the transformed scalar equation.
    """

    n: int
    domain: Ball | WholeSpace
    mu: float
    mu_tilde: float = field(default=None)  # type: ignore[assignment]
    b: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"dimension must be an integer >= 2, got {self.n!r}")
        if self.mu_tilde is None:
            object.__setattr__(self, "mu_tilde", self.mu / self.n)
        if self.b is None:
            object.__setattr__(self, "b", 1.0 / self.n)
        if self.mu < 0.0 or not math.isfinite(self.mu):
            raise ConfigError(f"mean density must be nonnegative, got {self.mu}")
        if isinstance(self.domain, WholeSpace) and self.mu != 0.0:
            raise ConfigError("whole-space problems have zero mean density")
        if abs(self.mu_tilde * self.n - self.mu) > 1e-12 * max(1.0, abs(self.mu)):
            raise ConfigError("mu_tilde * n must equal mu")
        if abs(self.b * self.n - 1.0) > 1e-12:
            raise ConfigError("b * n must equal 1")

    @classmethod
    def from_initial_data(cls, n: int, domain: Ball | WholeSpace, u0: "RadialField") -> "Params":
        """Build parameters with ``mu`` computed from the sampled initial data."""
        if isinstance(domain, Ball):
            mu = field_mass(u0, n) / ball_volume(n, domain.R)
        else:
            mu = 0.0
        return cls(n=n, domain=domain, mu=mu)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radial nodes starting exactly at the origin."""

    nodes: np.ndarray
    grading: str = "uniform"
    g: float | None = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 9:
            raise ConfigError("grid needs at least 9 nodes (N >= 8 cells)")
        if nodes[0] != 0.0:
            raise ConfigError("first grid node must be exactly 0")
        if not np.all(np.diff(nodes) > 0.0):
            raise ConfigError("grid nodes must be strictly increasing")
        if not np.all(np.isfinite(nodes)):
            raise ConfigError("grid nodes must be finite")

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def r(self) -> np.ndarray:
        return self.nodes

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def radius(self) -> float:
        return float(self.nodes[-1])


def build_grid(domain: Ball | WholeSpace, N: int, grading: str = "power", g: float = 2.0) -> RadialGrid:
    """Build a radial grid on ``[0, R]``.

    Power grading places ``r_i = R (i/N)^g`` which concentrates nodes at the
    origin where the solution focuses; ``g = 1`` or ``grading='uniform'``
    gives the arithmetic progression.
    """
    if N < 8:
        raise ConfigError(f"N must be at least 8, got {N}")
    R = domain.radius
    i = np.arange(N + 1, dtype=float)
    if grading == "uniform":
        nodes = R * i / N
        return RadialGrid(nodes, "uniform", None)
    if grading == "power":
        if not (g >= 1.0 and math.isfinite(g)):
            raise ConfigError(f"grading exponent must be >= 1, got {g}")
        nodes = R * (i / N) ** g
        return RadialGrid(nodes, "power", g)
    raise ConfigError(f"unknown grading {grading!r}")


@dataclass(frozen=True)
class RadialField:
    """A scalar sample per grid node."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.grid.nodes.shape:
            raise DomainError("field length does not match its grid")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes


@dataclass(frozen=True)
class State:
    """Solver state: the mass function w, current time and step count."""

    w: RadialField
    t: float
    u0_mass: float
    step_index: int = 0


def radial_derivative(grid: RadialGrid, values: np.ndarray, even_at_origin: bool = False) -> np.ndarray:
    """Second-order first derivative on the (possibly nonuniform) grid.

    Interior nodes use the three-point centered stencil; the ends use
    one-sided three-point formulas.  ``even_at_origin=True`` replaces the
    left end with the symmetry value 0, appropriate for fields that are
    even functions of the radius.
    """
    r = grid.nodes
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    h = np.diff(r)
    hm, hp = h[:-1], h[1:]
    out[1:-1] = (
        -hp / (hm * (hm + hp)) * v[:-2]
        + (hp - hm) / (hm * hp) * v[1:-1]
        + hm / (hp * (hm + hp)) * v[2:]
    )
    if even_at_origin:
        out[0] = 0.0
    else:
        h1, h2 = h[0], h[1]
        out[0] = (
            -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * v[0]
            + (h1 + h2) / (h1 * h2) * v[1]
            - h1 / (h2 * (h1 + h2)) * v[2]
        )
    ha, hb = h[-2], h[-1]
    out[-1] = (
        hb / (ha * (ha + hb)) * v[-3]
        - (ha + hb) / (ha * hb) * v[-2]
        + (ha + 2.0 * hb) / (hb * (ha + hb)) * v[-1]
    )
    return out


def _cell_weights(r: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell weights (alpha, beta) of the product-trapezoidal rule.

    On cell [a, b] the rule returns ``alpha f(a) + beta f(b)`` and equals
    ``int_a^b s^{n-1} f(s) ds`` exactly for linear ``f``.
    """
    a, b = r[:-1], r[1:]
    h = b - a
    P = (b ** n - a ** n) / n
    Q = (b ** (n + 1) - a ** (n + 1)) / (n + 1)
    alpha = (b * P - Q) / h
    beta = (Q - a * P) / h
    return alpha, beta


def cumulative_weighted_integral(grid: RadialGrid, values: np.ndarray, n: int) -> np.ndarray:
    """Cumulative ``int_0^{r_i} s^{n-1} f(s) ds`` for nodal samples of f."""
    v = np.asarray(values, dtype=float)
    alpha, beta = _cell_weights(grid.nodes, n)
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(alpha * v[:-1] + beta * v[1:], out=out[1:])
    return out


def w_from_u(u: RadialField, n: int) -> RadialField:
    """Averaged mass over balls: ``w(r) = r^{-n} int_0^r s^{n-1} u ds``.

    The origin value is the analytical limit ``u(0)/n``.
    """
    vals = u.values
    if np.min(vals) < 0.0:
        raise DomainError("w_from_u requires a nonnegative density")
    r = u.grid.nodes
    cum = cumulative_weighted_integral(u.grid, vals, n)
    w = np.empty_like(vals)
    w[0] = vals[0] / n
    w[1:] = cum[1:] / r[1:] ** n
    return RadialField(u.grid, w)


def u_from_w(w: RadialField, n: int) -> RadialField:
    """Recover the density via ``u = r w_r + n w`` with discrete derivatives.

    At the origin the formula degenerates to ``u(0) = n w(0)``.
    """
    r = w.grid.nodes
    wr = radial_derivative(w.grid, w.values)
    u = r * wr + n * w.values
    u[0] = n * w.values[0]
    return RadialField(w.grid, u)


def u_from_w_conservative(w: RadialField, n: int) -> RadialField:
    """Density reconstruction that inverts :func:`w_from_u` exactly.

    Solves the bidiagonal cell relations
    ``alpha_j u_j + beta_j u_{j+1} = r_{j+1}^n w_{j+1} - r_j^n w_j``
    forward from ``u_0 = n w(0)``.  The recurrence is stable
    (``alpha_j < beta_j`` for n >= 2) and makes the quadrature of the
    result telescope to ``R^n w(R)``, so the total mass computed from it
    is conserved to rounding whenever ``w(R)`` is.
    """
    r = w.grid.nodes
    wv = w.values
    alpha, beta = _cell_weights(r, n)
    rn_w = r ** n * wv
    u = np.empty_like(wv)
    u[0] = n * wv[0]
    delta = np.diff(rn_w)
    for j in range(r.size - 1):
        u[j + 1] = (delta[j] - alpha[j] * u[j]) / beta[j]
    return RadialField(w.grid, u)


def vr_from_w(w: RadialField, mu_tilde: float) -> RadialField:
    """Radial drift velocity ``v_r = -r (w - mu_tilde)``."""
    return RadialField(w.grid, -w.grid.nodes * (w.values - mu_tilde))


def field_mass(u: RadialField, n: int) -> float:
    """Total mass ``int u dx`` of a radial density in R^n."""
    cum = cumulative_weighted_integral(u.grid, u.values, n)
    return sphere_surface_area(n) * float(cum[-1])
