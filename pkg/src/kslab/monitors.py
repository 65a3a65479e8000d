"""Per-snapshot and per-run diagnostics: conserved mass, monotonicity,
the gradient functional J = w_r + eps r w^2, the space-time envelope
constant, the reciprocal gap, gradient ratios, half-height radius, power
law fits of the final profile, and partial-mass concentration.

Scale conventions (used by the tolerance checks downstream):

* ``wr_max`` and ``j_max`` are compared against ``max|w_r|`` at the same
  snapshot;
* ``wt_min`` against ``max|w_t|``;
* ``estimw_gap`` against ``max(1/w)``.

Derivatives reuse the stencils of :mod:`kslab.core`; the mass uses the
quadrature-compatible reconstruction so that conservation holds to
rounding whenever the boundary node is pinned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .core import (
    RadialField,
    RadialGrid,
    State,
    Params,
    cumulative_weighted_integral,
    radial_derivative,
    sphere_surface_area,
    u_from_w,
    u_from_w_conservative,
)
from .errors import DomainError, RegimeError

__all__ = [
    "MonitorSample",
    "ProfileFit",
    "snapshot_monitors",
    "build_series",
    "largest_valid_epsilon",
    "EPSILON_LATTICE",
    "half_height",
    "fit_profile_exponent",
    "select_final_profile",
    "concentration_mass",
    "type_ratio",
    "boundary_activity",
]

#: Candidate values for the largest admissible epsilon in J = w_r + eps r w^2.
EPSILON_LATTICE = tuple(2.0**k * 1e-3 for k in range(21))


@dataclass(frozen=True)
class MonitorSample:
    """One row of diagnostics; field order matches the CSV schema."""

    t: float
    mass: float
    u0: float
    wr_max: float
    wt_min: float
    j_max: float
    k_bound: float
    estimw_gap: float
    grad_ratio: float
    r_half: float
    r_half_sq_w: float
    # local scales for tolerance checks (not part of the CSV schema)
    wr_scale: float = math.nan
    wt_scale: float = math.nan
    gap_scale: float = math.nan


@dataclass(frozen=True)
class ProfileFit:
    """Least-squares power law ``U ~ L r^p`` over a radial window."""

    p: float
    L: float
    r_lo: float
    r_hi: float
    residual: float

    def __post_init__(self):
        if not self.r_lo < self.r_hi:
            raise DomainError("fit window must be increasing")


def half_height(state: State) -> tuple[float, float]:
    """Radius where w drops to half its central value, and ``r0^2 w(r0)``.

    Defined once ``w(0) > 2 w(R)``; located on the piecewise-linear
    interpolant of the (monotone) profile, where the root is unique.
    """
    w = state.w.values
    r = state.w.grid.nodes
    target = 0.5 * w[0]
    if not w[0] > 2.0 * w[-1]:
        raise RegimeError("half height undefined: w(0) <= 2 w(R)")
    below = np.nonzero(w <= target)[0]
    if below.size == 0:
        raise RegimeError("half height not reached on the grid")
    i = int(below[0])
    if w[i] == target or i == 0:
        r0 = float(r[i])
    else:
        frac = (w[i - 1] - target) / (w[i - 1] - w[i])
        r0 = float(r[i - 1] + frac * (r[i] - r[i - 1]))
    return r0, r0**2 * target


def snapshot_monitors(state: State, params: Params, epsilon: float,
                      prev: tuple[float, np.ndarray] | None = None) -> MonitorSample:
    """Compute every monitored quantity for one state.

    ``prev`` supplies the previous sampled (t, w) pair for the discrete
    time derivative; without it ``wt_min`` is NaN.  A vanishing central
    density marks the division-based monitors as NaN (undefined sample).
    """
    grid = state.w.grid
    r = grid.nodes
    w = state.w.values
    n = params.n

    u_cons = u_from_w_conservative(state.w, n)
    mass = sphere_surface_area(n) * float(
        cumulative_weighted_integral(grid, u_cons.values, n)[-1]
    )
    u0_val = n * float(w[0])

    wr = radial_derivative(grid, w, even_at_origin=True)
    wr_max = float(np.max(wr))
    wr_scale = float(np.max(np.abs(wr)))

    if prev is not None and prev[0] < state.t:
        wt = (w - prev[1]) / (state.t - prev[0])
        wt_min = float(np.min(wt))
        wt_scale = float(np.max(np.abs(wt)))
    else:
        wt_min = math.nan
        wt_scale = math.nan

    j_max = float(np.max(wr + epsilon * r * w**2))

    u = u_from_w(state.w, n).values
    if u0_val > 0.0:
        pos = (u[1:] > 0.0)
        if np.any(pos):
            k_candidates = (1.0 / u[1:][pos] - 1.0 / u0_val) / r[1:][pos] ** 2
            k_bound = max(0.0, float(np.min(k_candidates)))
        else:
            k_bound = 0.0
        grad_ratio = wr_scale / float(w[0]) ** 1.5
    else:
        k_bound = math.nan
        grad_ratio = math.nan

    if np.min(w) > 0.0 and u0_val > 0.0:
        gap_terms = 1.0 / w - epsilon * r**2 / 2.0 - 1.0 / w[0]
        estimw_gap = float(np.min(gap_terms))
        gap_scale = float(np.max(1.0 / w))
    else:
        estimw_gap = math.nan
        gap_scale = math.nan

    try:
        r_half, r_half_sq_w = half_height(state)
    except RegimeError:
        r_half, r_half_sq_w = math.nan, math.nan

    return MonitorSample(
        t=state.t, mass=mass, u0=u0_val, wr_max=wr_max, wt_min=wt_min,
        j_max=j_max, k_bound=k_bound, estimw_gap=estimw_gap,
        grad_ratio=grad_ratio, r_half=r_half, r_half_sq_w=r_half_sq_w,
        wr_scale=wr_scale, wt_scale=wt_scale, gap_scale=gap_scale,
    )


def build_series(report, params: Params, epsilon: float) -> list[MonitorSample]:
    """Monitor samples for every stored snapshot of a run report."""
    samples = []
    prev = None
    for t, w in zip(report.snapshot_t, report.snapshots):
        state = State(RadialField(report.grid, w), float(t), report.u0_mass, 0)
        samples.append(snapshot_monitors(state, params, epsilon, prev=prev))
        prev = (float(t), w)
    return samples


def largest_valid_epsilon(grid: RadialGrid, snapshot_t, snapshots, t_start: float,
                          tol: float = 1e-8) -> tuple[float, bool]:
    """Largest lattice epsilon with ``max_r (w_r + eps r w^2) <= tol scale``
    at every snapshot from ``t_start`` on.

    Returns ``(0.0, True)`` when no positive lattice value passes (the
    caller should flag the run).
    """
    r = grid.nodes
    sel_wr, sel_rw2 = [], []
    for t, w in zip(snapshot_t, snapshots):
        if t < t_start:
            continue
        sel_wr.append(radial_derivative(grid, w, even_at_origin=True))
        sel_rw2.append(r * w**2)
    if not sel_wr:
        raise RegimeError("no snapshots at or beyond the requested start time")
    scales = [max(np.max(np.abs(wr)), 1e-300) for wr in sel_wr]
    for eps in sorted(EPSILON_LATTICE, reverse=True):
        ok = all(
            np.max(wr + eps * rw2) <= tol * sc
            for wr, rw2, sc in zip(sel_wr, sel_rw2, scales)
        )
        if ok:
            return eps, False
    return 0.0, True


def fit_profile_exponent(U: RadialField, window: tuple[float, float]) -> ProfileFit:
    """Fit ``log U`` against ``log r`` over the window.

    Requires the window inside the grid, spanning at least half a decade,
    with positive values throughout.
    """
    r_lo, r_hi = window
    r = U.grid.nodes
    if not (r_lo > 0.0 and r_hi <= r[-1] * (1 + 1e-12)):
        raise DomainError(f"window ({r_lo}, {r_hi}) not inside the grid")
    if r_hi / r_lo < math.sqrt(10.0):
        raise RegimeError("fit window must span at least half a decade")
    mask = (r >= r_lo) & (r <= r_hi)
    if np.count_nonzero(mask) < 6:
        raise RegimeError("fit window contains fewer than 6 nodes")
    vals = U.values[mask]
    if np.min(vals) <= 0.0:
        raise DomainError("profile fit requires positive values on the window")
    x = np.log(r[mask])
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return ProfileFit(p=float(slope), L=float(math.exp(intercept)),
                      r_lo=float(r_lo), r_hi=float(r_hi),
                      residual=float(np.sqrt(np.mean(resid**2))))


def select_final_profile(report, params: Params,
                         min_core_nodes: int = 8) -> tuple[RadialField, tuple[float, float], float]:
    """Pick the last snapshot that is finite and still resolves the
    half-height radius with at least ``min_core_nodes`` nodes; return its
    density together with the frozen-region fit window
    ``[2 r_half, min(0.3 R, 10 r_half)]``.
    """
    grid = report.grid
    R = grid.radius
    for t, w in zip(report.snapshot_t[::-1], report.snapshots[::-1]):
        if not np.all(np.isfinite(w)):
            continue
        state = State(RadialField(grid, w), float(t), report.u0_mass, 0)
        try:
            r_half, _ = half_height(state)
        except RegimeError:
            continue
        if np.count_nonzero(grid.nodes < r_half) < min_core_nodes:
            continue
        window = (2.0 * r_half, min(0.3 * R, 10.0 * r_half))
        if window[1] / window[0] < math.sqrt(10.0):
            continue
        U = u_from_w(state.w, params.n)
        return U, window, float(t)
    raise RegimeError("no snapshot resolves the half-height radius with enough nodes")


def concentration_mass(state: State, params: Params, deltas) -> np.ndarray:
    """Partial masses ``int_{B_delta} u`` from the conservative
    reconstruction, interpolated between nodes."""
    grid = state.w.grid
    n = params.n
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas < 0.0) or np.any(deltas > grid.radius * (1 + 1e-12)):
        raise DomainError("delta values must lie within the grid")
    u = u_from_w_conservative(state.w, n).values
    cum = sphere_surface_area(n) * cumulative_weighted_integral(grid, u, n)
    return np.interp(deltas, grid.nodes, cum)


def type_ratio(trace_t, trace_u0, T_est: float) -> SimpleNamespace:
    """The series ``(T_est - t) u(0,t)`` plus window statistics.

    ``window_min``/``window_max`` are taken over the last two decades of
    ``T_est - t``.
    """
    ts = np.asarray(trace_t, dtype=float)
    us = np.asarray(trace_u0, dtype=float)
    if not T_est > ts[-1]:
        raise DomainError("T_est must exceed every trace time")
    tau = T_est - ts
    ratio = tau * us
    window = tau <= 100.0 * tau[-1]
    return SimpleNamespace(
        tau=tau, ratio=ratio, window=window,
        window_min=float(np.min(ratio[window])),
        window_max=float(np.max(ratio[window])),
    )


def boundary_activity(report) -> float:
    """Largest ``|w_t|`` at the outermost interior node relative to the
    global ``|w_t|`` scale; a quasi-static far field keeps this small."""
    worst = 0.0
    prev = None
    for t, w in zip(report.snapshot_t, report.snapshots):
        if prev is not None and t > prev[0]:
            wt = (w - prev[1]) / (t - prev[0])
            scale = float(np.max(np.abs(wt)))
            if scale > 0.0:
                worst = max(worst, abs(float(wt[-2])) / scale)
        prev = (t, w)
    return worst
