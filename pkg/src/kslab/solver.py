"""Time integration of the transformed scalar equation

    w_t = w_rr + (n+1)/r w_r + n (w + b r w_r)(w - mu_tilde)

on a ball or a truncated whole space, with adaptive steps that track the
quadratic reaction timescale, blowup detection, and blowup-time estimation
by linear extrapolation of 1/u(0,t).

The diffusion operator is the radial Laplacian in n+2 dimensions.  It is
assembled in finite-volume form (fluxes weighted by r^{n+1} across cell
faces): this reduces to the symmetric limit (n+2) w_rr at the origin,
keeps the implicit matrix an M-matrix on graded grids, and therefore
preserves radial monotonicity to rounding, which the monitor tolerances
rely on.  The drift part of the reaction stays explicit so the implicit
system remains tridiagonal.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import Params, RadialField, RadialGrid, State, field_mass, w_from_u
from .errors import ConfigError, NumericalBreakdown

__all__ = [
    "StepperConfig",
    "MonitorConfig",
    "BlowupStatus",
    "RunReport",
    "step",
    "run",
    "detect_blowup",
]

logger = logging.getLogger(__name__)

_STEP_CAP = 20_000_000


@dataclass(frozen=True)
class StepperConfig:
    """Adaptive IMEX stepping controls.

    ``dt_init`` caps the very first step, after which the step follows
    ``dt = cfl_target / ||u||_inf``.  Blowup is declared only when the
    density exceeds ``u_blowup_threshold`` *and* the step has shrunk to
    ``dt_floor``; the conjunction is robust against grid-dependent
    threshold crossings.
    """

    scheme: str = "imex"
    dt_init: float = 1e-4
    dt_floor: float = 1e-11
    cfl_target: float = 0.02
    u_blowup_threshold: float = 1e8
    t_max: float = 10.0

    def __post_init__(self):
        if self.scheme != "imex":
            raise ConfigError(f"unsupported scheme {self.scheme!r}")
        if not (0.0 < self.dt_floor < self.dt_init):
            raise ConfigError("dt_floor must satisfy 0 < dt_floor < dt_init")
        if not (0.0 < self.cfl_target):
            raise ConfigError("cfl_target must be positive")
        if not (self.u_blowup_threshold > 0.0 and self.t_max > 0.0):
            raise ConfigError("threshold and t_max must be positive")


@dataclass(frozen=True)
class MonitorConfig:
    """Sampling cadence and post-processing knobs for a run."""

    stride: int = 20
    epsilon: float = 1e-3
    deltas: tuple = (0.02, 0.05, 0.1, 0.2)
    checkpoint_stride: int = 0
    checkpoint_cb: object = None
    capture_snapshots: bool = True


@dataclass(frozen=True)
class BlowupStatus:
    """Outcome of a run or of a trace analysis."""

    kind: str  # "blowup" | "no_blowup_by" | "inconclusive"
    T_est: float | None = None
    T_err: float | None = None
    t_max: float | None = None
    low_confidence: bool = False
    reason: str = ""
    trace_tail: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))


@dataclass
class RunReport:
    """Full record of one run: per-step trace, sampled states, outcome."""

    params: Params
    grid: RadialGrid
    stepper: StepperConfig
    status: BlowupStatus
    trace_t: np.ndarray
    trace_u0: np.ndarray
    trace_dt: np.ndarray
    snapshot_t: np.ndarray
    snapshots: list
    final_state: State
    u0_mass: float
    steps: int
    wall_time: float
    breakdown: bool = False
    checkpoints: list = field(default_factory=list)


class _Workspace:
    """Grid- and parameter-dependent coefficient arrays for the kernels."""

    def __init__(self, grid: RadialGrid, params: Params):
        r = grid.nodes
        N = grid.N
        n = params.n
        m_dim = n + 2
        h = np.diff(r)
        faces = 0.5 * (r[:-1] + r[1:])
        areas = faces ** (n + 1)
        vol = np.empty(N)  # cell "volumes" under the r^{n+1} dr measure
        vol[0] = faces[0] ** m_dim / m_dim
        vol[1:] = (faces[1:] ** m_dim - faces[:-1] ** m_dim) / m_dim

        lap_sub = np.zeros(N + 1)
        lap_sup = np.zeros(N + 1)
        lap_diag = np.zeros(N + 1)
        lap_sup[0] = areas[0] / (h[0] * vol[0])
        lap_diag[0] = -lap_sup[0]
        idx = np.arange(1, N)
        lap_sub[idx] = areas[idx - 1] / (h[idx - 1] * vol[idx])
        lap_sup[idx] = areas[idx] / (h[idx] * vol[idx])
        lap_diag[idx] = -(lap_sub[idx] + lap_sup[idx])

        der_m = np.zeros(N + 1)
        der_0 = np.zeros(N + 1)
        der_p = np.zeros(N + 1)
        hm, hp = h[:-1], h[1:]
        der_m[1:-1] = -hp / (hm * (hm + hp))
        der_p[1:-1] = hm / (hp * (hm + hp))
        der_0[1:-1] = (hp - hm) / (hm * hp)

        self.r = np.ascontiguousarray(r)
        self.lap_sub = lap_sub
        self.lap_diag = lap_diag
        self.lap_sup = lap_sup
        self.der_m = der_m
        self.der_0 = der_0
        self.der_p = der_p
        self.n = float(n)
        self.b = params.b
        self.mu_tilde = params.mu_tilde

    def step_into(self, w: np.ndarray, dt: float, bc_value: float, out: np.ndarray) -> None:
        kernels.imex_step(
            w, out, self.r,
            self.lap_sub, self.lap_diag, self.lap_sup,
            self.der_m, self.der_0, self.der_p,
            dt, self.n, self.b, self.mu_tilde, bc_value,
        )


def step(state: State, dt: float, params: Params, config: StepperConfig | None = None) -> State:
    """Advance one IMEX step of size ``dt``.

    The boundary node is pinned to its current value (``mu_tilde`` on a
    ball by the boundary condition; the quasi-static far-field value on a
    truncated whole space).
    """
    if not dt > 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    ws = _Workspace(state.w.grid, params)
    w = np.ascontiguousarray(state.w.values)
    out = np.empty_like(w)
    ws.step_into(w, dt, w[-1], out)
    if not np.all(np.isfinite(out)):
        raise NumericalBreakdown(f"non-finite state after step at t={state.t}")
    return State(
        w=RadialField(state.w.grid, out),
        t=state.t + dt,
        u0_mass=state.u0_mass,
        step_index=state.step_index + 1,
    )


def detect_blowup(trace_t, trace_u0, config: StepperConfig,
                  dt_at_floor: bool | None = None) -> BlowupStatus:
    """Classify a (t, u(0,t)) trace and estimate the blowup time.

    Blowup requires the threshold crossing (and, when known, the step
    floor).  ``T_est`` comes from a least-squares line through 1/u over
    the last decade of growth; ``T_err`` propagates the fit covariance to
    the root.  A non-monotone tail or a bad fit yields ``inconclusive``,
    and a curved tail (type-II-like) is flagged low-confidence.
    """
    ts = np.asarray(trace_t, dtype=float)
    us = np.asarray(trace_u0, dtype=float)
    if ts.size < 8:
        return BlowupStatus(kind="inconclusive", reason="trace shorter than 8 samples")
    tail = np.column_stack([ts[-16:], us[-16:]])
    u_last = us[-1]

    if np.max(us) < config.u_blowup_threshold:
        if ts[-1] >= config.t_max * (1.0 - 1e-12):
            return BlowupStatus(kind="no_blowup_by", t_max=config.t_max,
                                reason="t_max reached below threshold", trace_tail=tail)
        return BlowupStatus(kind="inconclusive", reason="stopped below threshold before t_max",
                            trace_tail=tail)
    if dt_at_floor is False:
        return BlowupStatus(kind="inconclusive", reason="threshold crossed with dt above floor",
                            trace_tail=tail)

    window = us >= u_last / 10.0
    if np.count_nonzero(window) < 8:
        window = np.zeros_like(window)
        window[-8:] = True
    tw, uw = ts[window], us[window]
    if np.any(np.diff(uw) < 0.0):
        return BlowupStatus(kind="inconclusive", reason="non-monotone tail", trace_tail=tail)

    y = 1.0 / uw
    try:
        (slope, intercept), cov = np.polyfit(tw, y, 1, cov=True)
    except (np.linalg.LinAlgError, ValueError):
        return BlowupStatus(kind="inconclusive", reason="fit failure", trace_tail=tail)
    if not slope < 0.0:
        return BlowupStatus(kind="inconclusive", reason="nonnegative fit slope", trace_tail=tail)
    T_est = -intercept / slope
    if not T_est > tw[-1]:
        return BlowupStatus(kind="inconclusive", reason="extrapolated time not past the trace",
                            trace_tail=tail)
    resid = y - (slope * tw + intercept)
    rel_resid = float(np.sqrt(np.mean(resid**2)) / np.sqrt(np.mean(y**2)))
    # var(-c/m) to first order from the fit covariance
    dT_dm = intercept / slope**2
    dT_dc = -1.0 / slope
    var = dT_dm**2 * cov[0, 0] + dT_dc**2 * cov[1, 1] + 2.0 * dT_dm * dT_dc * cov[0, 1]
    T_err = float(np.sqrt(max(var, 0.0)))
    return BlowupStatus(
        kind="blowup", T_est=float(T_est), T_err=T_err,
        low_confidence=rel_resid > 1e-2,
        reason=f"relative fit residual {rel_resid:.2e}",
        trace_tail=tail,
    )


def run(u0: RadialField, params: Params, config: StepperConfig,
        monitors: MonitorConfig | None = None,
        resume_state: State | None = None) -> RunReport:
    """Integrate from the initial density (or a resumed state) to blowup,
    ``t_max``, or breakdown.

    The step size follows ``dt = cfl_target / ||u||_inf`` clipped to
    ``[dt_floor, ...]`` and to the remaining time, where
    ``||u||_inf = n max(w)``.  States are snapshotted every
    ``monitors.stride`` steps for post-hoc diagnostics; the per-step
    (t, u(0,t), dt) trace is always recorded.  Deterministic: the step
    size depends only on the current state, so a resumed run reproduces
    the original trace bitwise.
    """
    mon = monitors or MonitorConfig()
    t_start = _time.perf_counter()

    grid = u0.grid
    ws = _Workspace(grid, params)
    if resume_state is not None:
        w = np.ascontiguousarray(resume_state.w.values).copy()
        t = resume_state.t
        k = resume_state.step_index
        mass0 = resume_state.u0_mass
    else:
        w = np.ascontiguousarray(w_from_u(u0, params.n).values).copy()
        t = 0.0
        k = 0
        mass0 = field_mass(u0, params.n)
    bc_value = float(w[-1])
    out = np.empty_like(w)

    trace_t, trace_u0, trace_dt = [t], [params.n * float(w[0])], [0.0]
    snapshot_t, snapshots = [], []
    checkpoints = []
    breakdown = False
    at_floor = False

    def _snapshot():
        snapshot_t.append(t)
        if mon.capture_snapshots:
            snapshots.append(w.copy())

    _snapshot()
    stop_reason = None
    while True:
        u_max = params.n * float(np.max(w))
        dt = config.cfl_target / u_max
        if k == 0:
            dt = min(dt, config.dt_init)
        dt = max(dt, config.dt_floor)
        at_floor = dt <= config.dt_floor * (1.0 + 1e-12)
        remaining = config.t_max - t
        if remaining <= 0.0:
            stop_reason = "t_max"
            break
        dt = min(dt, remaining)

        ws.step_into(w, dt, bc_value, out)
        if not np.all(np.isfinite(out)):
            breakdown = True
            stop_reason = "breakdown"
            break
        w, out = out, w
        t += dt
        k += 1
        u0_now = params.n * float(w[0])
        trace_t.append(t)
        trace_u0.append(u0_now)
        trace_dt.append(dt)

        if k % mon.stride == 0:
            _snapshot()
        if mon.checkpoint_stride and k % mon.checkpoint_stride == 0 and mon.checkpoint_cb:
            record = mon.checkpoint_cb(State(RadialField(grid, w.copy()), t, mass0, k))
            if record is not None:
                checkpoints.append(record)

        if u0_now >= config.u_blowup_threshold and at_floor:
            stop_reason = "blowup"
            break
        if t >= config.t_max * (1.0 - 1e-15):
            stop_reason = "t_max"
            break
        if k >= _STEP_CAP:
            stop_reason = "step_cap"
            break

    if not snapshot_t or snapshot_t[-1] != t:
        _snapshot()

    trace_t = np.asarray(trace_t)
    trace_u0 = np.asarray(trace_u0)
    trace_dt = np.asarray(trace_dt)
    if breakdown:
        status = BlowupStatus(kind="inconclusive", reason="numerical breakdown",
                              trace_tail=np.column_stack([trace_t[-16:], trace_u0[-16:]]))
    else:
        status = detect_blowup(trace_t, trace_u0, config, dt_at_floor=at_floor)
        if stop_reason == "step_cap" and status.kind == "no_blowup_by":
            status = BlowupStatus(kind="inconclusive", reason="step cap reached")

    final = State(RadialField(grid, w.copy()), t, mass0, k)
    wall = _time.perf_counter() - t_start
    logger.info("run finished: %s after %d steps, t=%.6g, wall %.2fs",
                status.kind, k, t, wall)
    return RunReport(
        params=params, grid=grid, stepper=config, status=status,
        trace_t=trace_t, trace_u0=trace_u0, trace_dt=trace_dt,
        snapshot_t=np.asarray(snapshot_t), snapshots=snapshots,
        final_state=final, u0_mass=mass0, steps=k, wall_time=wall,
        breakdown=breakdown, checkpoints=checkpoints,
    )
