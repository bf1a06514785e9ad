"""Euler-Lagrange residual and an area-preserving gradient flow for the screened energy.

The first variation of F under a normal displacement V (outward normal) is

    dF = oint V (kappa + v - lam/(2 alpha)) ds,   v(x) = (lam**2/2 pi) int_Omega e^{-lam alpha|x-y|}/|x-y| dy,

so stationary sets of fixed area satisfy kappa + v = mu, the constant being
absorbed into the multiplier mu.  The flow moves the boundary with
V = -(kappa + v - mu), mu the length-weighted mean of kappa + v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curve import ClosedCurve, CurveSystem, resample_constant_speed
from .energy import (DEFAULT_TOL, _check_tol, _locate, _tangent_breakpoints, energy_boundary, fmt12,
                     layer_boundary_potential)
from .parallel import parallel_map
from .quadrature import adaptive_gk
from .rays import DEFAULT_OVERSAMPLE, RayCaster, alternating_exponential_sums
from .specfun import ScreeningParams

TRACE_HEADER = "step,energy,area,residual"
AREA_RTOL = 1e-4
JITTER_RELTOL = 1e-8


class TopologyError(RuntimeError):
    """The evolving curve intersected itself."""


@dataclass
class FlowState:
    system: CurveSystem
    step_index: int
    dt: float
    energy_history: list = field(default_factory=list)
    area_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    recorded_steps: list = field(default_factory=list)
    halted: str | None = None

    def trace_rows(self) -> list:
        return [",".join([str(s), fmt12(e), fmt12(a), fmt12(r)])
                for s, e, a, r in zip(self.recorded_steps, self.energy_history, self.area_history,
                                      self.residual_history)]

    def trace_csv(self) -> str:
        return "\n".join([TRACE_HEADER, *self.trace_rows()]) + "\n"


def potential_v(system: CurveSystem, params: ScreeningParams, x, tol: float = DEFAULT_TOL,
                oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """(lam**2/2 pi) int_Omega e^{-lam alpha |x-y|}/|x-y| dy by polar quadrature about x."""
    _check_tol(tol)
    x = np.asarray(x, dtype=float).copy()
    inside, flagged = system.contains(x[None, :], strict=False)
    beta = params.beta
    reach = (math.log(1.0 / tol) + 2.0) / beta
    if flagged[0]:
        osys = system.oriented()
        try:
            ci, t = _locate(osys, x)
        except ValueError:
            # close to a curve but not on it: step off along the nearest normal
            x = x + JITTER_RELTOL * system.perimeter * _nearest_normal(osys, x)
            inside, flagged = system.contains(x[None, :], strict=False)
        else:
            return _potential_on_curve(osys, ci, t, x, params, tol, reach, oversample)
    caster = RayCaster(system, x, reach, oversample=oversample)
    start = bool(inside[0])

    def fn(theta):
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        ri, dist = caster.crossings(dirs)
        return alternating_exponential_sums(ri, dist, theta.size, beta, np.full(theta.size, start)) / beta

    val, _ = adaptive_gk(fn, np.linspace(0.0, 2.0 * math.pi, 33), tol)
    return params.lam**2 / (2.0 * math.pi) * val


def _potential_on_curve(osys: CurveSystem, ci: int, t: float, x: np.ndarray, params: ScreeningParams,
                        tol: float, reach: float, oversample: int) -> float:
    """v at a boundary point: rays leave the curve itself and start inside on the inward half-plane."""
    g1 = osys.curves[ci].evaluate(np.array([t]), 1)[0]
    tau = g1 / math.hypot(g1[0], g1[1])
    nu = np.array([tau[1], -tau[0]])
    caster = RayCaster(osys, x, reach, self_curve=ci, self_t=t, oversample=oversample)
    beta = params.beta

    def fn(theta):
        s = np.sin(theta)
        dirs = np.cos(theta)[:, None] * tau[None, :] - s[:, None] * nu[None, :]
        ri, dist = caster.crossings(dirs)
        return alternating_exponential_sums(ri, dist, theta.size, beta, s > 0) / beta

    val, _ = adaptive_gk(fn, _tangent_breakpoints(), tol)
    return params.lam**2 / (2.0 * math.pi) * val


def _nearest_normal(system: CurveSystem, x: np.ndarray) -> np.ndarray:
    best = None
    for ci, dense in enumerate(system._dense):
        dist, seg = dense.distance_to_polyline(x[None, :])
        if best is None or dist[0] < best[0]:
            best = (dist[0], ci, int(seg[0]))
    _, ci, seg = best
    _, _, g1 = system._dense[ci].foot_point(complex(x[0], x[1]), seg)
    tau = g1 / abs(g1)
    return np.array([tau.imag, -tau.real])


def boundary_potential(system: CurveSystem, params: ScreeningParams, method: str = "layer",
                       tol: float = DEFAULT_TOL, threads: int | None = None) -> list:
    """v at every sample of every curve of an outward-oriented system."""
    if method == "layer":
        return layer_boundary_potential(system, params)
    if method == "rays":
        out = []
        for c in system.curves:
            out.append(np.array(parallel_map(lambda p: potential_v(system, params, p, tol), list(c.points),
                                             threads)))
        return out
    raise ValueError(f"unknown potential method {method!r}")


def _residual_parts(osys: CurveSystem, params: ScreeningParams, method: str = "layer"):
    v = boundary_potential(osys, params, method)
    r = [c.curvature + vi for c, vi in zip(osys.curves, v)]
    num = math.fsum(math.fsum((ri * c.speed).tolist()) for ri, c in zip(r, osys.curves))
    den = math.fsum(math.fsum(c.speed.tolist()) for c in osys.curves)
    return r, num / den


def el_residual(system: CurveSystem, params: ScreeningParams, method: str = "layer") -> float:
    """max |kappa + v - mu| over boundary samples, normalised by max(1, |mu|)."""
    osys = system.oriented()
    r, mu = _residual_parts(osys, params, method)
    dev = max(float(np.max(np.abs(ri - mu))) for ri in r)
    return dev / max(1.0, abs(mu))


def _self_intersects(curve: ClosedCurve) -> bool:
    """Segment crossing test on the sample polygon, adjacent segments excluded."""
    p = curve.points
    q = np.roll(p, -1, axis=0)
    n = p.shape[0]

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    a, b = p[:, None, :], q[:, None, :]
    c, d = p[None, :, :], q[None, :, :]
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    cross = (o1 * o2 < 0) & (o3 * o4 < 0)
    i, j = np.indices((n, n))
    gap = np.abs(i - j)
    cross &= (gap > 1) & (gap < n - 1)
    return bool(np.any(cross))


def _homothety_to_area(curve: ClosedCurve, area: float) -> ClosedCurve:
    return curve.scaled(math.sqrt(area / abs(curve.signed_area)), curve.centroid)


def flow_run(initial: CurveSystem, params: ScreeningParams, steps: int, dt_safety: float = 0.2,
             energy_every: int = 10, area: float = math.pi, trace_path=None, snapshot_every: int | None = None,
             snapshot_dir=None) -> FlowState:
    """Explicit area-preserving descent V = -(kappa + v - mu) on a single closed curve.

    Each step moves samples along the outward normal, restores constant speed,
    and rescales about the centroid to the prescribed area.  Energy, area and
    residual are recorded every ``energy_every`` steps (and at the end).
    """
    if len(initial) != 1:
        raise ValueError("the flow handles single-curve systems only")
    system = initial.oriented()
    if abs(system.area - area) > 1e-6 * area:
        raise ValueError(f"initial area {system.area:.9g} differs from {area:.9g}; rescale first")
    curve = resample_constant_speed(system.curves[0])
    state = FlowState(CurveSystem((curve,)), 0, 0.0)

    def record(step, osys, r, mu):
        rep = energy_boundary(osys, params, quadrature="layer")
        res = max(float(np.max(np.abs(ri - mu))) for ri in r) / max(1.0, abs(mu))
        state.recorded_steps.append(step)
        state.energy_history.append(rep.total)
        state.area_history.append(osys.area)
        state.residual_history.append(res)

    for step in range(steps + 1):
        osys = CurveSystem((curve,))
        r, mu = _residual_parts(osys, params)
        if step % energy_every == 0 or step == steps:
            record(step, osys, r, mu)
        if step == steps:
            break
        vel = -(r[0] - mu)
        ds = curve.length / curve.n
        dt = dt_safety * min(ds * ds, ds / (1.0 + float(np.max(np.abs(vel)))))
        moved = ClosedCurve(curve.points + dt * vel[:, None] * curve.normal)
        curve = _homothety_to_area(resample_constant_speed(moved), area)
        state.step_index = step + 1
        state.dt = dt
        if _self_intersects(curve):
            state.halted = f"self-intersection at step {step + 1}"
            state.system = CurveSystem((curve,))
            _write_trace(state, trace_path)
            raise TopologyError(state.halted)
        if snapshot_every and snapshot_dir and (step + 1) % snapshot_every == 0:
            CurveSystem((curve,)).save(Path(snapshot_dir) / f"curve_{step + 1:06d}.json")
    state.system = CurveSystem((curve,))
    _write_trace(state, trace_path)
    return state


def _write_trace(state: FlowState, path) -> None:
    if path is None:
        return
    from .io import atomic_write_text

    atomic_write_text(path, state.trace_csv())
