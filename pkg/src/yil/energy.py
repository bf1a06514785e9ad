"""Screened nonlocal perimeter energy in bulk and boundary form.

The energy of a planar set is

    F(Omega) = P(Omega) - (lam**2 / 4 pi) int_Omega int_{Omega^c} e^{-lam alpha |x-y|} / |x-y|,

which can be rewritten as a perimeter term with coefficient 1 - 1/(2 pi alpha**2)
plus a boundary integral of a nonnegative local quantity

    I(y) = int_{H(y) sym.diff. lam (Omega - y)} |nu . z/|z|| e^{-alpha |z|} / |z| dz,

where H(y) is the half-plane {z : nu(y) . z < 0}.  ``energy_bulk`` evaluates the
first form on a raster, ``energy_boundary`` the second one by ray casting (or,
for speed, through the exact single-layer identity below).

Layer identity: changing variables from ray angle to the curve parameter of
each crossing turns I(y) into a boundary integral,

    I(y) = -(1/alpha) oint (nu(y) . e)(nu(x) . e) e^{-lam alpha |x-y|} / |x-y| ds_x,
    e = (x - y)/|x - y|,

valid for curves oriented with outward normals.  The integrand is continuous
with a kink at x = y, handled by Gregory end corrections.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import raster
from .curve import CurveSystem, ProximityError
from .parallel import parallel_map
from .quadrature import adaptive_gk, gregory_weights
from .rays import DEFAULT_OVERSAMPLE, RayCaster, alternating_exponential_sums, fine_samples
from .specfun import ScreeningParams, phi_alpha_prime

METHODS = ("bulk", "boundary_isotropic", "boundary_anisotropic")
CSV_HEADER = "lambda,alpha,method,perimeter_term,nonlocal_term,total,est_error"
DEFAULT_TOL = 1e-8
LAYER_POINTS_PER_DECAY = 16
BULK_SHIFTS = 4


def fmt12(x: float) -> str:
    """Fixed 12-significant-digit rendering used for every CSV number."""
    return f"{float(x):.12g}"


@dataclass(frozen=True)
class EnergyReport:
    perimeter_term: float
    nonlocal_term: float
    total: float
    method: str
    est_error: float

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self, lam: float, alpha: float) -> str:
        return ",".join([fmt12(lam), fmt12(alpha), self.method, fmt12(self.perimeter_term),
                         fmt12(self.nonlocal_term), fmt12(self.total), fmt12(self.est_error)])


@dataclass(frozen=True, eq=False)
class AnisotropicFrame:
    """Rotation taking the normal to e2 followed by the dilation diag(lam, lam**2)."""

    rotation: np.ndarray
    dilation: np.ndarray

    @classmethod
    def from_normal(cls, nu, lam: float) -> "AnisotropicFrame":
        nu = np.asarray(nu, dtype=float)
        nu = nu / math.hypot(nu[0], nu[1])
        nu_perp = np.array([-nu[1], nu[0]])
        # R = e2 (x) nu - e1 (x) nu_perp: rows are (-nu_perp, nu)
        rot = np.vstack([-nu_perp, nu])
        return cls(rot, np.diag([lam, lam * lam]))

    @property
    def matrix(self) -> np.ndarray:
        return self.dilation @ self.rotation

    def physical_direction(self, phi):
        """Un-normalised physical vectors R^T A^{-1} (cos phi, sin phi), shape (M, 2)."""
        inv = self.rotation.T @ np.diag(1.0 / np.diag(self.dilation))
        phi = np.asarray(phi, dtype=float)
        return np.column_stack([np.cos(phi), np.sin(phi)]) @ inv.T


# -- bulk representation -------------------------------------------------------------------


def energy_bulk(system: CurveSystem, params: ScreeningParams, h: float, shifts: int = BULK_SHIFTS,
                seed: int = 0) -> EnergyReport:
    """Raster evaluation averaged over ``shifts`` sub-cell grid offsets.

    The error estimate adds the spread between spacing h and a coarser spacing
    (staircase bias) to twice the standard error of the shift averages.
    """
    cross, err = raster.shift_averaged(
        system, h, lambda region: raster.cross_interaction(region, params.lam, params.alpha),
        params.beta, shifts, seed)
    pref = params.lam**2 / (4.0 * math.pi)
    perimeter = system.perimeter
    nonlocal_term = -pref * cross
    return EnergyReport(perimeter, nonlocal_term, perimeter + nonlocal_term, "bulk", pref * err)


# -- boundary representation: ray casting -----------------------------------------------------


def _reach(params: ScreeningParams, tol: float) -> float:
    """Physical radial cutoff: ln(1/tol)/alpha + 2/alpha in blown-up units, divided by lam."""
    return (math.log(1.0 / tol) + 2.0) / params.alpha / params.lam


def _check_tol(tol: float) -> None:
    if not 1e-10 < tol < 1e-2:
        raise ValueError(f"tol must lie in (1e-10, 1e-2), got {tol}")


def _graded(center: float, side: int) -> list:
    steps = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.05, 0.15, 0.4, 0.8]
    return [center + side * s for s in steps]


def _tangent_breakpoints(n_uniform: int = 8) -> np.ndarray:
    pts = list(np.linspace(0.0, 2.0 * math.pi, 2 * n_uniform + 1))
    for c in (0.0, math.pi, 2.0 * math.pi):
        if c > 0:
            pts += _graded(c, -1)
        if c < 2.0 * math.pi:
            pts += _graded(c, +1)
    return np.unique(np.array(pts))


def _locate(system: CurveSystem, y) -> tuple[int, float]:
    """Curve index and parameter of a boundary point."""
    y = np.asarray(y, dtype=float)
    best = None
    for ci, (curve, dense) in enumerate(zip(system.curves, system._dense)):
        hit = np.flatnonzero(np.all(curve.points == y, axis=1))
        if hit.size:
            return ci, hit[0] / curve.n
        dist, seg = dense.distance_to_polyline(y[None, :])
        if best is None or dist[0] < best[0]:
            best = (dist[0], ci, seg[0])
    dist, ci, seg = best
    t, g, _ = system._dense[ci].foot_point(complex(y[0], y[1]), int(seg))
    if abs(g - complex(y[0], y[1])) > 1e-8 * system.perimeter:
        raise ValueError("point does not lie on the boundary of the system")
    return ci, t % 1.0


def _isotropic_integrand(caster: RayCaster, nu: np.ndarray, params: ScreeningParams):
    u = np.array([-nu[1], nu[0]])

    def fn(theta):
        c, s = np.cos(theta), np.sin(theta)
        dirs = c[:, None] * u[None, :] - s[:, None] * nu[None, :]
        ri, dist = caster.crossings(dirs)
        sums = alternating_exponential_sums(ri, dist, theta.size, params.beta)
        return np.abs(s) * sums / params.alpha

    return fn


def _anisotropic_integrand(caster: RayCaster, nu: np.ndarray, params: ScreeningParams):
    frame = AnisotropicFrame.from_normal(nu, params.lam)
    lam2 = params.lam**2

    def fn(phi):
        w = frame.physical_direction(phi)
        dirs = w / np.hypot(w[:, 0], w[:, 1])[:, None]
        ri, dist = caster.crossings(dirs)
        sums = alternating_exponential_sums(ri, dist, phi.size, params.beta)
        s = np.sin(phi)
        a = np.sqrt(np.cos(phi) ** 2 + s * s / lam2)
        return np.abs(s) * sums / (lam2 * params.alpha * a**3)

    return fn


def _inner(system, ci, t, y, nu, params, tol, anisotropic, oversample):
    caster = RayCaster(system, y, _reach(params, tol), self_curve=ci, self_t=t, oversample=oversample)
    nu = np.asarray(nu, dtype=float)
    nu = nu / math.hypot(nu[0], nu[1])
    make = _anisotropic_integrand if anisotropic else _isotropic_integrand
    return adaptive_gk(make(caster, nu, params), _tangent_breakpoints(), tol)


def boundary_inner_integral(system: CurveSystem, y, nu, params: ScreeningParams, tol: float = DEFAULT_TOL,
                            oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """Blown-up symmetric-difference integral I(y) in polar coordinates about y."""
    _check_tol(tol)
    ci, t = _locate(system, y)
    return _inner(system, ci, t, y, nu, params, tol, False, oversample)[0]


def boundary_inner_anisotropic(system: CurveSystem, y, nu, params: ScreeningParams,
                               tol: float = DEFAULT_TOL, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """I(y) evaluated in the frame that maps nu to e2 and dilates by diag(lam, lam**2)."""
    _check_tol(tol)
    ci, t = _locate(system, y)
    return _inner(system, ci, t, y, nu, params, tol, True, oversample)[0]


def inner_integrals(system: CurveSystem, params: ScreeningParams, tol: float = DEFAULT_TOL,
                    anisotropic: bool = False, oversample: int = DEFAULT_OVERSAMPLE,
                    threads: int | None = None):
    """I and its quadrature error at every sample of every curve (outward normals)."""
    osys = system.oriented()
    tasks = [(ci, k) for ci, c in enumerate(osys.curves) for k in range(c.n)]

    def one(task):
        ci, k = task
        c = osys.curves[ci]
        return _inner(osys, ci, k / c.n, c.points[k], c.normal[k], params, tol, anisotropic, oversample)

    results = parallel_map(one, tasks, threads)
    values, errors, pos = [], [], 0
    for c in osys.curves:
        chunk = results[pos : pos + c.n]
        pos += c.n
        values.append(np.array([r[0] for r in chunk]))
        errors.append(np.array([r[1] for r in chunk]))
    return osys, values, errors


def _outer(osys: CurveSystem, values) -> tuple[float, float]:
    """Trapezoid sums of I |gamma'| over N and over every second sample."""
    full, half = [], []
    for c, v in zip(osys.curves, values):
        w = v * c.speed
        full.append(math.fsum(w.tolist()) / c.n)
        half.append(math.fsum(w[::2].tolist()) / (c.n // 2) if c.n % 2 == 0 else full[-1])
    return math.fsum(full), math.fsum(half)


def energy_boundary(system: CurveSystem, params: ScreeningParams, tol: float = DEFAULT_TOL,
                    anisotropic: bool = False, quadrature: str = "rays",
                    oversample: int = DEFAULT_OVERSAMPLE, threads: int | None = None) -> EnergyReport:
    """Perimeter term plus (1/(4 pi alpha)) times the boundary integral of I.

    ``quadrature="rays"`` integrates I(y) in polar coordinates at every sample;
    ``quadrature="layer"`` uses the single-layer identity (isotropic only).
    """
    _check_tol(tol)
    coef = params.perimeter_coefficient
    perimeter_term = coef * system.perimeter
    method = "boundary_anisotropic" if anisotropic else "boundary_isotropic"
    if quadrature == "rays":
        osys, values, errors = inner_integrals(system, params, tol, anisotropic, oversample, threads)
        total_i, half_i = _outer(osys, values)
        quad_err = math.fsum(math.fsum((e * c.speed).tolist()) / c.n for c, e in zip(osys.curves, errors))
    elif quadrature == "layer":
        if anisotropic:
            raise ValueError("the layer identity is isotropic; use quadrature='rays'")
        osys = system.oriented()
        values = layer_inner_integrals(osys, params)
        coarse = layer_inner_integrals(osys, params, points_per_decay=LAYER_POINTS_PER_DECAY // 2)
        total_i, half_i = _outer(osys, values)
        quad_err = abs(total_i - _outer(osys, coarse)[0])
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    scale = 1.0 / (4.0 * math.pi * params.alpha)
    nonlocal_term = scale * total_i
    err = scale * (quad_err + abs(total_i - half_i)) + tol * system.perimeter * scale
    return EnergyReport(perimeter_term, nonlocal_term, perimeter_term + nonlocal_term, method, err)


def energy(system: CurveSystem, params: ScreeningParams, method: str = "boundary_isotropic",
           tol: float = DEFAULT_TOL, h: float | None = None, threads: int | None = None) -> EnergyReport:
    """Dispatch on the method name of an EnergyReport."""
    if method == "bulk":
        if h is None:
            raise ValueError("bulk energy needs a grid spacing h")
        return energy_bulk(system, params, h)
    if method == "boundary_isotropic":
        return energy_boundary(system, params, tol, threads=threads)
    if method == "boundary_anisotropic":
        return energy_boundary(system, params, tol, anisotropic=True, threads=threads)
    raise ValueError(f"unknown method {method!r}")


def halfplane_constant(lam: float, alpha: float) -> float:
    """int over the half-plane {nu . (x-y) < 0} of nu.(x-y)/|x-y| |Phi'_{lam alpha}(|x-y|)| dx."""
    from scipy import integrate

    if not (lam > 0 and alpha > 0):
        raise ValueError("lambda and alpha must be positive")
    beta = lam * alpha
    # polar coordinates about y: nu . e = -cos(theta) for theta in (-pi/2, pi/2)
    radial, _ = integrate.quad(lambda r: abs(phi_alpha_prime(r, beta)) * r if r > 0 else 1.0 / beta,
                               0.0, math.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    angular, _ = integrate.quad(lambda th: -math.cos(th), -math.pi / 2, math.pi / 2, epsabs=1e-14, epsrel=1e-12)
    return angular * radial


# -- boundary representation: single-layer identity ---------------------------------------------


def _layer_grid(curve, beta: float, points_per_decay: int) -> int:
    """Fine-grid factor f (fine size f*N) with spacing at most 1/(points_per_decay*beta)."""
    m_needed = curve.length * points_per_decay * beta
    return max(2, int(math.ceil(m_needed / curve.n)))


def _layer_sum(osys: CurveSystem, params: ScreeningParams, points_per_decay: int, kernel, self_value,
               order: int = 6, chunk: int = 64):
    """Sum over source curves of oint kernel(x_target, source) ds with Gregory-corrected self terms."""
    beta = params.beta
    out = []
    fine = []
    for c in osys.curves:
        f = _layer_grid(c, beta, points_per_decay)
        z, dz = fine_samples(c, f * c.n)
        speed = np.abs(dz)
        tang = dz / speed
        fine.append((f, z, speed, tang.imag - 1j * tang.real))
    for ti, tc in enumerate(osys.curves):
        tz = tc.z
        tnu = tc.normal[:, 0] + 1j * tc.normal[:, 1]
        acc = np.zeros(tc.n)
        for si, (f, z, speed, nu_src) in enumerate(fine):
            m = z.size
            if si == ti:
                w = gregory_weights(m, order)[:m] / m
                w[0] = 0.0
            else:
                w = np.full(m, 1.0 / m)
            for s0 in range(0, tc.n, chunk):
                k = np.arange(s0, min(s0 + chunk, tc.n))
                d = z[None, :] - tz[k, None]
                if si == ti:
                    # target k sits on fine node k*f; rotate weights so offset 0 is the target
                    offs = (np.arange(m)[None, :] - (k * f)[:, None]) % m
                    wk = w[offs]
                    d[np.arange(k.size), k * f] = 1.0
                else:
                    wk = w[None, :]
                vals = kernel(d, tnu[k, None], nu_src[None, :]) * speed[None, :]
                if si == ti:
                    vals[np.arange(k.size), k * f] = 0.0
                acc[k] += np.sum(vals * wk, axis=1)
                if si == ti and self_value is not None:
                    w_end = gregory_weights(m, order)
                    acc[k] += (w_end[0] + w_end[-1]) / m * self_value(tc, k) * tc.speed[k]
        out.append(acc)
    return out


def layer_inner_integrals(system: CurveSystem, params: ScreeningParams,
                          points_per_decay: int = LAYER_POINTS_PER_DECAY) -> list:
    """I(y) at every sample through the single-layer identity (system must be outward oriented)."""
    beta = params.beta

    def kernel(d, nu_t, nu_s):
        s = np.abs(d)
        e_nt = (d.real * nu_t.real + d.imag * nu_t.imag) / s
        e_ns = (d.real * nu_s.real + d.imag * nu_s.imag) / s
        return e_nt * e_ns * np.exp(-beta * s) / s

    sums = _layer_sum(system, params, points_per_decay, kernel, None)
    return [-v / params.alpha for v in sums]


def layer_boundary_potential(system: CurveSystem, params: ScreeningParams,
                             points_per_decay: int = LAYER_POINTS_PER_DECAY) -> list:
    """v = (lam**2/2 pi) int_Omega e^{-beta|x-y|}/|x-y| dy at every boundary sample.

    Divergence theorem with the field -e^{-beta r}/(beta r) e_r:
    v(x) = (lam**2/2 pi) [pi/beta - (1/beta) oint e^{-beta s} (e . n_y)/s ds_y]
    for x on the boundary (outward-oriented system), e = (y - x)/s.
    """
    beta = params.beta

    def kernel(d, nu_t, nu_s):
        s2 = d.real**2 + d.imag**2
        s = np.sqrt(s2)
        return np.exp(-beta * s) * (d.real * nu_s.real + d.imag * nu_s.imag) / s2

    def self_value(curve, k):
        # (e . n_y)/s -> kappa/2 as y -> x
        return 0.5 * curve.curvature[k]

    sums = _layer_sum(system, params, points_per_decay, kernel, self_value)
    pref = params.lam**2 / (2.0 * math.pi)
    return [pref * (math.pi / beta - v / beta) for v in sums]


__all__ = [
    "AnisotropicFrame", "CSV_HEADER", "DEFAULT_TOL", "EnergyReport", "METHODS", "ProximityError",
    "boundary_inner_anisotropic", "boundary_inner_integral", "energy", "energy_boundary", "energy_bulk",
    "fmt12", "halfplane_constant", "inner_integrals", "layer_boundary_potential", "layer_inner_integrals",
]


# -- second-order expansion ---------------------------------------------------------------------


def second_order_terms(system: CurveSystem, alpha: float, lambdas, tol: float = DEFAULT_TOL,
                       quadrature: str = "rays", threads: int | None = None) -> list:
    """(lam, lam**2 (F - (1 - 1/(2 pi alpha**2)) P)) for each lam, at fixed alpha.

    The bracket is the nonlocal term of the boundary form, so the scaled value
    tends to the second-order coefficient of the large-lam expansion.
    """
    out = []
    for lam in lambdas:
        params = ScreeningParams(float(lam), alpha)
        rep = energy_boundary(system, params, tol, quadrature=quadrature, threads=threads)
        out.append((float(lam), float(lam) ** 2 * (rep.total - rep.perimeter_term)))
    return out
