"""Closed plane curves on uniform periodic samples, winding numbers and curve systems.

Curves are parametrised by t in [0, 1) and sampled at t_k = k/N without
endpoint duplication.  All derivatives are spectral (trigonometric
interpolation), so geometric quantities are spectrally accurate for smooth
curves.  Orientation convention: the outward normal is ``-tau^perp`` with
``y^perp = (-y2, y1)``, i.e. counterclockwise outer boundaries have positive
curvature and outward normals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MIN_SAMPLES = 16
PROXIMITY_RELTOL = 1e-9


class CurveError(ValueError):
    """Invalid curve data."""


class RegularityError(CurveError):
    """Curve has (numerically) vanishing speed somewhere."""


class ProximityError(ValueError):
    """Query point lies (numerically) on a curve image."""


def _wavenumbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, 1.0 / n)


def _spectral_derivative(z: np.ndarray, order: int = 1) -> np.ndarray:
    n = z.shape[0]
    k = _wavenumbers(n)
    mult = (2j * np.pi * k) ** order
    if n % 2 == 0:
        # Nyquist mode is not differentiable on the grid for odd orders
        mult[n // 2] = 0.0 if order % 2 else mult[n // 2].real
    return np.fft.ifft(np.fft.fft(z) * mult)


class TrigInterpolant:
    """Evaluates the trigonometric interpolant of complex periodic samples at arbitrary t."""

    def __init__(self, z: np.ndarray):
        n = z.shape[0]
        c = np.fft.fft(z) / n
        half = n // 2
        if n % 2 == 0:
            ks = np.arange(-half, half + 1)
            cs = np.concatenate([[0.5 * c[half]], c[half + 1:], c[: half], [0.5 * c[half]]])
        else:
            ks = np.arange(-half, half + 1)
            cs = np.concatenate([c[half + 1:], c[: half + 1]])
        self.ks = ks.astype(float)
        self.cs = cs

    def __call__(self, t, deriv: int = 0, chunk: int = 2048) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = 2j * np.pi * self.ks
        cs = self.cs * w**deriv if deriv else self.cs
        out = np.empty(t.shape[0], dtype=complex)
        for s in range(0, t.shape[0], chunk):
            tt = t[s : s + chunk]
            out[s : s + chunk] = np.exp(np.outer(tt, w)) @ cs
        return out


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Closed curve given by N uniform periodic samples (no endpoint duplication)."""

    points: np.ndarray
    is_constant_speed: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise CurveError(f"points must have shape (N, 2), got {pts.shape}")
        if pts.shape[0] < MIN_SAMPLES:
            raise CurveError(f"need at least {MIN_SAMPLES} samples, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise CurveError("curve coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        speed = self.speed
        if not np.all(speed > 1e-12 * max(1.0, float(np.max(speed)))):
            raise RegularityError("curve is not regular: vanishing speed at some sample")

    # -- spectral representation -------------------------------------------------
    @property
    def n(self) -> int:
        return self.points.shape[0]

    @cached_property
    def z(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    @cached_property
    def dz(self) -> np.ndarray:
        return _spectral_derivative(self.z, 1)

    @cached_property
    def d2z(self) -> np.ndarray:
        return _spectral_derivative(self.z, 2)

    @cached_property
    def interpolant(self) -> TrigInterpolant:
        return TrigInterpolant(self.z)

    @cached_property
    def speed(self) -> np.ndarray:
        return np.abs(self.dz)

    @cached_property
    def length(self) -> float:
        return float(np.mean(self.speed))

    @cached_property
    def tangent(self) -> np.ndarray:
        d = self.dz / self.speed
        return np.column_stack([d.real, d.imag])

    @cached_property
    def normal(self) -> np.ndarray:
        # nu = -tau^perp = (tau_y, -tau_x)
        tau = self.tangent
        return np.column_stack([tau[:, 1], -tau[:, 0]])

    @cached_property
    def curvature(self) -> np.ndarray:
        return np.imag(np.conj(self.dz) * self.d2z) / self.speed**3

    @cached_property
    def signed_area(self) -> float:
        return 0.5 * float(np.mean(np.imag(np.conj(self.z) * self.dz)))

    @cached_property
    def centroid(self) -> np.ndarray:
        # first moments via Green's theorem, normalised by signed area
        x, y = self.points[:, 0], self.points[:, 1]
        dx, dy = self.dz.real, self.dz.imag
        mx = float(np.mean(x * x * dy)) / 2.0
        my = -float(np.mean(y * y * dx)) / 2.0
        return np.array([mx, my]) / self.signed_area

    @property
    def spacing(self) -> float:
        return self.length / self.n

    def evaluate(self, t, deriv: int = 0) -> np.ndarray:
        w = self.interpolant(t, deriv)
        return np.column_stack([w.real, w.imag])

    def upsample(self, m: int) -> "ClosedCurve":
        """Band-limited resampling onto m >= N uniform samples."""
        if m < self.n:
            raise CurveError("upsample target must not be smaller than N")
        if m == self.n:
            return self
        n = self.n
        c = np.fft.fft(self.z)
        padded = np.zeros(m, dtype=complex)
        half = n // 2
        padded[: half + (n % 2)] = c[: half + (n % 2)]
        padded[m - half :] = c[n - half :]
        if n % 2 == 0:
            padded[half] = 0.5 * c[half]
            padded[m - half] = 0.5 * c[half]
        z = np.fft.ifft(padded) * (m / n)
        return ClosedCurve(np.column_stack([z.real, z.imag]), self.is_constant_speed)

    # -- rigid motions and orientation -----------------------------------------
    def reversed(self) -> "ClosedCurve":
        pts = np.roll(self.points[::-1], 1, axis=0)
        return ClosedCurve(pts, self.is_constant_speed)

    def translated(self, shift) -> "ClosedCurve":
        return ClosedCurve(self.points + np.asarray(shift, dtype=float), self.is_constant_speed)

    def rotated(self, angle: float, center=(0.0, 0.0)) -> "ClosedCurve":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        ctr = np.asarray(center, dtype=float)
        return ClosedCurve((self.points - ctr) @ rot.T + ctr, self.is_constant_speed)

    def scaled(self, factor: float, center=(0.0, 0.0)) -> "ClosedCurve":
        ctr = np.asarray(center, dtype=float)
        return ClosedCurve((self.points - ctr) * factor + ctr, self.is_constant_speed)


# -- constant-speed reparametrisation --------------------------------------------


def resample_constant_speed(curve: ClosedCurve, n_out: int | None = None, tol: float = 1e-13) -> ClosedCurve:
    """Reparametrise by arc length and sample at ``n_out`` uniform parameters."""
    n_out = curve.n if n_out is None else int(n_out)
    if n_out < MIN_SAMPLES:
        raise CurveError(f"need at least {MIN_SAMPLES} output samples")
    n = curve.n
    speed = curve.speed
    big_l = curve.length
    # arc length s(t) = L t + periodic part, integrated spectrally
    c = np.fft.fft(speed) / n
    k = _wavenumbers(n)
    ci = np.zeros_like(c)
    nz = k != 0
    ci[nz] = c[nz] / (2j * np.pi * k[nz])
    if n % 2 == 0:
        ci[n // 2] = 0.0
    periodic = TrigInterpolant(np.fft.ifft(ci) * n)
    speed_interp = TrigInterpolant(speed.astype(complex))
    p0 = periodic(np.array([0.0]))[0].real

    def arclength(t):
        return big_l * t + periodic(t).real - p0

    targets = np.arange(n_out) / n_out * big_l
    t = targets / big_l
    for _ in range(60):
        f = arclength(t) - targets
        fp = speed_interp(t).real
        step = f / fp
        t = t - step
        if np.max(np.abs(step)) < tol:
            break
    pts = curve.evaluate(t)
    return ClosedCurve(pts, is_constant_speed=True)


def _require_regular(curve: ClosedCurve) -> None:
    # construction already enforces regularity; kept for explicit call sites
    if not np.all(curve.speed > 0):
        raise RegularityError("curve is not regular")


def length(curve: ClosedCurve) -> float:
    return curve.length


def curvature_profile(curve: ClosedCurve) -> np.ndarray:
    _require_regular(curve)
    return curve.curvature.copy()


def outward_normal(curve: ClosedCurve) -> np.ndarray:
    _require_regular(curve)
    return curve.normal.copy()


def bending_integral(curve: ClosedCurve) -> float:
    """int kappa^2 ds over the curve (trapezoid in the parameter)."""
    return float(np.mean(curve.curvature**2 * curve.speed))


def fenchel_check(curve: ClosedCurve) -> float:
    """Total absolute curvature int |kappa| ds; at least 2 pi for closed curves."""
    return float(np.mean(np.abs(curve.curvature) * curve.speed))


# -- winding numbers ---------------------------------------------------------------


def winding_number_raw(curve: ClosedCurve, points) -> np.ndarray:
    """Trapezoid quadrature of the winding-number integrand on the samples."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(pts.shape[0])
    z, dz = curve.z, curve.dz
    for s in range(0, pts.shape[0], 2048):
        w = z[None, :] - (pts[s : s + 2048, 0] + 1j * pts[s : s + 2048, 1])[:, None]
        # (g - x)^perp . g' / |g - x|^2 = Im(conj(g - x) g') / |g - x|^2
        integrand = np.imag(np.conj(w) * dz[None, :]) / np.abs(w) ** 2
        out[s : s + 2048] = integrand.mean(axis=1) / (2 * np.pi)
    return out


class _DenseCurve:
    """Finely upsampled polyline of a curve, used for robust near-field winding numbers."""

    def __init__(self, curve: ClosedCurve):
        self.curve = curve
        m = max(8 * curve.n, 512)
        fine = curve.upsample(m)
        self.m = m
        self.z = fine.z
        seg = np.abs(np.roll(self.z, -1) - self.z)
        kmax = float(np.max(np.abs(curve.curvature)))
        # max distance between arc and chord, with a generous safety factor
        self.sag = 4.0 * kmax * float(np.max(seg)) ** 2 / 8.0 + 1e-14 * curve.length

    def polyline_winding(self, pts: np.ndarray) -> np.ndarray:
        out = np.empty(pts.shape[0])
        z = self.z
        zn = np.roll(z, -1)
        for s in range(0, pts.shape[0], 512):
            x = (pts[s : s + 512, 0] + 1j * pts[s : s + 512, 1])[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                ang = np.angle((zn[None, :] - x) / (z[None, :] - x))
            out[s : s + 512] = ang.sum(axis=1) / (2 * np.pi)
        return np.rint(out)

    def distance_to_polyline(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = self.z
        d = np.roll(z, -1) - z
        dist = np.empty(pts.shape[0])
        seg_idx = np.empty(pts.shape[0], dtype=int)
        for s in range(0, pts.shape[0], 512):
            x = (pts[s : s + 512, 0] + 1j * pts[s : s + 512, 1])[:, None]
            u = np.clip(np.real((x - z[None, :]) * np.conj(d)[None, :]) / np.abs(d) ** 2, 0.0, 1.0)
            dd = np.abs(z[None, :] + u * d[None, :] - x)
            j = np.argmin(dd, axis=1)
            seg_idx[s : s + 512] = j
            dist[s : s + 512] = dd[np.arange(dd.shape[0]), j]
        return dist, seg_idx

    def foot_point(self, x: complex, seg: int) -> tuple[float, complex, complex]:
        """Closest point on the smooth curve near dense segment ``seg`` (Newton on the distance)."""
        interp = self.curve.interpolant
        t = (seg + 0.5) / self.m
        for _ in range(50):
            g, g1, g2 = (interp(np.array([t]), d)[0] for d in (0, 1, 2))
            f = np.real((g - x) * np.conj(g1))
            fp = abs(g1) ** 2 + np.real((g - x) * np.conj(g2))
            step = f / fp if fp > 0 else 0.0
            step = float(np.clip(step, -1.0 / self.m, 1.0 / self.m))
            t -= step
            if abs(step) < 1e-16:
                break
        g = interp(np.array([t]), 0)[0]
        g1 = interp(np.array([t]), 1)[0]
        return t, g, g1


def winding_numbers(curve: ClosedCurve, points, dense: _DenseCurve | None = None, strict: bool = True):
    """Integer winding numbers of ``curve`` around each point.

    Points at least two sample spacings away from the samples use the rounded
    trapezoid quadrature of the winding integrand.  Nearer points use the exact
    winding number of a finely upsampled polyline, corrected by a foot-point
    side test for the thin slivers between arcs and chords.  Points within
    1e-9 L of the curve raise :class:`ProximityError`; with ``strict=False``
    they are flagged instead and ``(winding, flagged)`` is returned.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(pts.shape[0], dtype=int)
    flagged = np.zeros(pts.shape[0], dtype=bool)
    if pts.shape[0] == 0:
        return out if strict else (out, flagged)
    z = curve.z
    dmin = np.empty(pts.shape[0])
    for s in range(0, pts.shape[0], 4096):
        x = (pts[s : s + 4096, 0] + 1j * pts[s : s + 4096, 1])[:, None]
        dmin[s : s + 4096] = np.min(np.abs(z[None, :] - x), axis=1)
    spacing = float(np.max(np.abs(np.roll(z, -1) - z)))
    far = dmin >= 2.0 * spacing
    if np.any(far):
        raw = winding_number_raw(curve, pts[far])
        rounded = np.rint(raw)
        ok = np.abs(raw - rounded) <= 0.25
        idx = np.flatnonzero(far)
        out[idx[ok]] = rounded[ok].astype(int)
        far[idx[~ok]] = False
    near = ~far
    if np.any(near):
        dense = dense or _DenseCurve(curve)
        npts = pts[near]
        w = dense.polyline_winding(npts)
        dist, seg = dense.distance_to_polyline(npts)
        guard = PROXIMITY_RELTOL * curve.length
        close = np.flatnonzero(dist < max(dense.sag, guard) * 2.0)
        bad = np.zeros(npts.shape[0], dtype=bool)
        for i in close:
            x = npts[i, 0] + 1j * npts[i, 1]
            _, g, g1 = dense.foot_point(x, int(seg[i]))
            if abs(x - g) < guard:
                if strict:
                    raise ProximityError(f"point {npts[i]} lies within {guard:.3g} of the curve")
                bad[i] = True
                continue
            j = int(seg[i])
            a, b = dense.z[j], dense.z[(j + 1) % dense.m]
            chord_left = np.imag(np.conj(b - a) * (x - a)) > 0
            true_left = np.imag(np.conj(g1) * (x - g)) > 0
            if chord_left and not true_left:
                w[i] -= 1
            elif true_left and not chord_left:
                w[i] += 1
        out[near] = w.astype(int)
        flagged[near] = bad
    return out if strict else (out, flagged)


def winding_number(curve: ClosedCurve, x) -> int:
    return int(winding_numbers(curve, np.asarray(x, dtype=float)[None, :])[0])


# -- curve systems --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurveSystem:
    """Finite family of closed curves, ordered by decreasing length.

    The region is the set of points with odd total winding number.
    """

    curves: tuple = field(default_factory=tuple)

    def __post_init__(self):
        curves = tuple(self.curves)
        if not curves:
            raise CurveError("a curve system needs at least one curve")
        for c in curves:
            if not isinstance(c, ClosedCurve):
                raise CurveError("curve systems hold ClosedCurve instances")
        order = sorted(range(len(curves)), key=lambda i: -curves[i].length)
        object.__setattr__(self, "curves", tuple(curves[i] for i in order))

    def __iter__(self):
        return iter(self.curves)

    def __len__(self):
        return len(self.curves)

    @property
    def perimeter(self) -> float:
        return float(sum(c.length for c in self.curves))

    @property
    def min_length(self) -> float:
        return float(min(c.length for c in self.curves))

    @property
    def total_length(self) -> float:
        return self.perimeter

    @cached_property
    def _dense(self) -> tuple:
        return tuple(_DenseCurve(c) for c in self.curves)

    def winding_sum(self, points, strict: bool = True):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        total = np.zeros(pts.shape[0], dtype=int)
        flagged = np.zeros(pts.shape[0], dtype=bool)
        for c, d in zip(self.curves, self._dense):
            if strict:
                total += winding_numbers(c, pts, d)
            else:
                w, bad = winding_numbers(c, pts, d, strict=False)
                total += w
                flagged |= bad
        return total if strict else (total, flagged)

    def contains(self, points, strict: bool = True):
        """Vectorised mod-2 membership; ``strict=False`` returns ``(inside, flagged)``."""
        if strict:
            return (self.winding_sum(points) % 2) == 1
        total, flagged = self.winding_sum(points, strict=False)
        return (total % 2) == 1, flagged

    @cached_property
    def nesting_depth(self) -> tuple:
        """Number of other curves enclosing each curve (simple, disjoint curves)."""
        depths = []
        for i, c in enumerate(self.curves):
            p = c.points[:1]
            d = 0
            for j, other in enumerate(self.curves):
                if j != i and winding_numbers(other, p, self._dense[j])[0] % 2:
                    d += 1
            depths.append(d)
        return tuple(depths)

    @cached_property
    def area(self) -> float:
        """Area of the region for simple disjoint curves (nesting-parity signed sum)."""
        return float(sum((-1) ** d * abs(c.signed_area) for c, d in zip(self.curves, self.nesting_depth)))

    def oriented(self) -> "CurveSystem":
        """Same region with every curve oriented so its normal points out of the region."""
        out = []
        for c, d in zip(self.curves, self.nesting_depth):
            want_ccw = d % 2 == 0
            out.append(c if (c.signed_area > 0) == want_ccw else c.reversed())
        return CurveSystem(tuple(out))

    def map(self, fn) -> "CurveSystem":
        return CurveSystem(tuple(fn(c) for c in self.curves))

    def translated(self, shift) -> "CurveSystem":
        return self.map(lambda c: c.translated(shift))

    def rotated(self, angle: float, center=(0.0, 0.0)) -> "CurveSystem":
        return self.map(lambda c: c.rotated(angle, center))

    def scaled(self, factor: float, center=(0.0, 0.0)) -> "CurveSystem":
        return self.map(lambda c: c.scaled(factor, center))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.vstack([c.upsample(max(4 * c.n, 256)).points for c in self.curves])
        return pts.min(axis=0), pts.max(axis=0)

    # -- JSON document {"curves": [{"points": [[x, y], ...]}, ...]} ---------------
    def to_json(self) -> dict:
        return {"curves": [{"points": c.points.tolist()} for c in self.curves]}

    @classmethod
    def from_json(cls, doc: dict) -> "CurveSystem":
        try:
            curves = [ClosedCurve(np.asarray(entry["points"], dtype=float)) for entry in doc["curves"]]
        except (KeyError, TypeError) as exc:
            raise CurveError(f"malformed curve-system document: {exc}") from exc
        return cls(tuple(curves))

    def save(self, path) -> None:
        from .io import atomic_write_text

        atomic_write_text(path, json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "CurveSystem":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise CurveError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_json(doc)


def region_membership(system: CurveSystem, x) -> bool:
    return bool(system.contains(np.asarray(x, dtype=float)[None, :])[0])


# -- standard shapes ------------------------------------------------------------------


def circle(radius: float, n: int = 256, center=(0.0, 0.0), clockwise: bool = False) -> ClosedCurve:
    t = np.arange(n) / n
    sgn = -1.0 if clockwise else 1.0
    pts = np.column_stack([np.cos(2 * np.pi * t), sgn * np.sin(2 * np.pi * t)]) * radius
    return ClosedCurve(pts + np.asarray(center, dtype=float), is_constant_speed=True)


def ellipse(a: float, b: float, n: int = 256, center=(0.0, 0.0), constant_speed: bool = True) -> ClosedCurve:
    t = np.arange(n) / n
    pts = np.column_stack([a * np.cos(2 * np.pi * t), b * np.sin(2 * np.pi * t)])
    c = ClosedCurve(pts + np.asarray(center, dtype=float))
    return resample_constant_speed(c, n) if constant_speed else c


def polar_curve(radius_fn, n: int = 256, constant_speed: bool = True) -> ClosedCurve:
    """Star-shaped curve r(theta), sampled counterclockwise."""
    t = np.arange(n) / n
    th = 2 * np.pi * t
    r = radius_fn(th)
    c = ClosedCurve(np.column_stack([r * np.cos(th), r * np.sin(th)]))
    return resample_constant_speed(c, n) if constant_speed else c


def disk_system(radius: float = 1.0, n: int = 256, center=(0.0, 0.0)) -> CurveSystem:
    return CurveSystem((circle(radius, n, center),))


def ellipse_system(a: float, b: float, n: int = 256, area: float | None = None) -> CurveSystem:
    if area is not None:
        scale = math.sqrt(area / (math.pi * a * b))
        a, b = a * scale, b * scale
    return CurveSystem((ellipse(a, b, n),))


def annulus_system(r_inner: float, r_outer: float | None = None, n: int = 256,
                   hole_center=(0.0, 0.0)) -> CurveSystem:
    """Outer circle (counterclockwise) minus an inner disk (clockwise).

    Without ``r_outer`` the outer radius is sqrt(1 + r_inner**2), giving area pi.
    """
    if r_outer is None:
        r_outer = math.sqrt(1.0 + r_inner**2)
    if not 0 < r_inner < r_outer:
        raise CurveError("annulus needs 0 < r_inner < r_outer")
    n_in = max(MIN_SAMPLES, int(round(n * r_inner / r_outer)))
    return CurveSystem((circle(r_outer, n), circle(r_inner, n_in, hole_center, clockwise=True)))


def isoperimetric_deficit(system: CurveSystem) -> float:
    return system.perimeter**2 / (4 * math.pi * system.area) - 1.0


def rescale_to_area(system: CurveSystem, area: float = math.pi) -> CurveSystem:
    f = math.sqrt(area / system.area)
    return system.scaled(f)


def as_system(obj) -> CurveSystem:
    if isinstance(obj, CurveSystem):
        return obj
    if isinstance(obj, ClosedCurve):
        return CurveSystem((obj,))
    if isinstance(obj, Iterable):
        return CurveSystem(tuple(obj))
    raise TypeError(f"cannot make a CurveSystem from {type(obj).__name__}")


__all__: Sequence[str] = [
    "ClosedCurve", "CurveSystem", "CurveError", "RegularityError", "ProximityError",
    "resample_constant_speed", "length", "curvature_profile", "outward_normal",
    "winding_number", "winding_numbers", "winding_number_raw", "region_membership",
    "bending_integral", "fenchel_check", "circle", "ellipse", "polar_curve",
    "disk_system", "ellipse_system", "annulus_system", "isoperimetric_deficit",
    "rescale_to_area", "as_system",
]
