"""Charged-monolayer interface kernel: exact screened form, Yukawa approximation, far field.

The in-plane interaction of a charged interface between a dielectric
electrolyte (relative permittivity eps_d, screening kappa) and air is the
radial inverse Fourier transform

    U(r) = (q rho / 2 pi eps0) int_0^inf k J0(k r) / (eps_d sqrt(kappa**2 + k**2) + k) dk.

Writing s = sqrt(kappa**2 + k**2), the large-k asymptote k / ((eps_d + 1) s)
transforms in closed form to e^{-kappa r} / ((eps_d + 1) r); the remainder

    k kappa**2 / ((eps_d + 1) s (s + k) (eps_d s + k))

decays like k**-2 and is integrated panel by panel between zeros of J0 with
iterated averaging of the alternating partial sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import j0, jn_zeros

from .energy import fmt12
from .quadrature import QuadratureError

KERNEL_CSV_HEADER = "r,exact,yukawa,rel_err"
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_MAX_PANELS = 2000
_MIN_PANELS = 12


class ScreeningWarning(UserWarning):
    """Vanishing screening: the energy functional needs alpha > 0."""


@dataclass(frozen=True)
class MonolayerParams:
    q: float
    rho: float
    eps0: float
    kappa_D: float
    gamma_line: float
    eps_d: float = 80.0

    def __post_init__(self):
        for name in ("q", "rho", "eps0", "gamma_line"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not (self.kappa_D >= 0 and math.isfinite(self.kappa_D)):
            raise ValueError(f"kappa_D must be nonnegative, got {self.kappa_D}")
        if not self.eps_d >= 1:
            raise ValueError(f"eps_d must be >= 1, got {self.eps_d}")

    @property
    def prefactor(self) -> float:
        return self.q * self.rho / (2.0 * math.pi * self.eps0)


def nondimensionalize(p: MonolayerParams) -> tuple[float, float]:
    """Length scale sqrt(eps0 eps_d gamma)/(q rho) and screening alpha = kappa_D * length."""
    length = math.sqrt(p.eps0 * p.eps_d * p.gamma_line) / (p.q * p.rho)
    alpha = p.kappa_D * length
    if alpha == 0.0:
        warnings.warn("kappa_D = 0 gives alpha = 0; the energy functional requires alpha > 0",
                      ScreeningWarning, stacklevel=2)
    return length, alpha


def yukawa_interface_kernel(r: float, p: MonolayerParams) -> float:
    """(q rho / (2 pi eps0 eps_d)) e^{-kappa r} / r."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    return p.prefactor / p.eps_d * math.exp(-p.kappa_D * r) / r


def dipolar_farfield(r: float, p: MonolayerParams) -> float:
    """Leading algebraic tail q rho / (2 pi eps0 eps_d**2 kappa**2 r**3)."""
    return p.prefactor / (p.eps_d**2 * p.kappa_D**2 * r**3)


def _remainder(k: np.ndarray, kappa: float, eps_d: float) -> np.ndarray:
    s = np.sqrt(kappa * kappa + k * k)
    return k * kappa * kappa / ((eps_d + 1.0) * s * (s + k) * (eps_d * s + k))


def _panel(fn, a: float, b: float, breaks) -> float:
    pts = [a] + [x for x in breaks if a < x < b] + [b]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        half = 0.5 * (hi - lo)
        x = lo + half * (_GL_X + 1.0)
        total += half * float(np.dot(_GL_W, fn(x)))
    return total


def _iterated_average(partial: np.ndarray) -> float:
    """Repeated averaging of consecutive partial sums (Euler-type acceleration)."""
    level = np.asarray(partial, dtype=float)
    while level.size > 1:
        level = 0.5 * (level[1:] + level[:-1])
    return float(level[0])


def hankel0(g, r: float, breaks=(), rtol: float = 1e-9, n_panels: int | None = None,
            window: int = 10) -> float:
    """int_0^inf g(k) J0(k r) dk for smooth g decaying at least like k**-1/2.

    Panels end at the zeros of J0(k r).  The last ``window`` partial sums are
    accelerated by iterated averaging; panels are added until two successive
    accelerated values agree to ``rtol`` (or exactly ``n_panels`` are used).
    """
    fn = lambda k: g(k) * j0(k * r)  # noqa: E731
    breaks = sorted(breaks)
    zeros = list(jn_zeros(0, _MIN_PANELS) / r)
    edges = [0.0] + zeros
    sums = []
    acc = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        acc += _panel(fn, a, b, breaks)
        sums.append(acc)
    target = n_panels if n_panels is not None else _MAX_PANELS
    prev = None
    while True:
        est = _iterated_average(sums[-window:])
        if n_panels is None and prev is not None and abs(est - prev) <= rtol * max(abs(est), 1e-300):
            return est
        if len(sums) >= target:
            if n_panels is not None:
                return est
            raise QuadratureError(f"Hankel panels did not converge after {target} zeros (r={r})")
        prev = est
        more = jn_zeros(0, len(sums) + 8)[len(sums):] / r
        for b in more:
            a = edges[-1]
            acc += _panel(fn, a, b, breaks)
            sums.append(acc)
            edges.append(b)


def exact_interface_kernel(r: float, p: MonolayerParams, n_panels: int | None = None) -> float:
    """Full screened interface kernel by asymptote subtraction and Bessel-zero panels."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    kappa, eps_d = p.kappa_D, p.eps_d
    coulomb_part = math.exp(-kappa * r) / ((eps_d + 1.0) * r)
    if kappa == 0.0:
        return p.prefactor * coulomb_part
    breaks = [kappa * 10.0**j for j in range(-3, 4)]
    rem = hankel0(lambda k: _remainder(k, kappa, eps_d), r, breaks, n_panels=n_panels)
    return p.prefactor * (coulomb_part + rem)


def farfield_slope(p: MonolayerParams, r_range=(10.0, 100.0), n: int = 16, exact: bool = True) -> float:
    """Least-squares slope of log U versus log r over r in r_range (units of 1/kappa)."""
    lo, hi = r_range
    if not (10.0 - 1e-12 <= lo < hi <= 100.0 + 1e-12):
        raise ValueError("r_range must lie within [10, 100] screening lengths")
    rs = np.geomspace(lo, hi, n) / p.kappa_D
    kern = exact_interface_kernel if exact else yukawa_interface_kernel
    vals = np.array([kern(float(r), p) for r in rs])
    slope, _ = np.polyfit(np.log(rs), np.log(vals), 1)
    return float(slope)


def kernel_rows(p: MonolayerParams, rs) -> list:
    """CSV rows r,exact,yukawa,rel_err."""
    rows = []
    for r in rs:
        ex = exact_interface_kernel(float(r), p)
        yk = yukawa_interface_kernel(float(r), p)
        rows.append(",".join([fmt12(r), fmt12(ex), fmt12(yk), fmt12(abs(yk - ex) / abs(ex))]))
    return rows


def yukawa_crossover(p: MonolayerParams, threshold: float = 0.1, kr_max: float = 50.0) -> float | None:
    """Smallest kappa r where the Yukawa form deviates from the exact kernel by ``threshold``."""
    from scipy.optimize import brentq

    def excess(kr):
        r = kr / p.kappa_D
        ex = exact_interface_kernel(r, p)
        return abs(yukawa_interface_kernel(r, p) - ex) / ex - threshold

    grid = np.geomspace(0.01, kr_max, 60)
    vals = [excess(x) for x in grid]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa < 0 <= fb:
            return float(brentq(excess, a, b, xtol=1e-10))
    return None
