"""Exponential integral, screened-Coulomb kernels and screening parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286061
CRITICAL_ALPHA = 1.0 / math.sqrt(2.0 * math.pi)


class DomainError(ValueError):
    """Argument outside the domain of a special function or kernel."""


class SingularityError(DomainError):
    """Kernel evaluated at its singular point."""


@dataclass(frozen=True)
class ScreeningParams:
    """Mass scale ``lam`` (mass = lam**2 * pi) and screening ``alpha``.

    ``sigma`` is derived: sigma = lam**2 * (1 - 1 / (2 pi alpha**2)).
    """

    lam: float
    alpha: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive, got {self.alpha}")

    @classmethod
    def from_sigma(cls, lam: float, sigma: float) -> "ScreeningParams":
        """Screening that puts the energy in the critical regime with coefficient ``sigma``."""
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam}")
        if not sigma < lam * lam:
            raise DomainError(f"need sigma < lambda**2, got sigma={sigma}, lambda={lam}")
        alpha = 1.0 / math.sqrt(2.0 * math.pi * (1.0 - sigma / (lam * lam)))
        return cls(lam, alpha)

    @property
    def sigma(self) -> float:
        return self.lam**2 * self.perimeter_coefficient

    @property
    def mass(self) -> float:
        return self.lam**2 * math.pi

    @property
    def perimeter_coefficient(self) -> float:
        return 1.0 - 1.0 / (2.0 * math.pi * self.alpha**2)

    @property
    def beta(self) -> float:
        """Blown-up screening rate lam * alpha."""
        return self.lam * self.alpha


def _e1_series(z: float) -> float:
    # E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
    term = 1.0
    acc = 0.0
    k = 1
    while True:
        term *= -z / k
        contrib = term / k
        acc += contrib
        if abs(contrib) < 1e-17 * max(abs(acc), 1e-300) or k > 200:
            break
        k += 1
    return -EULER_GAMMA - math.log(z) - acc


def _e1_continued_fraction(z: float) -> float:
    # modified Lentz on E1(z) = e^{-z} / (z + 1/(1 + 1/(z + 2/(1 + 2/(z + ...)))))
    # written in the even form: e^{-z} * 1/(z+1- 1^2/(z+3- 2^2/(z+5- ...)))
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-z)


def exp_integral_e1(z: float) -> float:
    """Exponential integral E1(z) = int_z^inf e^{-t}/t dt for real z > 0."""
    z = float(z)
    if not z > 0 or not math.isfinite(z):
        raise DomainError(f"E1 requires z > 0, got {z}")
    if z < 1.0:
        return _e1_series(z)
    return _e1_continued_fraction(z)


def phi_alpha(r: float, alpha: float) -> float:
    """Radial solution of Lap(phi) = e^{-alpha r}/r decaying at infinity: E1(alpha r)/alpha."""
    if not (r > 0 and alpha > 0):
        raise DomainError(f"phi_alpha needs r > 0 and alpha > 0, got r={r}, alpha={alpha}")
    return exp_integral_e1(alpha * r) / alpha


def phi_alpha_prime(r: float, alpha: float) -> float:
    if not (r > 0 and alpha > 0):
        raise DomainError(f"phi_alpha_prime needs r > 0 and alpha > 0, got r={r}, alpha={alpha}")
    return -math.exp(-alpha * r) / (alpha * r)


def yukawa_kernel(x, alpha: float) -> float:
    """Planar Yukawa kernel e^{-alpha|x|} / (2 pi |x|); integrates to 1/alpha over the plane."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    r = float(np.hypot(*np.asarray(x, dtype=float)))
    if r == 0.0:
        raise SingularityError("Yukawa kernel is singular at the origin")
    return math.exp(-alpha * r) / (2.0 * math.pi * r)


def screened_kernel(r, beta: float):
    """Blown-up-scale kernel e^{-beta r}/r without the 1/(4 pi) energy prefactor (vectorised)."""
    r = np.asarray(r, dtype=float)
    return np.exp(-beta * r) / r


def screened_kernel_laplacian(r, beta: float):
    """Laplacian of e^{-beta r}/r away from the origin."""
    r = np.asarray(r, dtype=float)
    return np.exp(-beta * r) * (beta**2 / r + beta / r**2 + 1.0 / r**3)
