import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from yil.curve import annulus_system, disk_system
from yil.limits import (LIMIT_CSV_HEADER, PHASE_CSV_HEADER, PhaseRow, annulus_energy, annulus_energy_dr,
                        centered_hole_scan, critical_limit_check, critical_sigma, disk_energy, elastica_energy,
                        limit_rows, offset_hole_system, optimal_annulus, phase_diagram)
from yil.curve import bending_integral
from yil.specfun import DomainError

SIGMA_BAR = 0.112736
R_BAR = 3.66882


def concentric_annulus_oracle(r_in, r_out, beta):
    """Annulus self-interaction as int_Omega u(|x|) dx, u the potential of the annulus.

    u(rho) integrates e^{-beta t} against the angle of the circle |y - x| = t lying
    in the annulus, i.e. the arc inside B_R minus the arc inside B_r.
    """
    def arc(rho, t, radius):
        if t <= radius - rho:
            return 2 * math.pi
        if t >= radius + rho or rho == 0:
            return 0.0
        c = (rho * rho + t * t - radius * radius) / (2 * rho * t)
        return 2 * math.acos(min(1.0, max(-1.0, c)))

    def u(rho):
        # the arc lengths have square-root kinks at the break points; a cosine
        # substitution on each piece smooths them
        top = r_out + rho
        brk = sorted(x for x in {abs(r_out - rho), abs(r_in - rho), r_in + rho} if 1e-12 < x < top - 1e-12)
        edges = [0.0, *brk, top]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            def g(phi, a=a, b=b):
                t = a + 0.5 * (b - a) * (1 - math.cos(phi))
                return math.exp(-beta * t) * (arc(rho, t, r_out) - arc(rho, t, r_in)) * 0.5 * (b - a) * math.sin(phi)
            total += integrate.quad(g, 0.0, math.pi, epsabs=0.0, epsrel=1e-10, limit=200)[0]
        return total

    val, _ = integrate.quad(lambda rho: 2 * math.pi * rho * u(rho), r_in, r_out, epsabs=0.0, epsrel=1e-9)
    return val


# -- limit functional ---------------------------------------------------------------------


def test_elastica_disk_value():
    assert elastica_energy(disk_system(1.0, 256), 1.0) == pytest.approx(2 * math.pi + math.pi**2, rel=1e-12)


def test_elastica_annulus_unstretched_value():
    system = annulus_system(4.0, n=256)
    assert elastica_energy(system, 0.0) == pytest.approx(math.pi**2 * (1 / math.sqrt(17) + 0.25), rel=1e-12)


def test_elastica_radius_doubling_halves_bending():
    system = annulus_system(1.0, 3.0, n=256)
    assert elastica_energy(system.scaled(2.0), 0.0) == pytest.approx(0.5 * elastica_energy(system, 0.0), rel=1e-12)


@pytest.mark.parametrize("r", [0.3, 1.0, 4.0, 12.0])
def test_elastica_matches_closed_forms(r):
    sigma = 0.37
    assert elastica_energy(annulus_system(r, n=256), sigma) == pytest.approx(annulus_energy(r, sigma), abs=1e-8)
    assert elastica_energy(disk_system(1.0, 128), sigma) == pytest.approx(disk_energy(sigma), abs=1e-8)


def test_elastica_rejects_nonuniform_speed():
    from yil.curve import ClosedCurve

    t = np.linspace(0, 1, 64, endpoint=False)
    s = t + 0.1 * np.sin(2 * np.pi * t)
    warped = ClosedCurve(np.column_stack([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)]))
    from yil.curve import CurveSystem

    with pytest.raises(ValueError):
        elastica_energy(CurveSystem((warped,)), 1.0)


def test_annulus_energy_domain_and_blowup():
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            annulus_energy(bad, 0.1)
    assert annulus_energy(1e-8, 0.1) > 1e8
    assert annulus_energy(1e8, 0.1) > 1e8


@given(st.floats(0.05, 50.0), st.floats(0.01, 2.0))
def test_annulus_derivative_matches_finite_difference(r, sigma):
    h = 1e-6 * r
    fd = (annulus_energy(r + h, sigma) - annulus_energy(r - h, sigma)) / (2 * h)
    assert annulus_energy_dr(r, sigma) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_quoted_critical_pair_is_a_near_tie():
    assert abs(annulus_energy(R_BAR, SIGMA_BAR) - disk_energy(SIGMA_BAR)) <= 1e-3
    assert disk_energy(SIGMA_BAR) == pytest.approx(10.578, abs=1e-3)


# -- optimal annulus and critical sigma --------------------------------------------------------


def test_optimal_annulus_against_grid_scan():
    sigma = 0.05
    r, e = optimal_annulus(sigma)
    grid = np.arange(0.1, 50.0 + 5e-7, 1e-6)
    big = np.sqrt(1 + grid * grid)
    vals = 2 * np.pi * sigma * (big + grid) + np.pi**2 * (1 / big + 1 / grid)
    assert abs(r - grid[np.argmin(vals)]) <= 1e-4
    assert e <= vals.min() + 1e-12


@pytest.mark.parametrize("sigma", [0.01, 0.05, SIGMA_BAR, 0.5, 3.0])
def test_optimal_annulus_stationarity(sigma):
    r, _ = optimal_annulus(sigma)
    big = math.sqrt(1 + r * r)
    lhs = 2 * math.pi * sigma * (r / big + 1)
    rhs = math.pi**2 * (r / big**3 + 1 / r**2)
    assert abs(lhs - rhs) <= 1e-8


def test_optimal_annulus_is_global_minimum():
    sigma = 0.08
    _, e = optimal_annulus(sigma)
    rs = np.exp(np.random.default_rng(3).uniform(math.log(1e-3), math.log(1e3), 100))
    assert all(e <= annulus_energy(float(r), sigma) for r in rs)


def test_optimal_annulus_domain():
    with pytest.raises(DomainError):
        optimal_annulus(0.0)


def test_critical_sigma_values_and_residuals():
    s, r = critical_sigma()
    assert abs(s - SIGMA_BAR) <= 1e-4
    assert abs(r - R_BAR) <= 1e-3
    assert abs(annulus_energy(r, s) - disk_energy(s)) <= 1e-10
    assert abs(annulus_energy_dr(r, s)) <= 1e-10


def test_critical_sigma_is_fixed_point():
    s, r = critical_sigma()
    r_opt, e = optimal_annulus(s)
    assert r_opt == pytest.approx(r, abs=1e-6)
    assert abs(e - disk_energy(s)) <= 1e-9


def test_winners_either_side_of_critical_sigma():
    s, _ = critical_sigma()
    above, below = phase_diagram([s + 0.01, s - 0.01])
    assert above.winner == "disk"
    assert below.winner == "annulus"


# -- phase diagram ---------------------------------------------------------------------------------


def test_phase_diagram_quoted_sweep():
    rows = phase_diagram([0.05, SIGMA_BAR, 0.2])
    assert [row.winner for row in rows] == ["annulus", "tie", "disk"]
    assert all(isinstance(row, PhaseRow) for row in rows)
    assert PHASE_CSV_HEADER == "sigma,r_opt,disk_energy,annulus_energy,winner"
    fields = rows[0].csv_row().split(",")
    assert len(fields) == 5 and fields[-1] == "annulus"


def test_phase_difference_decreasing_in_sigma():
    sigmas = np.linspace(0.01, 1.0, 60)
    rows = phase_diagram(sigmas)
    diff = np.array([row.disk_energy - row.annulus_energy for row in rows])
    assert np.all(np.diff(diff) < 0)
    signs = np.sign(diff)
    assert signs[0] > 0 and signs[-1] < 0
    assert np.count_nonzero(np.diff(signs)) == 1


def test_phase_single_large_sigma_disk():
    (row,) = phase_diagram([1.0])
    assert row.winner == "disk"


def test_phase_tie_tolerance_only_mode():
    (row,) = phase_diagram([SIGMA_BAR], sigma_tie_tol=0.0)
    # without the sigma window the six-decimal input is resolved by the energies alone
    assert row.winner in {"disk", "annulus"}
    # sigma is 6.4e-7 off the critical value and the gap scales as 2 pi (R + r - 1) times that
    assert abs(row.disk_energy - row.annulus_energy) < 2e-5


def test_phase_rejects_nonpositive_sigma():
    with pytest.raises(DomainError):
        phase_diagram([0.1, 0.0])


# -- bending estimate on annuli ----------------------------------------------------------------------


def test_annulus_bending_log_slope():
    rs = np.geomspace(10.0, 100.0, 12)
    bend = [sum(bending_integral(c) for c in annulus_system(float(r), n=256).curves) for r in rs]
    slope = np.polyfit(np.log(rs), np.log(bend), 1)[0]
    assert abs(slope + 1.0) <= 0.05
    assert bend[-1] < bend[0]


# -- centered hole -------------------------------------------------------------------------------------------


def test_offset_hole_system_bounds():
    system = offset_hole_system(1.0, 0.3)
    assert system.area == pytest.approx(math.pi, rel=1e-10)
    with pytest.raises(DomainError):
        offset_hole_system(1.0, 0.5)
    with pytest.raises(DomainError):
        offset_hole_system(1.0, -0.1)


def test_concentric_scan_matches_radial_oracle():
    (row,) = centered_hole_scan(1.0, 2.0, 1.0, [0.0], h=0.01)
    oracle = concentric_annulus_oracle(1.0, math.sqrt(2.0), 2.0)
    assert row.f_value == pytest.approx(oracle, rel=1e-2)
    assert abs(row.f_value - oracle) <= max(row.est_error, 1e-3 * oracle)


@pytest.mark.slow
def test_centered_scan_nondecreasing_with_tangent_extreme():
    tangent = math.sqrt(2.0) - 1.0
    rows = centered_hole_scan(1.0, 2.0, 1.0, [0.0, 0.2, 0.4, tangent], h=0.01)
    vals = [row.f_value for row in rows]
    errs = [row.est_error for row in rows]
    for k in range(len(rows) - 1):
        assert vals[k + 1] >= vals[k] - (errs[k] + errs[k + 1])
    assert int(np.argmax(vals)) == len(rows) - 1


# -- critical limit ------------------------------------------------------------------------------------------


def test_critical_limit_disk_layer():
    out = critical_limit_check(disk_system(1.0, 256), 1.0, [16.0, 32.0], quadrature="layer")
    limit = disk_energy(1.0)
    errs = [abs(v - limit) / limit for _, v in out]
    assert errs[1] < errs[0]
    assert errs[1] < 0.02


def test_limit_rows_format():
    rows = limit_rows(disk_system(1.0, 128), 1.0, [16.0], quadrature="layer")
    assert LIMIT_CSV_HEADER == "lambda,scaled_energy,limit_value,rel_err"
    lam, scaled, limit, rel = (float(x) for x in rows[0].split(","))
    assert lam == 16.0
    assert rel == pytest.approx(abs(scaled - limit) / limit, rel=1e-9)
