import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from yil.physics import (KERNEL_CSV_HEADER, MonolayerParams, ScreeningWarning, dipolar_farfield,
                         exact_interface_kernel, farfield_slope, hankel0, kernel_rows, nondimensionalize,
                         yukawa_crossover, yukawa_interface_kernel)
from yil.quadrature import QuadratureError
from yil.specfun import yukawa_kernel


def unit(kappa=1.0, eps_d=80.0, q=1.0):
    return MonolayerParams(q=q, rho=1.0, eps0=1.0, kappa_D=kappa, gamma_line=1.0, eps_d=eps_d)


def hankel_oracle(r, p):
    """mpmath oscillatory quadrature of the full transform, independent of the asymptote split."""
    f = lambda k: k * mp.besselj(0, k * r) / (p.eps_d * mp.sqrt(p.kappa_D**2 + k * k) + k)  # noqa: E731
    with mp.workdps(20):
        val = mp.quadosc(f, [0, mp.inf], zeros=lambda n: mp.besseljzero(0, n) / r)
    return p.prefactor * float(val)


# -- parameters ---------------------------------------------------------------------------------------


def test_params_validation():
    for kw in ({"q": 0.0}, {"rho": -1.0}, {"eps0": math.inf}, {"gamma_line": 0.0}):
        args = {"q": 1.0, "rho": 1.0, "eps0": 1.0, "kappa_D": 1.0, "gamma_line": 1.0, **kw}
        with pytest.raises(ValueError):
            MonolayerParams(**args)
    with pytest.raises(ValueError):
        MonolayerParams(1.0, 1.0, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        MonolayerParams(1.0, 1.0, 1.0, 1.0, 1.0, eps_d=0.5)
    assert MonolayerParams(1.0, 1.0, 1.0, 1.0, 1.0).eps_d == 80.0


def test_nondimensionalize_spot_value():
    # q rho = 1 and eps0 eps_d gamma = 4
    p = MonolayerParams(q=1.0, rho=1.0, eps0=0.05, kappa_D=3.0, gamma_line=1.0, eps_d=80.0)
    length, alpha = nondimensionalize(p)
    assert length == pytest.approx(2.0, rel=1e-14)
    assert alpha == pytest.approx(6.0, rel=1e-14)


def test_nondimensionalize_charge_scaling():
    a = nondimensionalize(MonolayerParams(1.5, 2.0, 0.3, 0.7, 1.1))
    b = nondimensionalize(MonolayerParams(3.0, 2.0, 0.3, 0.7, 1.1))
    assert b[0] == pytest.approx(0.5 * a[0], rel=1e-14)
    assert b[1] == pytest.approx(0.5 * a[1], rel=1e-14)


def test_nondimensionalize_flags_vanishing_screening():
    with pytest.warns(ScreeningWarning):
        _, alpha = nondimensionalize(unit(kappa=0.0))
    assert alpha == 0.0


# -- kernels --------------------------------------------------------------------------------------------


@pytest.mark.parametrize("r", [0.1, 1.0, 3.0, 10.0, 50.0])
def test_exact_kernel_against_oscillatory_oracle(r):
    p = unit()
    assert exact_interface_kernel(r, p) == pytest.approx(hankel_oracle(r, p), rel=1e-6)


def test_exact_kernel_large_dielectric_limit():
    p = unit(eps_d=1e6)
    assert exact_interface_kernel(1.0, p) == pytest.approx(yukawa_interface_kernel(1.0, p), rel=1e-4)


def test_exact_kernel_unscreened_closed_form():
    p = unit(kappa=0.0)
    assert exact_interface_kernel(2.0, p) == pytest.approx(p.prefactor / (81.0 * 2.0), rel=1e-15)


def test_exact_kernel_decreases_in_kappa():
    vals = [exact_interface_kernel(1.0, unit(kappa=k)) for k in np.geomspace(0.1, 30.0, 12)]
    assert np.all(np.diff(vals) < 0)


def test_exact_kernel_positive_and_decreasing_in_r():
    kappa = 2.0
    p = unit(kappa=kappa)
    rs = np.geomspace(0.01, 50.0, 30) / kappa
    vals = np.array([exact_interface_kernel(float(r), p) for r in rs])
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("kr", [0.3, 3.0, 30.0])
def test_panel_doubling_self_consistency(kr):
    p = unit()
    a = exact_interface_kernel(kr, p, n_panels=60)
    b = exact_interface_kernel(kr, p, n_panels=120)
    assert abs(a - b) <= 1e-6 * abs(b)


def test_yukawa_accuracy_window():
    p = unit()
    for kr in np.linspace(0.1, 3.0, 30):
        ex = exact_interface_kernel(float(kr), p)
        assert abs(yukawa_interface_kernel(float(kr), p) - ex) / ex <= 5.0 / p.eps_d


def test_yukawa_error_shrinks_with_dielectric_constant():
    errs = []
    for eps_d in (20.0, 80.0, 320.0):
        p = unit(eps_d=eps_d)
        ex = exact_interface_kernel(1.0, p)
        errs.append(abs(yukawa_interface_kernel(1.0, p) - ex) / ex)
    assert errs[0] > errs[1] > errs[2]


@given(st.floats(0.05, 20.0), st.floats(0.1, 10.0))
def test_yukawa_matches_screened_kernel_and_scales_with_charge(r, q):
    p = unit(q=q)
    assert yukawa_interface_kernel(r, p) == pytest.approx(q * yukawa_interface_kernel(r, unit()), rel=1e-13)
    # same profile as the screening kernel e^{-alpha r}/(2 pi r) of the energy, up to prefactors
    assert yukawa_interface_kernel(r, p) == pytest.approx(q / 80.0 * yukawa_kernel([r, 0.0], 1.0), rel=1e-13)


def test_kernels_reject_nonpositive_radius():
    for fn in (exact_interface_kernel, yukawa_interface_kernel):
        with pytest.raises(ValueError):
            fn(0.0, unit())


# -- far field -------------------------------------------------------------------------------------------


def test_farfield_slope_is_dipolar():
    assert abs(farfield_slope(unit()) + 3.0) <= 0.15


def test_farfield_tail_matches_dipole_form():
    p = unit()
    r = 100.0
    assert exact_interface_kernel(r, p) == pytest.approx(dipolar_farfield(r, p), rel=0.1)


def test_yukawa_slope_is_exponential():
    assert farfield_slope(unit(), exact=False) < -10.0


def test_farfield_slope_independent_of_charge():
    assert farfield_slope(unit(q=7.0)) == pytest.approx(farfield_slope(unit()), abs=1e-9)


def test_farfield_range_validation():
    with pytest.raises(ValueError):
        farfield_slope(unit(), (1.0, 100.0))


def test_crossover_and_rows():
    p = unit()
    kr = yukawa_crossover(p)
    assert kr is not None and 3.0 < kr < 50.0
    ex = exact_interface_kernel(kr, p)
    assert abs(yukawa_interface_kernel(kr, p) - ex) / ex == pytest.approx(0.1, abs=1e-8)
    rows = kernel_rows(p, [0.5, 2.0])
    assert KERNEL_CSV_HEADER == "r,exact,yukawa,rel_err"
    r, ex, yk, rel = (float(v) for v in rows[1].split(","))
    assert r == 2.0 and rel == pytest.approx(abs(yk - ex) / ex, rel=1e-9)


def test_hankel_known_transform_and_failure():
    # int_0^inf e^{-k} J0(k r) dk = 1/sqrt(1 + r**2)
    for r in (0.5, 2.0, 8.0):
        assert hankel0(lambda k: np.exp(-k), r) == pytest.approx(1 / math.sqrt(1 + r * r), rel=1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(QuadratureError):
            # non-decaying amplitude never settles
            hankel0(lambda k: k, 1.0, rtol=1e-15)
