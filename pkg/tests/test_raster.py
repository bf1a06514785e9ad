import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.signal import correlate

from yil.curve import CurveSystem, annulus_system, circle, disk_system, ellipse_system
from yil.raster import (RasterRegion, ResolutionError, annulus_self_interaction, cross_interaction,
                        disk_covariance, disk_covariogram_integral, pair_counts, pair_weights, rasterize,
                        self_interaction, shift_averaged)


def single_cell_oracle(h, beta):
    """int_cell int_cell K by the square autocorrelation tent in polar form."""
    def radial(theta):
        c, s = abs(math.cos(theta)), abs(math.sin(theta))
        rmax = h / max(c, s)
        val, _ = integrate.quad(lambda r: math.exp(-beta * r) * (h - r * c) * (h - r * s), 0, rmax,
                                epsabs=0, epsrel=1e-12)
        return val
    val, _ = integrate.quad(radial, 0, 2 * math.pi, points=[math.pi / 4 * k for k in range(1, 8)],
                            epsabs=0, epsrel=1e-11, limit=200)
    return val


def test_rasterize_areas():
    d = rasterize(disk_system(1.0, 256), 0.01)
    assert d.area == pytest.approx(math.pi, abs=0.05)
    ann = rasterize(annulus_system(1.0, 2.0, 256), 0.01)
    assert ann.area == pytest.approx(3 * math.pi, abs=0.1)


@pytest.mark.parametrize("system", [disk_system(1.0, 128), annulus_system(3.0, n=256),
                                    ellipse_system(2.0, 1.0, 128, area=math.pi)], ids=["disk", "annulus", "ellipse"])
def test_raster_area_bound_and_margin(system):
    h = 0.02
    reg = rasterize(system, h)
    assert abs(reg.area - math.pi) <= 4 * system.perimeter * h
    m = reg.mask
    assert not (m[0].any() or m[-1].any() or m[:, 0].any() or m[:, -1].any())


def test_raster_matches_exact_membership():
    system = annulus_system(0.6, n=128)
    reg = rasterize(system, 0.02)
    exact = system.contains(reg.centers()).reshape(reg.mask.shape)
    np.testing.assert_array_equal(reg.mask, exact)


def test_jitter_retry_on_centre_exactly_on_curve():
    h = 0.01
    # with this radius the grid origin is -1.03, so the centre (0.005, 1.005) lies on the circle
    radius = math.hypot(0.005, 1.005)
    system = disk_system(radius, 256)
    lo, _ = system.bounding_box()
    assert np.floor(lo / h) * h - 2 * h == pytest.approx([-1.03, -1.03])
    _, flagged = system.contains(np.array([[0.005, 1.005]]), strict=False)
    assert flagged[0]
    reg = rasterize(system, h)
    assert reg.area == pytest.approx(math.pi * radius**2, abs=0.05)


def test_rasterize_rejects_coarse_grid():
    with pytest.raises(ValueError):
        rasterize(disk_system(0.05, 64), 0.02)


def test_covariance_endpoints():
    assert float(disk_covariance(0.0, 1.3)) == pytest.approx(math.pi * 1.69, rel=1e-14)
    assert float(disk_covariance(2.6, 1.3)) == pytest.approx(0.0, abs=1e-14)


def test_covariogram_against_direct_double_integral():
    # polar form: int_{B_R} int_{B_R} K = int_{B_R} dx int_0^{2 pi} int_0^{rho(x, theta)} e^{-beta s} ds dtheta
    radius, beta = 1.0, 2.0

    def inner(rx):
        def ray(th):
            # distance from (rx, 0) to the circle along direction th
            b = rx * math.cos(th)
            rho = -b + math.sqrt(b * b - rx * rx + radius * radius)
            return (1 - math.exp(-beta * rho)) / beta
        val, _ = integrate.quad(ray, 0, 2 * math.pi, epsabs=0, epsrel=1e-12, limit=200)
        return val * 2 * math.pi * rx

    oracle, _ = integrate.quad(inner, 0, radius, epsabs=0, epsrel=1e-11, limit=200)
    assert disk_covariogram_integral(radius, 2.0, 1.0) == pytest.approx(oracle, rel=1e-9)


def test_single_cell_weight_exact():
    h, beta = 0.05, 3.0
    w = pair_weights((1, 1), h, beta)
    assert w.shape == (1, 1)
    assert w[0, 0] == pytest.approx(single_cell_oracle(h, beta), rel=1e-10)


def test_two_far_cells():
    h, beta, k = 0.01, 2.0, 60
    mask = np.zeros((k + 1, 1), dtype=bool)
    mask[0, 0] = mask[k, 0] = True
    two = self_interaction(RasterRegion(np.zeros(2), h, mask), 1.0, beta)
    one = self_interaction(RasterRegion(np.zeros(2), h, mask[:1]), 1.0, beta)
    d = k * h
    cross = 0.5 * (two - 2 * one)
    assert cross == pytest.approx(h**4 * math.exp(-beta * d) / d, rel=1e-2)


def test_pair_counts_are_integers():
    rng = np.random.default_rng(0)
    mask = rng.random((23, 17)) < 0.4
    counts = pair_counts(mask)
    direct = correlate(mask.astype(int), mask.astype(int), mode="full", method="direct")
    np.testing.assert_array_equal(counts, direct)


def test_disk_self_interaction_vs_covariogram():
    oracle = disk_covariogram_integral(1.0, 2.0, 1.0)
    reg = rasterize(disk_system(1.0, 256), 0.01)
    assert self_interaction(reg, 2.0, 1.0) == pytest.approx(oracle, rel=1e-2)
    oracle = disk_covariogram_integral(1.0, 1.0, 1.0)
    reg = rasterize(disk_system(1.0, 256), 0.005)
    assert self_interaction(reg, 1.0, 1.0) == pytest.approx(oracle, rel=1e-2)


def test_shift_averaged_error_bar_covers_oracle():
    oracle = disk_covariogram_integral(1.0, 2.0, 1.0)
    val, err = shift_averaged(disk_system(1.0, 256), 0.01, lambda r: self_interaction(r, 2.0, 1.0), 2.0)
    assert abs(val - oracle) <= err
    assert err < 2e-3 * oracle


def test_annulus_oracle_against_raster():
    big = math.sqrt(2.0)
    oracle = annulus_self_interaction(big, 1.0, 2.0, 1.0)
    val, err = shift_averaged(annulus_system(1.0, n=256), 0.01, lambda r: self_interaction(r, 2.0, 1.0), 2.0)
    assert abs(val - oracle) <= err
    assert val == pytest.approx(oracle, rel=1e-2)


def test_resolution_error():
    reg = rasterize(disk_system(1.0, 128), 0.02)
    with pytest.raises(ResolutionError) as info:
        self_interaction(reg, 20.0, 1.0)
    assert info.value.required_h == pytest.approx(1 / 80)


def test_complement_identity_against_truncated_sum():
    h, beta = 0.01, 20.0
    system = CurveSystem((circle(0.1, 64),))
    reg = rasterize(system, h)
    pad = int(math.ceil(1.6 / h))
    inner = np.pad(reg.mask, pad)
    outer = ~inner
    counts = np.rint(correlate(outer.astype(float), inner.astype(float), mode="full", method="fft"))
    w = pair_weights(inner.shape, h, beta)
    direct = math.fsum((counts * w).ravel().tolist())
    # the identity and the direct sum differ only by the lattice defect of the weights,
    # sum_c w(c) - h**2 (2 pi / beta), times the number of inside cells
    defect = abs(math.fsum(w.ravel().tolist()) - h * h * 2 * math.pi / beta)
    assert abs(cross_interaction(reg, 1.0, beta) - direct) <= 1.01 * defect * reg.count
    assert defect * reg.count < 1e-4 * direct


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_translation_is_exact(dx, dy):
    reg = rasterize(disk_system(0.5, 64), 0.02)
    assert self_interaction(reg.shifted((dx, dy)), 2.0, 1.0) == self_interaction(reg, 2.0, 1.0)


def test_first_order_convergence():
    oracle = disk_covariogram_integral(1.0, 2.0, 1.0)
    system = disk_system(1.0, 256)
    vals = {h: self_interaction(rasterize(system, h), 2.0, 1.0) for h in (0.02, 0.01, 0.005)}
    # a staircase moves at most P h of area, each unit of area worth at most 2 * (2 pi / beta)
    for h in (0.02, 0.01):
        assert abs(vals[h] - vals[h / 2]) <= 2 * (2 * math.pi / 2.0) * 2 * math.pi * h
    assert abs(vals[0.005] - oracle) < abs(vals[0.02] - oracle) + 1e-3


def test_pgm_dump(tmp_path):
    reg = rasterize(disk_system(1.0, 64), 0.1)
    path = tmp_path / "m.pgm"
    reg.write_pgm(path)
    data = path.read_bytes()
    header = f"P5\n{reg.mask.shape[0]} {reg.mask.shape[1]}\n1\n".encode()
    assert data.startswith(header)
    assert sum(data[len(header):]) == reg.count
