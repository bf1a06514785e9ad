import math

import numpy as np
import pytest
from scipy import integrate
from scipy.spatial.distance import directed_hausdorff

from yil import flow as flow_mod
from yil.curve import (ClosedCurve, CurveSystem, annulus_system, disk_system, ellipse_system, isoperimetric_deficit,
                       rescale_to_area)
from yil.flow import (TRACE_HEADER, TopologyError, _self_intersects, boundary_potential, el_residual, flow_run,
                      potential_v)
from yil.specfun import ScreeningParams


def disk_potential_oracle(rho, lam, alpha, radius=1.0):
    """v at distance rho from the centre of a disk: a ray at angle th exits after the chord t(th)."""
    beta = lam * alpha

    def f(th):
        t = -rho * math.cos(th) + math.sqrt(radius * radius - (rho * math.sin(th)) ** 2)
        return (1.0 - math.exp(-beta * t)) / beta

    val, _ = integrate.quad(f, 0.0, 2 * math.pi, epsabs=0.0, epsrel=1e-12, limit=200)
    return lam * lam / (2 * math.pi) * val


def hausdorff(a, b):
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


# -- potential ---------------------------------------------------------------------------------


def test_potential_deep_inside_huge_disk():
    lam, alpha = 2.0, 1.5
    big = disk_system(50.0 / (lam * alpha), 256)
    assert potential_v(big, ScreeningParams(lam, alpha), [0.0, 0.0]) == pytest.approx(lam / alpha, rel=1e-2)


def test_potential_far_outside_is_negligible():
    lam, alpha, tol = 2.0, 1.0, 1e-8
    v = potential_v(disk_system(1.0, 128), ScreeningParams(lam, alpha), [30.0, 0.0], tol=tol)
    assert 0.0 <= v <= tol * lam / alpha


@pytest.mark.parametrize("rho", [0.0, 0.5, 0.9])
def test_potential_matches_chord_oracle(rho):
    lam, alpha = 2.0, 1.0
    v = potential_v(disk_system(1.0, 256), ScreeningParams(lam, alpha), [rho, 0.0])
    assert v == pytest.approx(disk_potential_oracle(rho, lam, alpha), rel=1e-8)


def test_potential_disk_centre_against_raster_sum():
    lam, alpha = 2.0, 1.0
    beta = lam * alpha

    def raster_sum(h):
        # cell centres with the evaluation point on a cell corner; the integrable
        # 1/r singularity and the staircase edge both cost O(h)
        g = (np.arange(-round(1.0 / h), round(1.0 / h)) + 0.5) * h
        x, y = np.meshgrid(g, g)
        r = np.hypot(x, y)
        r = r[r < 1.0]
        return lam * lam / (2 * math.pi) * h * h * float(np.sum(np.exp(-beta * r) / r))

    oracle = 2.0 * raster_sum(0.0025) - raster_sum(0.005)
    v = potential_v(disk_system(1.0, 256), ScreeningParams(lam, alpha), [0.0, 0.0])
    assert v == pytest.approx(oracle, rel=1e-3)
    exact = lam * lam / (2 * math.pi) * 2 * math.pi * (1 - math.exp(-beta)) / beta
    assert v == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("k", [0, 5])
def test_potential_on_boundary_matches_oracle(k):
    system = disk_system(1.0, 128)
    v = potential_v(system, ScreeningParams(2.0, 1.0), system.curves[0].points[k])
    assert v == pytest.approx(disk_potential_oracle(1.0, 2.0, 1.0), rel=1e-8)


def test_potential_on_unoriented_hole_boundary():
    system = annulus_system(1.0, n=128)
    inner = system.curves[1].points[7]
    params = ScreeningParams(2.0, 1.0)
    eps = 1e-6
    near_in = potential_v(system, params, inner * (1 + eps))
    near_out = potential_v(system, params, inner * (1 - eps))
    assert potential_v(system, params, inner) == pytest.approx(0.5 * (near_in + near_out), rel=1e-4)


def test_boundary_potential_routes_agree():
    system = ellipse_system(1.5, 1.0, 64, area=math.pi).oriented()
    params = ScreeningParams(3.0, 1.0)
    layer = boundary_potential(system, params, "layer")[0]
    rays = boundary_potential(system, params, "rays")[0]
    np.testing.assert_allclose(layer, rays, rtol=1e-7)
    with pytest.raises(ValueError):
        boundary_potential(system, params, "magic")


# -- Euler-Lagrange residual --------------------------------------------------------------------------


def test_disk_residual_vanishes():
    params = ScreeningParams(4.0, 1.0)
    assert el_residual(disk_system(1.0, 128), params) <= 1e-6
    assert el_residual(disk_system(1.0, 128).rotated(0.7), params) <= 1e-6


def test_ellipse_residual_is_large():
    assert el_residual(ellipse_system(2.0, 1.0, 128), ScreeningParams(4.0, 1.0)) > 0.1


def test_residual_translation_invariant():
    system = ellipse_system(1.4, 1.0, 96, area=math.pi)
    params = ScreeningParams(3.0, 1.0)
    a = el_residual(system, params)
    b = el_residual(system.translated([3.3, -1.7]), params)
    assert abs(a - b) <= 1e-8


def test_residual_rays_agree_with_layer():
    system = ellipse_system(1.4, 1.0, 48, area=math.pi)
    params = ScreeningParams(3.0, 1.0)
    assert el_residual(system, params, "rays") == pytest.approx(el_residual(system, params), rel=1e-6)


# -- flow --------------------------------------------------------------------------------------------------


FLOW_PARAMS = ScreeningParams.from_sigma(16.0, 1.0)


def test_disk_is_stationary():
    start = disk_system(1.0, 64)
    state = flow_run(start, FLOW_PARAMS, 5, energy_every=1)
    assert hausdorff(state.system.curves[0].points, start.curves[0].points) <= 5 * 1e-8


def test_flow_area_energy_and_trace(tmp_path):
    start = rescale_to_area(ellipse_system(1.2, 1 / 1.2, 64))
    trace = tmp_path / "trace.csv"
    snaps = tmp_path / "snaps"
    state = flow_run(start, FLOW_PARAMS, 300, energy_every=50, trace_path=trace, snapshot_every=100,
                     snapshot_dir=snaps)
    assert state.step_index == 300 and state.dt > 0
    areas = np.array(state.area_history)
    assert np.all(np.abs(areas - math.pi) <= 1e-4 * math.pi)
    e = np.array(state.energy_history)
    assert np.all(np.diff(e) <= 1e-6 * np.abs(e[1:]))
    assert isoperimetric_deficit(state.system) < isoperimetric_deficit(start)
    lines = trace.read_text().splitlines()
    assert lines[0] == TRACE_HEADER
    assert [int(line.split(",")[0]) for line in lines[1:]] == [0, 50, 100, 150, 200, 250, 300]
    files = sorted(p.name for p in snaps.iterdir())
    assert files == ["curve_000100.json", "curve_000200.json", "curve_000300.json"]
    CurveSystem.load(snaps / files[-1])


def test_flow_rotation_equivariance():
    start = rescale_to_area(ellipse_system(1.3, 1 / 1.3, 48))
    angle = 0.9
    a = flow_run(start, FLOW_PARAMS, 50, energy_every=50).system
    b = flow_run(start.rotated(angle), FLOW_PARAMS, 50, energy_every=50).system
    assert hausdorff(a.rotated(angle).curves[0].points, b.curves[0].points) <= 1e-6


def test_flow_validation_errors():
    with pytest.raises(ValueError):
        flow_run(annulus_system(1.0, n=64), FLOW_PARAMS, 1)
    with pytest.raises(ValueError):
        flow_run(disk_system(1.1, 64), FLOW_PARAMS, 1)


def test_self_intersection_detection():
    t = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    eight = ClosedCurve(np.column_stack([np.sin(t), np.sin(t) * np.cos(t)]))
    assert _self_intersects(eight)
    assert not _self_intersects(ellipse_system(3.0, 0.2, 128).curves[0])


def test_topology_error_halts_and_reports(tmp_path, monkeypatch):
    monkeypatch.setattr(flow_mod, "_self_intersects", lambda curve: True)
    trace = tmp_path / "trace.csv"
    with pytest.raises(TopologyError, match="step 1"):
        flow_run(disk_system(1.0, 64), FLOW_PARAMS, 10, trace_path=trace)
    assert trace.read_text().splitlines()[0] == TRACE_HEADER
