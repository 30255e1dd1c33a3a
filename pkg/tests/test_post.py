import warnings

import numpy as np
import pytest

from rstshell.bench1d import lame_radial
from rstshell.errors import ValidationError
from rstshell.geometry import CylinderChart, evaluate_geometry, paraboloid_chart
from rstshell.post import (
    ThicknessData,
    convergence_slope,
    error_report,
    l2_error,
    reconstruct_thickness,
    total_resultants,
    true_normal_displacement,
)
from rstshell.ringsolid import RingMesh, solve_ring
from rstshell.shell2d import CylinderProblem, solve_cylinder
from rstshell.shellcore import LoadSet, Material, StressResultantSet
from rstshell.splines import gauss_legendre
from rstshell.studies import ring_section, rst2d_section

MAT = Material(0.3)
CYL = evaluate_geometry(CylinderChart(10.0, 10.0), [1.0, 3.0])


def test_true_normal_displacement():
    assert true_normal_displacement(2.0, np.zeros((2, 2)), CYL, MAT) == 2.0
    rho = np.array([[0.0, 0.0], [0.0, 1.5]])
    assert true_normal_displacement(2.0, rho, CYL, MAT) == pytest.approx(2.0 + MAT.sigma * 1.5 / 60)


def test_total_resultants_zero_load(rng):
    r = StressResultantSet(rng.standard_normal((2, 2)), rng.standard_normal((2, 2)), rng.standard_normal(2))
    T, mM, Q = total_resultants(r, LoadSet(), CYL, MAT)
    assert np.array_equal(T, r.n) and np.array_equal(mM, r.m) and np.array_equal(Q, r.q)
    T, mM, Q = total_resultants(r, LoadSet.inner_pressure(1.0), CYL, MAT)
    s = MAT.sigma
    assert T[1, 1] == pytest.approx(r.n[1, 1] - s / 2)
    assert mM[1, 1] == pytest.approx(r.m[1, 1] - s / 10)


def _thickness_rule(nq=6):
    t, w = gauss_legendre(nq)
    return t - 0.5, w


def test_reconstruction_midsurface(rng):
    geom = evaluate_geometry(paraboloid_chart(), [0.3, -0.4])
    d = ThicknessData(rng.standard_normal(2), 1.7, rng.standard_normal(2), rng.standard_normal(2),
                      0.4, rng.standard_normal(2), -0.2, rng.standard_normal(2))
    w_a, w = reconstruct_thickness(d, geom, LoadSet(), MAT, 0.0)
    # only the zero-mean quadratic and cubic corrections survive at xi = 0
    s = MAT.sigma
    expect = d.u_a - 0.5 / 12 * np.asarray(d.grad_trA)
    assert np.allclose(w_a[0], expect)
    assert w[0] == pytest.approx(d.u - 0.5 * s * d.trB / 12)
    plain = ThicknessData(d.u_a, d.u, d.phi, d.du)
    w_a, w = reconstruct_thickness(plain, geom, LoadSet(), MAT, 0.0)
    assert np.allclose(w_a[0], d.u_a) and w[0] == d.u


def test_reconstruction_average_identity(rng):
    xi, wt = _thickness_rule()
    for _ in range(10):
        geom = evaluate_geometry(paraboloid_chart(), rng.uniform(-3, 3, 2))
        d = ThicknessData(rng.standard_normal(2), rng.standard_normal(), rng.standard_normal(2), rng.standard_normal(2),
                          rng.standard_normal(), rng.standard_normal(2), rng.standard_normal(), rng.standard_normal(2))
        loads = LoadSet(*rng.standard_normal(2), tuple(rng.standard_normal(2)), tuple(rng.standard_normal(2)))
        w_a, w = reconstruct_thickness(d, geom, loads, MAT, xi)
        assert np.allclose(wt @ w_a, d.u_a, atol=1e-12)
        assert wt @ w == pytest.approx(d.u, abs=1e-12)
        rot = np.asarray(d.phi) - d.du - geom.b_mixed.T @ d.u_a
        assert np.allclose(12 * (wt * xi) @ w_a, rot, atol=1e-12)
        assert 12 * (wt * xi) @ w == pytest.approx(-MAT.sigma * d.trA, abs=1e-12)


def test_reconstruction_domain():
    with pytest.raises(ValidationError):
        reconstruct_thickness(ThicknessData(np.zeros(2), 0.0, np.zeros(2), np.zeros(2)), CYL, LoadSet(), MAT, 0.6)


def test_case1_profile_against_lame():
    R = 10.0
    d = ThicknessData(np.zeros(2), 34.0, np.zeros(2), np.zeros(2), trA=3.4)
    xi = np.linspace(-0.5, 0.5, 11)
    _, w = reconstruct_thickness(d, CYL, LoadSet.inner_pressure(1.0), MAT, xi)
    ref = lame_radial(R, 0.3, 1.0, xi / R)
    assert np.max(np.abs(w - ref)) < 1.0 / R * np.max(np.abs(ref)) * 0.1
    # the linear variation through the thickness has the Lame slope to O(1/R)
    slope, slope_ref = np.polyfit(xi, w, 1)[0], np.polyfit(xi, ref, 1)[0]
    assert slope == pytest.approx(slope_ref, rel=0.1)


def test_l2_error():
    x = np.linspace(0, 1, 50)
    w = np.full(50, 1 / 50)
    f = np.sin(3 * x) + 1
    assert l2_error(f, f, w) == (0.0, 0.0)
    assert l2_error(2 * f, f, w)[0] == pytest.approx(1.0)
    assert l2_error(3 * f, 2 * f, w)[0] == pytest.approx(0.25)
    with pytest.raises(ValidationError):
        l2_error(f, 0 * f, w)


def test_l2_error_scale_invariance(rng):
    w = rng.uniform(0.1, 1, 30)
    a, b = rng.standard_normal((2, 30, 3))
    e = l2_error(a, b, w)
    assert l2_error(7.5 * a, 7.5 * b, w) == pytest.approx(e)


def test_convergence_slope():
    assert convergence_slope([(1, 1e-2), (0.5, 2.5e-3), (0.25, 6.25e-4)]) == pytest.approx(2.0)
    assert convergence_slope([(1, 1e-2), (0.5, 6.25e-4), (0.25, 3.90625e-5)]) == pytest.approx(4.0)
    with pytest.warns(RuntimeWarning):
        s = convergence_slope([(1, 1e-2), (0.5, 2e-2), (0.25, 1e-3)])
    assert np.isfinite(s)
    with pytest.raises(ValidationError):
        convergence_slope([(1, 1e-2), (0.5, 2.5e-3)])


def test_error_report():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = error_report([1, 0.5, 0.25], [10, 20, 40], [1e-2, 2.5e-3, 6.25e-4])
    assert rep.slope == pytest.approx(2.0) and rep.monotone
    assert np.isnan(rep.running[0]) and np.allclose(rep.running[1:], 2.0)


@pytest.fixture(scope="module")
def case2_r10():
    R = 10.0
    ring = solve_ring(R, 0.3, 1.0, "clamped", RingMesh(R, 128, 4))
    shell = solve_cylinder(CylinderProblem(R, 0.3, 1.0, 2, element="nurbs-cubic", n1=1, n2=64))
    x2 = np.linspace(0, np.pi * R, 401)
    return x2, ring_section(ring, x2), rst2d_section(shell, x2), shell.sample_section(x2)


def test_crown_true_displacement_closer_to_ring(case2_r10):
    x2, ring, _, raw = case2_r10
    c = len(x2) // 2
    assert abs(raw["u_true"][c] - ring["u"][c]) < abs(raw["u"][c] - ring["u"][c])


def test_shear_force_matches_ring_away_from_ends(case2_r10):
    x2, ring, shell, _ = case2_r10
    inner = (x2 >= 5.0) & (x2 <= x2[-1] - 5.0)
    scale = np.abs(ring["Q"]).max()
    assert np.max(np.abs(shell["Q"] - ring["Q"])[inner]) <= 0.02 * scale
    # rotation sign convention agrees with the first-moment average of the ring
    away = inner & (np.abs(ring["psi2"]) > 0.05 * np.abs(ring["psi2"]).max())
    assert np.all(np.sign(shell["psi2"][away]) == np.sign(ring["psi2"][away]))
