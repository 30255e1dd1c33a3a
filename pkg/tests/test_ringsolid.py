import numpy as np
import pytest

from rstshell.bench1d import lame_average, lame_radial, lame_stresses
from rstshell.errors import ValidationError
from rstshell.ringsolid import (
    RingMesh,
    RingSolution,
    integral_characteristics,
    lame_lambda,
    pressure_load,
    solve_ring,
    thickness_average,
)
from rstshell.studies import line_quadrature

R, NU = 10.0, 0.3


@pytest.fixture(scope="module")
def lame():
    return solve_ring(R, NU, 1.0, "free-sliding", RingMesh(R, 64, 4))


@pytest.fixture(scope="module")
def clamped():
    return solve_ring(R, NU, 1.0, "clamped", RingMesh(R, 32, 4))


def test_validation():
    with pytest.raises(ValidationError):
        RingMesh(0.4)
    with pytest.raises(ValidationError):
        solve_ring(R, NU, 1.0, "pinned", RingMesh(R, 4, 1))
    with pytest.raises(ValidationError):
        lame_lambda(0.5)


def test_pressure_resultant():
    F = pressure_load(RingMesh(R, 16, 2), 1.0)
    assert F[0::2].sum() == pytest.approx(0.0, abs=1e-12)
    assert F[1::2].sum() == pytest.approx(2 * (R - 0.5))


def test_lame_field(lame):
    theta = np.array([0.2, 1.0, np.pi / 2, 2.9])
    wr, wt = lame.displacement(theta, np.full(4, R))
    ref = lame_radial(R, NU, 1.0, 0.0)
    assert np.allclose(wr, ref, rtol=1e-3)
    assert np.allclose(wt, 0, atol=1e-6 * ref)
    ut, un, psi = thickness_average(lame, theta)
    assert np.allclose(un, lame_average(R, NU, 1.0), rtol=1e-3)
    assert np.allclose(psi, 0, atol=1e-6 * ref)


def test_lame_characteristics(lame):
    theta = np.array([0.5, np.pi / 2])
    N, M, Q = integral_characteristics(lame, theta)
    assert np.allclose(N, 1.0 * (R - 0.5), rtol=5e-3)
    assert np.allclose(Q, 0, atol=1e-4)
    x, w = line_quadrature(R - 0.5, R + 0.5, 64, 6)
    M_ref = lame_stresses(R, NU, 1.0, x)[1] * (x - R) @ w
    assert np.allclose(M, M_ref, rtol=2e-2)


def test_zero_load():
    sol = solve_ring(R, NU, 0.0, "clamped", RingMesh(R, 8, 2))
    assert np.all(sol.coeffs == 0)


def test_clamped_ends(clamped):
    r = np.linspace(R - 0.5, R + 0.5, 7)
    for th in (0.0, np.pi):
        wr, wt = clamped.displacement(np.full_like(r, th), r)
        assert np.all(np.abs(wr) < 1e-12) and np.all(np.abs(wt) < 1e-12)


def test_averages_are_linear(clamped):
    shift = np.array([0.3, -0.7])
    moved = RingSolution(clamped.mesh, NU, 1.0, "clamped", clamped.coeffs + shift, None, None)
    theta = np.array([0.4, 1.3, 2.2])
    a, b = thickness_average(clamped, theta), thickness_average(moved, theta)
    er = np.stack([np.cos(theta), np.sin(theta)], -1)
    et = np.stack([-np.sin(theta), np.cos(theta)], -1)
    assert np.allclose(b[0] - a[0], et @ shift)
    assert np.allclose(b[1] - a[1], er @ shift)
    assert np.allclose(b[2], a[2])
    # a rigid translation carries no stress
    assert np.allclose(integral_characteristics(moved, theta), integral_characteristics(clamped, theta))


def test_simply_supported_reactions():
    sol = solve_ring(R, NU, 1.0, "simply-supported", RingMesh(R, 32, 4))
    lx0, ly0, lx1, ly1 = sol.multipliers
    assert ly0 + ly1 == pytest.approx(2 * (R - 0.5), rel=1e-6)
    assert lx0 + lx1 == pytest.approx(0.0, abs=1e-6)
    r = np.linspace(R - 0.5, R + 0.5, 9)
    x, w = line_quadrature(R - 0.5, R + 0.5, 4, 6)
    for th in (0.0, np.pi):
        wr, wt = sol.displacement(np.full_like(x, th), x)
        assert abs(wr @ w) < 1e-9 and abs(wt @ w) < 1e-9


def test_characteristics_converge():
    vals = []
    for nt, nr in ((16, 2), (32, 4), (64, 8)):
        sol = solve_ring(R, NU, 1.0, "clamped", RingMesh(R, nt, nr))
        vals.append(np.array([v[0] for v in integral_characteristics(sol, [1.0])]))
    d1, d2 = np.abs(vals[1] - vals[0]), np.abs(vals[2] - vals[1])
    assert np.all(d2 < d1)


def test_threads_do_not_change_result():
    a = solve_ring(R, NU, 1.0, "clamped", RingMesh(R, 16, 2), threads=1, chunk=7)
    b = solve_ring(R, NU, 1.0, "clamped", RingMesh(R, 16, 2), threads=3, chunk=7)
    assert np.array_equal(a.coeffs, b.coeffs)
