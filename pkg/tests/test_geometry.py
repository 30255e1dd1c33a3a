import numpy as np
import pytest

from rstshell.errors import DomainError
from rstshell.geometry import (
    CylinderChart,
    FlatChart,
    SplineChart,
    UserChart,
    christoffel_fd,
    evaluate_geometry,
    paraboloid_chart,
    polar_plane_chart,
    rescale_second_form,
)
from rstshell.splines import quarter_arc_patch


def test_cylinder_at_origin():
    g = evaluate_geometry(CylinderChart(10.0, 10.0), [0.0, 0.0])
    assert np.allclose(g.t1, [-1, 0, 0])
    assert np.allclose(g.t2, [0, 0, 1])
    assert np.allclose(g.normal, [0, 1, 0])
    assert g.b[1, 1] == pytest.approx(-0.1)


def test_cylinder_forms_everywhere(rng):
    chart = CylinderChart(10.0, 10.0)
    x = rng.random((20, 2)) * [10.0, chart.W]
    g = evaluate_geometry(chart, x)
    assert np.allclose(g.a, np.eye(2), atol=1e-14)
    assert np.allclose(g.b, [[0, 0], [0, -0.1]], atol=1e-14)
    assert np.all(g.christoffel == 0.0)
    assert np.allclose(g.H, -0.05)
    assert np.allclose(g.b_dev, np.diag([0.05, -0.05]), atol=1e-15)


def test_flat_rectangle_is_curvature_free():
    g = evaluate_geometry(FlatChart(2.0, 3.0), [[0.3, 1.2], [1.9, 0.0]])
    assert np.all(g.b == 0) and np.all(g.christoffel == 0)
    assert np.all(g.H == 0) and np.all(g.K == 0)


def test_polar_plane_christoffel():
    rho = 1.3
    g = evaluate_geometry(polar_plane_chart(), [rho, 0.4])
    # x = (rho, theta): Gamma^rho_{theta theta} = -rho, Gamma^theta_{rho theta} = 1/rho
    assert g.christoffel[0, 1, 1] == pytest.approx(-rho)
    assert g.christoffel[1, 0, 1] == pytest.approx(1 / rho)


@pytest.mark.parametrize(
    "chart,x",
    [
        (polar_plane_chart(), [1.1, 0.7]),
        (paraboloid_chart(), [1.3, -2.2]),
        (SplineChart(quarter_arc_patch(3.0, 2.0)), [0.37, 0.61]),
    ],
)
def test_christoffel_matches_fd(chart, x):
    g = evaluate_geometry(chart, x)
    span = np.ptp(chart.domain, axis=1).max()
    fd = christoffel_fd(chart, np.asarray(x), 1e-5 * span)
    scale = max(np.abs(g.christoffel).max(), 1e-12)
    assert np.max(np.abs(fd - g.christoffel)) / scale < 1e-6
    assert np.allclose(g.christoffel, np.swapaxes(g.christoffel, 1, 2))


@pytest.mark.parametrize("chart", [paraboloid_chart(), SplineChart(quarter_arc_patch(2.0, 1.0)), CylinderChart(3.0, 5.0)])
def test_surface_point_invariants(chart, rng):
    lo, hi = chart.domain[:, 0], chart.domain[:, 1]
    x = lo + rng.random((30, 2)) * (hi - lo)
    g = evaluate_geometry(chart, x)
    assert np.max(np.abs(np.einsum("...i,...ai->...a", g.normal, g.tangents))) < 1e-12
    assert np.allclose(np.linalg.norm(g.normal, axis=-1), 1.0, atol=1e-12)
    assert np.max(np.abs(g.a @ g.a_inv - np.eye(2))) < 1e-12
    assert np.allclose(g.b, np.swapaxes(g.b, -1, -2))
    assert np.allclose(g.H, 0.5 * np.trace(g.b_mixed, axis1=-2, axis2=-1))
    assert np.allclose(g.b_dev, g.b_mixed - g.H[..., None, None] * np.eye(2))


def test_domain_error():
    with pytest.raises(DomainError):
        evaluate_geometry(CylinderChart(10.0, 10.0), [11.0, 0.0])


def test_degenerate_chart_rejected():
    def f(p):
        return np.zeros(3), np.array([[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]]), np.zeros((3, 2, 2))

    with pytest.raises(DomainError):
        evaluate_geometry(UserChart(f, [[0, 1], [0, 1]]), [0.5, 0.5])


def test_rescale_second_form():
    b = np.array([[0.0, 0.0], [0.0, -1.0 / 10.0]])
    assert rescale_second_form(b, 1.0)[1, 1] == pytest.approx(-0.1)
    # b22 = -1/R with R = 10 h
    h = 0.02
    assert rescale_second_form(np.diag([0.0, -1 / (10 * h)]), h)[1, 1] == pytest.approx(-0.1)
    assert np.all(rescale_second_form(np.zeros((2, 2)), 3.0) == 0)
    with pytest.raises(ValueError):
        rescale_second_form(b, 0.0)
