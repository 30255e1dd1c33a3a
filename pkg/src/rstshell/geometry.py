"""Mid-surface geometry in rescaled coordinates.

A chart maps parameters ``x = (x1, x2)`` to points ``r(x)`` in 3D and supplies
analytic first and second derivatives. :func:`evaluate_geometry` turns these
into fundamental forms, the unit normal, curvature invariants and Christoffel
symbols. Every array carries arbitrary leading batch dimensions so the same
code serves single points and whole quadrature grids.

Index conventions (batch dims omitted):

* ``dr[i, a]``        = d r_i / d x^a
* ``ddr[i, a, b]``    = d^2 r_i / d x^a d x^b
* ``tangents[a, i]``  = t_a components
* ``christoffel[l, a, b]`` = Gamma^l_{ab}
* ``b_mixed[l, a]``   = b^l_a
* ``t_derivs[a, b, i]`` = d t_a / d x^b
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DomainError

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class SurfacePoint:
    position: np.ndarray
    tangents: np.ndarray
    normal: np.ndarray
    a: np.ndarray
    a_inv: np.ndarray
    sqrt_a: np.ndarray
    b: np.ndarray
    b_mixed: np.ndarray
    b_dev: np.ndarray
    H: np.ndarray
    K: np.ndarray
    christoffel: np.ndarray
    t_derivs: np.ndarray

    @property
    def t1(self):
        return self.tangents[..., 0, :]

    @property
    def t2(self):
        return self.tangents[..., 1, :]

    @property
    def b_contra(self):
        """Fully contravariant second form b^{ab}."""
        return np.einsum("...ac,...cd,...db->...ab", self.a_inv, self.b, self.a_inv)

    def __getitem__(self, idx):
        """Slice along the batch dimensions."""
        return SurfacePoint(**{k: np.asarray(getattr(self, k))[idx] for k in self.__dataclass_fields__})


class Chart:
    """A C^2 parametrization of a mid-surface over a rectangular domain."""

    kind = "user-chart"

    def __init__(self, domain):
        self.domain = np.asarray(domain, dtype=float).reshape(2, 2)

    def derivatives(self, x):
        """Return ``(r, dr, ddr)`` at points ``x`` of shape (..., 2)."""
        raise NotImplementedError

    def finalize(self, g):
        """Hook for charts with exactly known geometric quantities."""
        return g

    def check_domain(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain[:, 0], self.domain[:, 1]
        span = np.maximum(hi - lo, 1.0)
        if np.any(x < lo - tol * span) or np.any(x > hi + tol * span):
            raise DomainError(f"point outside chart domain {self.domain.tolist()}")


class CylinderChart(Chart):
    """Semi-cylinder ``z = -x1 e1 + R cos(x2/R) e2 + R sin(x2/R) e3``.

    ``x1`` in [0, L], ``x2`` in [0, pi R]; all lengths rescaled by thickness.
    """

    kind = "cylinder"

    def __init__(self, R, L):
        if R <= 0 or L <= 0:
            raise ValueError("cylinder needs R > 0 and L > 0")
        self.R = float(R)
        self.L = float(L)
        self.W = np.pi * self.R
        super().__init__([[0.0, self.L], [0.0, self.W]])

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        R = self.R
        th = x[..., 1] / R
        c, s = np.cos(th), np.sin(th)
        one = np.ones_like(c)
        r = np.stack([-x[..., 0], R * c, R * s], axis=-1)
        dr = np.zeros(x.shape[:-1] + (3, 2))
        dr[..., 0, 0] = -one
        dr[..., 1, 1] = -s
        dr[..., 2, 1] = c
        ddr = np.zeros(x.shape[:-1] + (3, 2, 2))
        ddr[..., 1, 1, 1] = -c / R
        ddr[..., 2, 1, 1] = -s / R
        return r, dr, ddr

    def finalize(self, g):
        # orthonormal coordinates on a developable surface: Gamma vanishes identically
        return replace(g, christoffel=np.zeros_like(g.christoffel))


class FlatChart(Chart):
    """Flat rectangle ``z = x1 e1 + x2 e2``."""

    kind = "flat-rectangle"

    def __init__(self, Lx, Ly):
        super().__init__([[0.0, float(Lx)], [0.0, float(Ly)]])

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        r = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
        dr = np.zeros(x.shape[:-1] + (3, 2))
        dr[..., 0, 0] = 1.0
        dr[..., 1, 1] = 1.0
        ddr = np.zeros(x.shape[:-1] + (3, 2, 2))
        return r, dr, ddr


class UserChart(Chart):
    """Chart defined by a callback returning ``(r, dr, ddr)`` for one point."""

    def __init__(self, func: Callable, domain):
        super().__init__(domain)
        self.func = func

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        out = [self.func(p) for p in flat]
        r = np.array([o[0] for o in out], dtype=float).reshape(x.shape[:-1] + (3,))
        dr = np.array([o[1] for o in out], dtype=float).reshape(x.shape[:-1] + (3, 2))
        ddr = np.array([o[2] for o in out], dtype=float).reshape(x.shape[:-1] + (3, 2, 2))
        return r, dr, ddr


class SplineChart(Chart):
    """Chart given by a NURBS surface patch (parameters are the patch parameters)."""

    kind = "spline"

    def __init__(self, patch):
        self.patch = patch
        super().__init__(
            [[patch.kv1.knots[0], patch.kv1.knots[-1]], [patch.kv2.knots[0], patch.kv2.knots[-1]]]
        )

    def derivatives(self, x):
        from .splines import nurbs_surface_eval

        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        pts, d1, d2 = zip(*(nurbs_surface_eval(self.patch, p) for p in flat))
        shape = x.shape[:-1]
        return (
            np.array(pts).reshape(shape + (3,)),
            np.array(d1).reshape(shape + (3, 2)),
            np.array(d2).reshape(shape + (3, 2, 2)),
        )


def polar_plane_chart(rho_range=(0.5, 2.0), theta_range=(0.0, np.pi / 2)):
    """Plane in polar coordinates ``z = (rho cos th, rho sin th, 0)``, x = (rho, th)."""

    def f(p):
        rho, th = p
        c, s = np.cos(th), np.sin(th)
        r = np.array([rho * c, rho * s, 0.0])
        dr = np.array([[c, -rho * s], [s, rho * c], [0.0, 0.0]])
        ddr = np.zeros((3, 2, 2))
        ddr[:, 0, 1] = ddr[:, 1, 0] = [-s, c, 0.0]
        ddr[:, 1, 1] = [-rho * c, -rho * s, 0.0]
        return r, dr, ddr

    return UserChart(f, [rho_range, theta_range])


def paraboloid_chart(kx=0.1, ky=-0.05, kxy=0.03, size=4.0):
    """Doubly curved test surface ``z = (x, y, (kx x^2 + 2 kxy x y + ky y^2) / 2)``.

    Nonzero Christoffel symbols and both curvature signs make it a generic
    oracle surface for the shell kernels.
    """

    def f(p):
        x, y = p
        zx, zy = kx * x + kxy * y, kxy * x + ky * y
        r = np.array([x, y, 0.5 * (kx * x * x + 2 * kxy * x * y + ky * y * y)])
        dr = np.array([[1.0, 0.0], [0.0, 1.0], [zx, zy]])
        ddr = np.zeros((3, 2, 2))
        ddr[2] = [[kx, kxy], [kxy, ky]]
        return r, dr, ddr

    return UserChart(f, [[-size, size], [-size, size]])


def surface_from_derivatives(r, dr, ddr):
    """Build a :class:`SurfacePoint` from chart derivatives."""
    r = np.asarray(r, dtype=float)
    tangents = np.swapaxes(dr, -1, -2)
    cross = np.cross(tangents[..., 0, :], tangents[..., 1, :])
    norm = np.linalg.norm(cross, axis=-1)
    if np.any(norm < DEGENERACY_TOL):
        raise DomainError("degenerate chart: |t1 x t2| below tolerance")
    n = cross / norm[..., None]
    a = np.einsum("...ai,...bi->...ab", tangents, tangents)
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    a_inv = np.empty_like(a)
    a_inv[..., 0, 0] = a[..., 1, 1] / det
    a_inv[..., 1, 1] = a[..., 0, 0] / det
    a_inv[..., 0, 1] = -a[..., 0, 1] / det
    a_inv[..., 1, 0] = -a[..., 1, 0] / det
    b = np.einsum("...iab,...i->...ab", ddr, n)
    b = 0.5 * (b + np.swapaxes(b, -1, -2))
    b_mixed = np.einsum("...lm,...ma->...la", a_inv, b)
    H = 0.5 * (b_mixed[..., 0, 0] + b_mixed[..., 1, 1])
    K = (b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] ** 2) / det
    eye = np.eye(2)
    b_dev = b_mixed - H[..., None, None] * eye
    # Gamma^l_{ab} = a^{lm} t_m . r_{,ab}
    proj = np.einsum("...mi,...iab->...mab", tangents, ddr)
    christoffel = np.einsum("...lm,...mab->...lab", a_inv, proj)
    t_derivs = np.moveaxis(ddr, -3, -1)
    return SurfacePoint(
        position=r,
        tangents=tangents,
        normal=n,
        a=a,
        a_inv=a_inv,
        sqrt_a=np.sqrt(det),
        b=b,
        b_mixed=b_mixed,
        b_dev=b_dev,
        H=H,
        K=K,
        christoffel=christoffel,
        t_derivs=t_derivs,
    )


def evaluate_geometry(chart: Chart, x) -> SurfacePoint:
    """Fundamental forms, normal, curvatures and Christoffel symbols at ``x``."""
    x = np.asarray(x, dtype=float)
    chart.check_domain(x)
    return chart.finalize(surface_from_derivatives(*chart.derivatives(x)))


def rescale_second_form(b_physical, h):
    """Second fundamental form in thickness-rescaled coordinates: ``h * b``."""
    if not h > 0:
        raise ValueError(f"thickness must be positive, got {h}")
    return h * np.asarray(b_physical, dtype=float)


def christoffel_fd(chart: Chart, x, step):
    """Christoffel symbols from central differences of the metric.

    Independent of :func:`surface_from_derivatives`; used as a test oracle.
    """
    x = np.asarray(x, dtype=float)

    def metric(p):
        _, dr, _ = chart.derivatives(p)
        return dr.T @ dr

    da = np.zeros((2, 2, 2))  # da[m, a, c] = d a_{ma} / d x^c
    for c in range(2):
        e = np.zeros(2)
        e[c] = step
        da[:, :, c] = (metric(x + e) - metric(x - e)) / (2 * step)
    a_inv = np.linalg.inv(metric(x))
    G = np.zeros((2, 2, 2))
    for lam in range(2):
        for al in range(2):
            for be in range(2):
                G[lam, al, be] = 0.5 * sum(
                    a_inv[lam, m] * (da[m, al, be] + da[m, be, al] - da[al, be, m]) for m in range(2)
                )
    return G
