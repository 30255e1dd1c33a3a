"""Rescaled refined-shell constitutive layer.

Everything here is in thickness-rescaled units with the factor ``mu*h`` divided
out. Field values are given in surface components: covariant tangential
displacements ``u_a``, normal displacement ``u`` and total rotations ``psi_a``,
together with their partial derivatives in chart coordinates
(``du_a[a, b] = d u_a / d x^b``).

Voigt layout used throughout: strain-like ``(e11, e22, 2 e12)``, stress-like
``(s11, s22, s12)``; the generalized strain vector stacks
``(gamma, rho, phi)`` into 8 entries and the stress vector ``(n, m, q)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import SurfacePoint


@dataclass(frozen=True)
class Material:
    nu: float

    def __post_init__(self):
        if not -1.0 < self.nu < 0.5:
            raise ValidationError(f"Poisson ratio must lie in (-1, 0.5), got {self.nu}")

    @property
    def sigma(self):
        return self.nu / (1.0 - self.nu)


@dataclass(frozen=True)
class LoadSet:
    """Rescaled face loads: sums ``f`` and differences ``g`` of the face tractions.

    ``f_alpha``/``g_alpha`` are contravariant tangential parts; ``f_div`` and
    ``g_div`` their surface divergences (zero for uniform pressure).
    """

    f: float = 0.0
    g: float = 0.0
    f_alpha: tuple = (0.0, 0.0)
    g_alpha: tuple = (0.0, 0.0)
    f_div: float = 0.0
    g_div: float = 0.0

    @classmethod
    def inner_pressure(cls, p):
        """Pressure ``p`` on the face at ``xi = -1/2`` pushing along +n."""
        return cls(f=p, g=-p)

    def __post_init__(self):
        vals = [self.f, self.g, self.f_div, self.g_div, *self.f_alpha, *self.g_alpha]
        if not np.all(np.isfinite(vals)):
            raise ValidationError("loads must be finite")


@dataclass(frozen=True)
class StrainMeasureSet:
    gamma: np.ndarray
    rho: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True)
class StressResultantSet:
    n: np.ndarray
    m: np.ndarray
    q: np.ndarray


def _sym(t):
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def _raise2(a_inv, t):
    return np.einsum("...ac,...bd,...cd->...ab", a_inv, a_inv, t)


def _trace(a_inv, t):
    return np.einsum("...ab,...ab->...", a_inv, t)


def strain_measures(u_a, u, psi, du_a, du, dpsi, geom: SurfacePoint) -> StrainMeasureSet:
    """Extension, bending and shear-rotation measures from field values and partials."""
    u_a, u, psi = np.asarray(u_a, float), np.asarray(u, float), np.asarray(psi, float)
    du_a, du, dpsi = np.asarray(du_a, float), np.asarray(du, float), np.asarray(dpsi, float)
    G = geom.christoffel
    cov_u = du_a - np.einsum("...lab,...l->...ab", G, u_a)
    cov_psi = dpsi - np.einsum("...lab,...l->...ab", G, psi)
    gamma = _sym(cov_u) - geom.b * u[..., None, None]
    # varpi[a, b] = (u_b,a - u_a,b) / 2
    varpi = 0.5 * (np.swapaxes(du_a, -1, -2) - du_a)
    # b^l_a varpi_{b l}
    bw = np.einsum("...la,...bl->...ab", geom.b_mixed, varpi)
    rho = -_sym(cov_psi) + _sym(bw)
    phi = du + np.einsum("...la,...l->...a", geom.b_mixed, u_a) + psi
    return StrainMeasureSet(gamma, rho, phi)


def _gc_coupling(geom, mat, gamma, r_up, trg, trr):
    """The four geometric-correction invariants (without the -1/3 factor)."""
    s = mat.sigma
    # rho^{ab} b'^l_a gamma_{bl}
    t1 = np.einsum("...ab,...la,...bl->...", r_up, geom.b_dev, gamma)
    t2 = s * np.einsum("...ab,...ab->...", r_up, geom.b) * trg
    t3 = 0.6 * s * trr * np.einsum("...ab,...ab->...", geom.b_contra, gamma)
    t4 = s * (1.2 * s - 1.0) * trr * geom.H * trg
    return t1 + t2 + t3 + t4


def energy_density(s: StrainMeasureSet, geom: SurfacePoint, mat: Material):
    """Rescaled energy density: classical + geometric correction + shear correction."""
    sig = mat.sigma
    ai = geom.a_inv
    g_up = _raise2(ai, s.gamma)
    r_up = _raise2(ai, s.rho)
    trg = _trace(ai, s.gamma)
    trr = _trace(ai, s.rho)
    cl = sig * trg**2 + np.einsum("...ab,...ab->...", s.gamma, g_up)
    cl = cl + (sig * trr**2 + np.einsum("...ab,...ab->...", s.rho, r_up)) / 12.0
    gc = -_gc_coupling(geom, mat, s.gamma, r_up, trg, trr) / 3.0
    sc = 5.0 / 12.0 * np.einsum("...ab,...a,...b->...", ai, s.phi, s.phi)
    return cl + gc + sc


def stress_resultants(s: StrainMeasureSet, geom: SurfacePoint, mat: Material) -> StressResultantSet:
    """Contravariant membrane forces, bending moments and shear forces."""
    sig = mat.sigma
    ai = geom.a_inv
    bc = geom.b_contra
    H = geom.H[..., None, None]
    g_up = _raise2(ai, s.gamma)
    r_up = _raise2(ai, s.rho)
    trg = _trace(ai, s.gamma)[..., None, None]
    trr = _trace(ai, s.rho)[..., None, None]
    b_rho = np.einsum("...ab,...ab->...", geom.b, r_up)[..., None, None]
    b_gam = np.einsum("...ab,...ab->...", geom.b, g_up)[..., None, None]
    # rho^{a l} b'^b_l, symmetrized
    rb = _sym(np.einsum("...al,...bl->...ab", r_up, geom.b_dev))
    gb = _sym(np.einsum("...al,...bl->...ab", g_up, geom.b_dev))
    c = 1.2 * sig - 1.0
    n = 2.0 * (sig * trg * ai + g_up) - (rb + sig * ai * (b_rho + c * H * trr) + 0.6 * sig * trr * bc) / 3.0
    m = (sig * trr * ai + r_up) / 6.0 - (gb + sig * ai * (0.6 * b_gam + c * H * trg) + sig * trg * bc) / 3.0
    q = 5.0 / 6.0 * np.einsum("...ab,...b->...a", ai, s.phi)
    return StressResultantSet(n, m, q)


def voigt_strain(t):
    t = np.asarray(t)
    return np.stack([t[..., 0, 0], t[..., 1, 1], t[..., 0, 1] + t[..., 1, 0]], axis=-1)


def voigt_stress(t):
    t = np.asarray(t)
    return np.stack([t[..., 0, 0], t[..., 1, 1], 0.5 * (t[..., 0, 1] + t[..., 1, 0])], axis=-1)


def unvoigt_strain(v):
    v = np.asarray(v)
    out = np.empty(v.shape[:-1] + (2, 2))
    out[..., 0, 0] = v[..., 0]
    out[..., 1, 1] = v[..., 1]
    out[..., 0, 1] = out[..., 1, 0] = 0.5 * v[..., 2]
    return out


def strain_vector(s: StrainMeasureSet):
    return np.concatenate([voigt_strain(s.gamma), voigt_strain(s.rho), s.phi], axis=-1)


def stress_vector(r: StressResultantSet):
    return np.concatenate([voigt_stress(r.n), voigt_stress(r.m), r.q], axis=-1)


def constitutive_matrix(geom: SurfacePoint, mat: Material):
    """8x8 matrix ``C`` with ``stress_vector = C @ strain_vector`` at each point."""
    batch = np.shape(geom.H)
    cols = []
    for k in range(8):
        e = np.zeros(batch + (8,))
        e[..., k] = 1.0
        st = StrainMeasureSet(unvoigt_strain(e[..., 0:3]), unvoigt_strain(e[..., 3:6]), e[..., 6:8])
        cols.append(stress_vector(stress_resultants(st, geom, mat)))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class WorkCoefficients:
    """Linear coefficients of the external-work density in the field values."""

    u_a: np.ndarray
    u: np.ndarray
    psi: np.ndarray
    du_a: np.ndarray
    du: np.ndarray
    dpsi: np.ndarray = field(repr=False)


def external_work_coefficients(geom: SurfacePoint, loads: LoadSet, mat: Material) -> WorkCoefficients:
    """Coefficients of the rescaled external-work density.

    The density is linear in ``(u_a, u, psi, du_a, du, dpsi)``; these arrays
    are its gradient with respect to each of them.
    """
    s = mat.sigma
    ai = geom.a_inv
    H = geom.H
    batch = np.shape(H)
    fa = np.broadcast_to(np.asarray(loads.f_alpha, float), batch + (2,))
    ga = np.broadcast_to(np.asarray(loads.g_alpha, float), batch + (2,))
    c_gam = -0.5 * s * (loads.g + loads.f_div / 6.0)
    c_rho = 0.1 * s * (loads.f + loads.g_div / 12.0)
    Gc = np.einsum("...ab,...lab->...l", ai, geom.christoffel)
    bmix = geom.b_mixed
    gb = np.einsum("...a,...la->...l", ga, bmix)
    c_u = loads.f - H * loads.g - 2.0 * H * c_gam
    c_ua = fa - H[..., None] * ga + (0.5 + 1.0 / 12.0) * gb - c_gam * Gc
    c_du = (0.5 + 1.0 / 12.0) * ga
    c_dua = c_gam * ai
    c_psi = c_rho * Gc + ga / 12.0
    c_dpsi = -c_rho * ai
    return WorkCoefficients(c_ua, np.asarray(c_u), c_psi, c_dua, c_du, c_dpsi)


def external_work_density(u_a, u, psi, du_a, du, dpsi, geom, loads, mat):
    """Returns ``(Theta, coefficients)``; the coefficients are Theta's DOF-value gradient."""
    c = external_work_coefficients(geom, loads, mat)
    theta = (
        np.einsum("...a,...a->...", c.u_a, u_a)
        + c.u * u
        + np.einsum("...a,...a->...", c.psi, psi)
        + np.einsum("...ab,...ab->...", c.du_a, du_a)
        + np.einsum("...a,...a->...", c.du, du)
        + np.einsum("...ab,...ab->...", c.dpsi, dpsi)
    )
    return theta, c
