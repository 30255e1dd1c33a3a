"""Plane-strain reference solver for the pressurized half-ring.

The annulus sector ``theta in [0, pi]``, ``r in [R - 1/2, R + 1/2]`` (rescaled,
unit thickness, ``mu = 1``) is discretized with a tensor basis on the polar
parameters; the unknowns are Cartesian displacement components, global DOF
``2 * function + component``. The shell arc coordinate is ``x2 = R theta``,
with ``e_r`` the shell normal and ``e_theta`` the arc tangent.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .assembly import Constraints, apply_constraints, scatter
from .errors import ValidationError
from .solve import solve_linear
from .splines import TensorBasis, gauss_legendre, make_basis

RING_CASES = ("free-sliding", "clamped", "simply-supported")


@dataclass(frozen=True)
class RingMesh:
    R: float
    n_theta: int = 64
    n_r: int = 4
    element: str = "q9"

    def __post_init__(self):
        if not self.R > 0.5:
            raise ValidationError("R must exceed 1/2 (inner radius positive)")
        if self.n_theta < 1 or self.n_r < 1:
            raise ValidationError("element counts must be positive")

    @property
    def inner(self):
        return self.R - 0.5

    @property
    def outer(self):
        return self.R + 0.5

    @cached_property
    def basis(self) -> TensorBasis:
        return TensorBasis(
            make_basis(self.element, self.n_theta, 0.0, np.pi),
            make_basis(self.element, self.n_r, self.inner, self.outer),
        )

    def nodes(self, theta, r):
        """Cartesian coordinates of polar parameter points."""
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def boundary(self, side):
        """Functions on 'start'/'end' sections or the 'inner'/'outer' arcs."""
        sides = {"start": "x1-", "end": "x1+", "inner": "x2-", "outer": "x2+"}
        return self.basis.boundary_functions(sides[side])


def polar_frame(theta):
    """Unit vectors ``e_r`` and ``e_theta`` as (..., 2) arrays."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c, s], -1), np.stack([-s, c], -1)


def lame_lambda(nu):
    """Rescaled first Lame constant (``mu = 1``)."""
    if not -1.0 < nu < 0.5:
        raise ValidationError("Poisson ratio must lie in (-1, 0.5)")
    return 2.0 * nu / (1.0 - 2.0 * nu)


def _elasticity(lam):
    return np.array([[lam + 2, lam, 0], [lam, lam + 2, 0], [0, 0, 1.0]])


def _cartesian_gradients(theta, r, dN):
    """Map parameter derivatives (d/dtheta, d/dr) to Cartesian (d/dx, d/dy)."""
    er, et = polar_frame(theta)
    return dN[..., 1, None] * er[..., None, :] + (dN[..., 0, None] / r[..., None, None]) * et[..., None, :]


def _b_matrix(G):
    """Strain-displacement operator (..., 3, 2 nloc) from Cartesian gradients (..., nloc, 2)."""
    B = np.zeros(G.shape[:-2] + (3, 2 * G.shape[-2]))
    B[..., 0, 0::2] = G[..., 0]
    B[..., 1, 1::2] = G[..., 1]
    B[..., 2, 0::2] = G[..., 1]
    B[..., 2, 1::2] = G[..., 0]
    return B


def _stiffness_batch(data, lam):
    th, r = data["x"][..., 0], data["x"][..., 1]
    B = _b_matrix(_cartesian_gradients(th, r, data["dN"]))
    w = data["w"] * r  # polar area element r dr dtheta
    K = np.einsum("eqki,kl,eqlj,eq->eij", B, _elasticity(lam), B, w)
    return 0.5 * (K + np.swapaxes(K, 1, 2))


def _split(data, chunk):
    n = len(data["conn"])
    return [{k: v[i : i + chunk] for k, v in data.items()} for i in range(0, n, chunk)]


def pressure_load(mesh: RingMesh, p, nq=None):
    """Consistent load of the pressure ``p`` acting along ``+e_r`` on the inner arc."""
    b1 = mesh.basis.b1
    nq = nq or b1.degree + 2
    t, w = gauss_legendre(nq)
    F = np.zeros(2 * mesh.basis.n_funcs)
    for e in range(b1.n_elems):
        lo, hi = b1.breaks[e], b1.breaks[e + 1]
        N = b1.eval_element(e, t)[0]
        er, _ = polar_frame(lo + t * (hi - lo))
        funcs = mesh.basis.index(b1.element_functions(e), 0)
        fe = np.einsum("qi,qc,q->ic", N, er, w * (hi - lo)) * p * mesh.inner
        np.add.at(F, 2 * funcs[:, None] + np.arange(2), fe)
    return F


def _section_integrals(mesh: RingMesh):
    """Integrals of the radial trace functions over a cross-section."""
    b2 = mesh.basis.b2
    t, w = gauss_legendre(b2.degree + 1)
    out = np.zeros(b2.n_funcs)
    for e in range(b2.n_elems):
        hl = b2.breaks[e + 1] - b2.breaks[e]
        np.add.at(out, b2.element_functions(e), b2.eval_element(e, t)[0].T @ (w * hl))
    return out


def ring_constraints(mesh: RingMesh, bc_case, data=None) -> Constraints:
    """Boundary conditions of the three cases on the end sections ``theta = 0, pi``.

    free-sliding: ``w_theta = 0`` on the ends and zero mean horizontal
    displacement (removes the rigid translation the ends leave free);
    clamped: all displacements zero; simply-supported: zero mean displacement
    of each end section, as integral constraints.
    """
    if bc_case not in RING_CASES:
        raise ValidationError(f"unknown boundary case {bc_case!r}")
    cons = Constraints()
    ends = (mesh.boundary("start"), mesh.boundary("end"))
    if bc_case == "clamped":
        for funcs in ends:
            cons.fix(2 * funcs)
            cons.fix(2 * funcs + 1)
    elif bc_case == "free-sliding":
        for funcs in ends:
            # e_theta = +-e_y on both ends
            cons.fix(2 * funcs + 1)
        if data is None:
            data = mesh.basis.element_data()
        wr = data["w"] * data["x"][..., 1]
        mass = np.zeros(mesh.basis.n_funcs)
        np.add.at(mass, data["conn"], np.einsum("eqi,eq->ei", data["N"], wr))
        cons.add_row(2 * np.arange(mesh.basis.n_funcs), mass)
    else:
        m = _section_integrals(mesh)
        for funcs in ends:
            for c in range(2):
                cons.add_row(2 * funcs + c, m)
    return cons


@dataclass
class RingSolution:
    mesh: RingMesh
    nu: float
    p: float
    bc_case: str
    coeffs: np.ndarray  # (n_funcs, 2) Cartesian
    report: object
    multipliers: np.ndarray

    @property
    def lam(self):
        return lame_lambda(self.nu)

    def _eval(self, theta, r):
        theta, r = np.broadcast_arrays(np.asarray(theta, float), np.asarray(r, float))
        flat_t, flat_r = theta.ravel(), r.ravel()
        w = np.zeros((flat_t.size, 2))
        g = np.zeros((flat_t.size, 2, 2))  # g[c, k] = d w_c / d x_k
        for k, (a, b) in enumerate(zip(flat_t, flat_r)):
            idx, N, dN = self.mesh.basis.eval_at(a, b)
            c = self.coeffs[idx]
            w[k] = N @ c
            G = _cartesian_gradients(np.full(len(N), a), np.full(len(N), b), dN[None])[0]
            g[k] = c.T @ G
        return w.reshape(theta.shape + (2,)), g.reshape(theta.shape + (2, 2)), theta

    def displacement(self, theta, r):
        """Polar components ``(w_r, w_theta)`` at parameter points."""
        w, _, theta = self._eval(theta, r)
        er, et = polar_frame(theta)
        return np.sum(w * er, -1), np.sum(w * et, -1)

    def stresses(self, theta, r):
        """Rescaled ``(sigma_rr, sigma_rtheta, sigma_thetatheta)`` evaluated directly from the field."""
        _, g, theta = self._eval(theta, r)
        eps = 0.5 * (g + np.swapaxes(g, -1, -2))
        tr = np.trace(eps, axis1=-2, axis2=-1)
        sig = 2.0 * eps + self.lam * tr[..., None, None] * np.eye(2)
        er, et = polar_frame(theta)
        proj = lambda u, v: np.einsum("...i,...ij,...j->...", u, sig, v)
        return proj(er, er), proj(er, et), proj(et, et)


def solve_ring(R, nu=0.3, p=1.0, bc_case="clamped", mesh: RingMesh | None = None, threads=1, chunk=512):
    """Solve the plane-strain half-ring under inner pressure ``p``."""
    mesh = mesh or RingMesh(R)
    if mesh.R != R:
        raise ValidationError("mesh radius does not match R")
    lam = lame_lambda(nu)
    basis = mesh.basis
    data = basis.element_data()
    batches = _split(data, chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda d: _stiffness_batch(d, lam), batches))
    else:
        parts = [_stiffness_batch(d, lam) for d in batches]
    Ke = np.concatenate(parts)
    dofs = (2 * data["conn"][..., None] + np.arange(2)).reshape(len(data["conn"]), -1)
    K, _ = scatter(2 * basis.n_funcs, dofs, Ke)
    F = pressure_load(mesh, p)
    sys = apply_constraints(K, F, ring_constraints(mesh, bc_case, data))
    d, report, mult = solve_linear(sys)
    return RingSolution(mesh, nu, p, bc_case, d.reshape(-1, 2), report, mult)


def _thickness_rule(mesh: RingMesh, nq=None):
    b2 = mesh.basis.b2
    t, w = gauss_legendre(nq or b2.degree + 2)
    r = np.concatenate([b2.breaks[e] + t * (b2.breaks[e + 1] - b2.breaks[e]) for e in range(b2.n_elems)])
    wt = np.concatenate([w * (b2.breaks[e + 1] - b2.breaks[e]) for e in range(b2.n_elems)])
    return r, wt


def thickness_average(sol: RingSolution, theta, nq=None):
    """Section averages ``(<w_theta>, <w_r>, 12 <w_theta xi>)`` at angles ``theta``.

    The last entry is the rotation comparable with the shell's ``psi_2``.
    """
    theta = np.atleast_1d(np.asarray(theta, float))
    if np.any((theta < 0) | (theta > np.pi)):
        raise ValidationError("theta must lie in [0, pi]")
    r, w = _thickness_rule(sol.mesh, nq)
    T, Rr = np.meshgrid(theta, r, indexing="ij")
    wr, wt = sol.displacement(T, Rr)
    xi = r - sol.mesh.R
    return wt @ w, wr @ w, 12.0 * (wt * xi) @ w


def integral_characteristics(sol: RingSolution, theta, nq=None):
    """``N = int s_tt``, ``M = int s_tt xi`` and ``Q = int s_rt`` over the section."""
    theta = np.atleast_1d(np.asarray(theta, float))
    r, w = _thickness_rule(sol.mesh, nq)
    T, Rr = np.meshgrid(theta, r, indexing="ij")
    _, srt, stt = sol.stresses(T, Rr)
    xi = r - sol.mesh.R
    return stt @ w, (stt * xi) @ w, srt @ w
