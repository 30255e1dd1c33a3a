"""Element B-matrices, stiffness, loads and global sparse assembly.

Unknowns are surface components per basis function, interleaved as
``(u1, u2, u, psi1, psi2)``: global DOF ``5 * function + field``. The
B-matrix maps element DOFs to the 8-entry generalized strain vector
``(gamma, rho, phi)`` of :mod:`shellcore` (Voigt, factor 2 on shear).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .geometry import Chart, SurfacePoint, evaluate_geometry
from .shellcore import LoadSet, Material, constitutive_matrix, external_work_coefficients
from .splines import TensorBasis

NFIELD = 5
U1, U2, UN, PSI1, PSI2 = range(NFIELD)
FIELD_NAMES = ("u1", "u2", "u", "psi1", "psi2")
_VOIGT = ((0, 0), (1, 1), (0, 1))


@dataclass(frozen=True)
class ElementContext:
    """Basis and geometry data for a batch of elements (leading axis = element).

    ``N`` (ne, nq, nloc), ``dN`` (ne, nq, nloc, 2); ``weight`` already includes
    the surface Jacobian ``sqrt(a)``.
    """

    conn: np.ndarray
    x: np.ndarray
    weight: np.ndarray
    N: np.ndarray
    dN: np.ndarray
    geom: SurfacePoint

    @property
    def n_elems(self):
        return self.conn.shape[0]

    def __getitem__(self, idx):
        idx = np.atleast_1d(np.arange(self.n_elems)[idx])
        return ElementContext(
            self.conn[idx], self.x[idx], self.weight[idx], self.N[idx], self.dN[idx], self.geom[idx]
        )

    def dofs(self):
        """Global DOF indices per element, shape (ne, 5 * nloc)."""
        return (NFIELD * self.conn[..., None] + np.arange(NFIELD)).reshape(self.n_elems, -1)


def build_contexts(basis: TensorBasis, chart: Chart, nq=None) -> ElementContext:
    nq1, nq2 = (nq, nq) if isinstance(nq, int) else (nq or (None, None))
    data = basis.element_data(nq1, nq2)
    geom = evaluate_geometry(chart, data["x"])
    if np.any(geom.sqrt_a <= 0):
        raise ConfigError("non-positive surface Jacobian")
    return ElementContext(data["conn"], data["x"], data["w"] * geom.sqrt_a, data["N"], data["dN"], geom)


@dataclass(frozen=True)
class BMatrices:
    """Full generalized-strain operator with named blocks.

    ``B`` has shape (..., 8, 5 * nloc). ``Bm_psi`` follows the sign convention
    ``delta rho = Bm_u d_u - Bm_psi d_psi``.
    """

    B: np.ndarray

    def _cols(self, fields):
        nd = self.B.shape[-1]
        return np.concatenate([np.arange(f, nd, NFIELD) for f in fields])

    @property
    def Bn(self):
        return self.B[..., 0:3, :]

    @property
    def Bm_u(self):
        return self.B[..., 3:6, self._cols((U1, U2, UN))]

    @property
    def Bm_psi(self):
        return -self.B[..., 3:6, self._cols((PSI1, PSI2))]

    @property
    def Bq_u(self):
        return self.B[..., 6:8, self._cols((U1, U2, UN))]

    @property
    def Bq_psi(self):
        return self.B[..., 6:8, self._cols((PSI1, PSI2))]


def b_matrix(N, dN, geom: SurfacePoint):
    """Generalized-strain operator for basis values ``N`` (..., nloc) and gradients (..., nloc, 2)."""
    N = np.asarray(N, float)
    dN = np.asarray(dN, float)
    G = geom.christoffel[..., None, :, :, :]  # (..., 1, l, a, b)
    bm = geom.b_mixed[..., None, :, :]  # b^l_a
    b = geom.b[..., None, :, :]
    nloc = N.shape[-1]
    eye = np.eye(2)
    Nn = N[..., None, None]
    # T[..., i, field, a, b] for gamma and rho; P[..., i, field, a] for phi
    shape = N.shape + (NFIELD, 2, 2)
    Tg = np.zeros(shape)
    Tr = np.zeros(shape)
    P = np.zeros(N.shape + (NFIELD, 2))
    for c in range(2):
        # d/d u_c of 0.5(u_a,b + u_b,a): 0.5(delta_ac dN_b + delta_bc dN_a)
        sym_grad = 0.5 * (eye[:, c][:, None] * dN[..., None, :] + eye[:, c][None, :] * dN[..., :, None])
        Tg[..., c, :, :] = sym_grad - G[..., c, :, :] * Nn
        Tr[..., PSI1 + c, :, :] = -sym_grad + G[..., c, :, :] * Nn
        # b^l_a varpi_{bl} with varpi_{bl} = (u_l,b - u_b,l)/2
        bw = 0.5 * (
            bm[..., c, :][..., :, None] * dN[..., None, :]
            - eye[c][None, :] * np.einsum("...la,...l->...a", bm, dN)[..., :, None]
        )
        Tr[..., c, :, :] = 0.5 * (bw + np.swapaxes(bw, -1, -2))
        P[..., c, :] = bm[..., c, :] * N[..., None]
        P[..., PSI1 + c, c] = N
    Tg[..., UN, :, :] = -b * Nn
    P[..., UN, :] = dN

    def voigt(T):
        rows = [T[..., a, b] * (1.0 if a == b else 2.0) for a, b in _VOIGT]
        return np.stack(rows, axis=-3)  # (..., 3, i, field)

    B = np.concatenate([voigt(Tg), voigt(Tr), np.moveaxis(P, -1, -3)], axis=-3)
    return B.reshape(B.shape[:-2] + (nloc * NFIELD,))


def build_b_matrices(ctx: ElementContext, qp=None) -> BMatrices:
    if qp is None:
        return BMatrices(b_matrix(ctx.N, ctx.dN, ctx.geom))
    return BMatrices(b_matrix(ctx.N[:, qp], ctx.dN[:, qp], ctx.geom[:, qp]))


def element_stiffness(ctx: ElementContext, mat: Material):
    """Dense symmetric element matrices, shape (ne, ndof, ndof)."""
    B = b_matrix(ctx.N, ctx.dN, ctx.geom)
    C = constitutive_matrix(ctx.geom, mat)
    K = np.einsum("eqki,eqkl,eqlj,eq->eij", B, C, B, ctx.weight, optimize=True)
    return 0.5 * (K + np.swapaxes(K, -1, -2))


def element_internal_force(ctx: ElementContext, mat: Material, dofs):
    """Internal force ``sum_q w B^T C B d`` for element DOF vectors ``dofs`` (ne, ndof)."""
    B = b_matrix(ctx.N, ctx.dN, ctx.geom)
    C = constitutive_matrix(ctx.geom, mat)
    strain = np.einsum("eqki,ei->eqk", B, dofs)
    stress = np.einsum("eqkl,eql->eqk", C, strain)
    return np.einsum("eqki,eqk,eq->ei", B, stress, ctx.weight)


def element_energy(ctx: ElementContext, mat: Material, dofs):
    B = b_matrix(ctx.N, ctx.dN, ctx.geom)
    C = constitutive_matrix(ctx.geom, mat)
    strain = np.einsum("eqki,ei->eqk", B, dofs)
    return 0.5 * np.einsum("eqk,eqkl,eql,eq->e", strain, C, strain, ctx.weight)


def element_load(ctx: ElementContext, loads: LoadSet, mat: Material):
    """Consistent load vectors (ne, ndof) from the external-work density."""
    c = external_work_coefficients(ctx.geom, loads, mat)
    N, dN = ctx.N, ctx.dN
    F = np.zeros(N.shape[:2] + (N.shape[-1], NFIELD))
    for k in range(2):
        F[..., k] = c.u_a[..., k, None] * N + np.einsum("eqb,eqib->eqi", c.du_a[..., k, :], dN)
        F[..., PSI1 + k] = c.psi[..., k, None] * N + np.einsum("eqb,eqib->eqi", c.dpsi[..., k, :], dN)
    F[..., UN] = c.u[..., None] * N + np.einsum("eqb,eqib->eqi", c.du, dN)
    return np.einsum("eqif,eq->eif", F, ctx.weight).reshape(ctx.n_elems, -1)


@dataclass
class Constraints:
    """Fixed DOFs (strong elimination) and linear multipoint constraints (multipliers)."""

    fixed: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def fix(self, dofs, value=0.0):
        for d in np.atleast_1d(dofs):
            self.fixed[int(d)] = float(value)

    def add_row(self, dofs, coeffs, rhs=0.0):
        self.rows.append((np.asarray(dofs, int), np.asarray(coeffs, float), float(rhs)))


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    F: np.ndarray
    n_dof: int
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    C: sp.csr_matrix | None = None
    c_rhs: np.ndarray | None = None

    def reduced(self):
        """Constrained system on the free DOFs (plus multiplier block if present)."""
        Kff = self.K[self.free][:, self.free]
        rhs = self.F[self.free] - self.K[self.free][:, self.fixed] @ self.fixed_values
        if self.C is None:
            return Kff.tocsc(), rhs
        Cf = self.C[:, self.free]
        crhs = self.c_rhs - self.C[:, self.fixed] @ self.fixed_values
        A = sp.bmat([[Kff, Cf.T], [Cf, None]], format="csc")
        return A, np.concatenate([rhs, crhs])

    def expand(self, x):
        d = np.zeros(self.n_dof)
        d[self.free] = x[: len(self.free)]
        d[self.fixed] = self.fixed_values
        return d, x[len(self.free):]


def scatter(n_dof, dofs, Ke, Fe=None):
    """Sum element matrices into a CSR matrix (deterministic: COO sum in element order)."""
    ne, nd = dofs.shape
    rows = np.repeat(dofs, nd, axis=1).ravel()
    cols = np.tile(dofs, (1, nd)).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n_dof, n_dof)).tocsr()
    K.sum_duplicates()
    F = None
    if Fe is not None:
        F = np.zeros(n_dof)
        np.add.at(F, dofs.ravel(), Fe.ravel())
    return K, F


def assemble(
    ctx: ElementContext,
    n_funcs: int,
    mat: Material,
    loads: LoadSet,
    constraints: Constraints | None = None,
    threads: int = 1,
    chunk: int = 256,
) -> GlobalSystem:
    """Global stiffness and load with constraints recorded.

    Element batches may be computed on several threads; results are merged in
    element order, so the matrix is identical for any thread count.
    """
    n_dof = NFIELD * n_funcs
    batches = [ctx[i : i + chunk] for i in range(0, ctx.n_elems, chunk)]

    def work(c):
        return element_stiffness(c, mat), element_load(c, loads, mat)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, batches))
    else:
        results = [work(c) for c in batches]
    Ke = np.concatenate([r[0] for r in results])
    Fe = np.concatenate([r[1] for r in results])
    K, F = scatter(n_dof, ctx.dofs(), Ke, Fe)
    return apply_constraints(K, F, constraints or Constraints())


def apply_constraints(K, F, constraints: Constraints) -> GlobalSystem:
    n_dof = K.shape[0]
    fixed = np.array(sorted(constraints.fixed), dtype=int)
    values = np.array([constraints.fixed[d] for d in fixed], dtype=float)
    mask = np.ones(n_dof, bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    C = c_rhs = None
    if constraints.rows:
        r, c, v = [], [], []
        for i, (dofs, coeffs, _) in enumerate(constraints.rows):
            r.extend([i] * len(dofs))
            c.extend(dofs)
            v.extend(coeffs)
        C = sp.csr_matrix((v, (r, c)), shape=(len(constraints.rows), n_dof))
        c_rhs = np.array([row[2] for row in constraints.rows])
    return GlobalSystem(K.tocsr(), F, n_dof, free, fixed, values, C, c_rhs)
