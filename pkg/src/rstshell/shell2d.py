"""2D refined-shell solver for the pressurized semi-cylinder.

The chart is the analytic cylinder; the unknown surface components are
discretized on a tensor basis over the parameter rectangle
``[0, L] x [0, W]`` (or ``[0, W/2]`` with crown symmetry for the freely
sliding case, which otherwise has a rigid translation mode).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import NFIELD, PSI1, PSI2, U1, U2, UN, Constraints, assemble, build_contexts
from .errors import ValidationError
from .geometry import CylinderChart, evaluate_geometry
from .shellcore import LoadSet, Material, StrainMeasureSet, strain_measures, stress_resultants
from .solve import solve_linear
from .splines import TensorBasis, make_basis

CASES = {1: "free-sliding", 2: "clamped", 3: "simply-supported"}
_BOTTOM_FIELDS = {1: (U1, U2, PSI1, PSI2), 2: (U1, U2, UN, PSI1, PSI2), 3: (U1, U2, UN)}


@dataclass(frozen=True)
class CylinderProblem:
    R: float
    nu: float = 0.3
    p: float = 1.0
    case: int = 2
    L: float = 10.0
    element: str = "nurbs-cubic"
    n1: int = 1
    n2: int = 16
    side: str = "sliding"

    def __post_init__(self):
        if self.case not in CASES:
            raise ValidationError(f"case must be 1, 2 or 3, got {self.case}")
        if not self.R > 1.0:
            raise ValidationError("R must exceed 1 (shell thinner than its radius)")
        if self.side not in ("sliding", "free"):
            raise ValidationError("side must be 'sliding' or 'free'")
        if self.n1 < 1 or self.n2 < 1:
            raise ValidationError("element counts must be positive")

    @property
    def W(self):
        return np.pi * self.R

    @property
    def symmetric(self):
        """Case 1 is solved on half the arc with symmetry at the crown."""
        return self.case == 1

    @property
    def x2_max(self):
        return self.W / 2 if self.symmetric else self.W


@dataclass
class ShellSolution:
    problem: CylinderProblem
    basis: TensorBasis
    chart: CylinderChart
    mat: Material
    loads: LoadSet
    coeffs: np.ndarray  # (n_funcs, 5)
    report: object

    @property
    def n_dof(self):
        return self.coeffs.size

    def _mirror(self, x):
        """Map points of the full arc into the solved half (Case 1) and flag mirrored ones."""
        x = np.array(x, dtype=float)
        flip = np.zeros(x.shape[:-1], bool)
        if self.problem.symmetric:
            W = self.problem.W
            flip = x[..., 1] > W / 2
            x[..., 1] = np.where(flip, W - x[..., 1], x[..., 1])
        return x, flip

    def fields(self, x):
        """Values and partials of all five fields at points ``x`` (..., 2).

        Returns ``vals`` (..., 5) and ``grads`` (..., 5, 2). Case-1 points past
        the crown are reflected (u2, psi2 odd; the rest even).
        """
        x = np.asarray(x, float)
        xs, flip = self._mirror(x)
        flat = xs.reshape(-1, 2)
        vals = np.zeros((len(flat), NFIELD))
        grads = np.zeros((len(flat), NFIELD, 2))
        for k, (a, b) in enumerate(flat):
            idx, N, dN = self.basis.eval_at(a, b)
            c = self.coeffs[idx]
            vals[k] = N @ c
            grads[k] = np.einsum("if,ib->fb", c, dN)
        vals = vals.reshape(x.shape[:-1] + (NFIELD,))
        grads = grads.reshape(x.shape[:-1] + (NFIELD, 2))
        if np.any(flip):
            odd = np.array([1, -1, 1, 1, -1], float)
            # d/dx2 flips sign under reflection
            vals = np.where(flip[..., None], vals * odd, vals)
            g = grads * odd[:, None]
            g[..., 1] *= -1
            grads = np.where(flip[..., None, None], g, grads)
        return vals, grads

    def strains(self, x):
        vals, grads = self.fields(x)
        geom = evaluate_geometry(self.chart, x)
        s = strain_measures(
            vals[..., [U1, U2]], vals[..., UN], vals[..., [PSI1, PSI2]],
            grads[..., [U1, U2], :], grads[..., UN, :], grads[..., [PSI1, PSI2], :], geom,
        )
        return s, geom, vals

    def resultants(self, x):
        s, geom, _ = self.strains(x)
        return stress_resultants(s, geom, self.mat), s, geom

    def sample_section(self, x2, x1=None):
        """Mid-section samples along the arc (rescaled): dict of 1D arrays."""
        from .post import total_resultants, true_normal_displacement

        x1 = self.problem.L / 2 if x1 is None else x1
        x2 = np.asarray(x2, float)
        pts = np.stack([np.full_like(x2, x1), x2], axis=-1)
        r, s, geom = self.resultants(pts)
        vals, _ = self.fields(pts)
        T, mM, Q = total_resultants(r, self.loads, geom, self.mat)
        return {
            "x2": x2,
            "u1": vals[..., U1],
            "u2": vals[..., U2],
            "u": vals[..., UN],
            "psi2": vals[..., PSI2],
            "u_true": true_normal_displacement(vals[..., UN], s.rho, geom, self.mat),
            "N": T[..., 1, 1],
            "minus_M": mM[..., 1, 1],
            "Q": Q[..., 1],
        }


def boundary_constraints(problem: CylinderProblem, basis: TensorBasis) -> Constraints:
    cons = Constraints()

    def fix(side, fields):
        funcs = basis.boundary_functions(side)
        for f in fields:
            cons.fix(NFIELD * funcs + f)

    if problem.side == "sliding":
        fix("x1-", (U1, PSI1))
        fix("x1+", (U1, PSI1))
    fields = _BOTTOM_FIELDS[problem.case]
    fix("x2-", fields)
    if problem.symmetric:
        fix("x2+", (U2, PSI2))
    else:
        fix("x2+", fields)
    return cons


def solve_cylinder(problem: CylinderProblem, threads=1, nq=None) -> ShellSolution:
    chart = CylinderChart(problem.R, problem.L)
    b1 = make_basis(problem.element, problem.n1, 0.0, problem.L)
    b2 = make_basis(problem.element, problem.n2, 0.0, problem.x2_max)
    basis = TensorBasis(b1, b2)
    mat = Material(problem.nu)
    loads = LoadSet.inner_pressure(problem.p)
    ctx = build_contexts(basis, chart, nq)
    sys = assemble(ctx, basis.n_funcs, mat, loads, boundary_constraints(problem, basis), threads=threads)
    d, report, _ = solve_linear(sys)
    return ShellSolution(problem, basis, chart, mat, loads, d.reshape(-1, NFIELD), report)


def quadrature_grid(sol: ShellSolution, nq=None, full_arc=True):
    """Quadrature points and weights (param weight * sqrt a) over the solved surface.

    With ``full_arc`` and a symmetric solve, the half-domain rule is mirrored.
    """
    from .splines import gauss_legendre

    b1, b2 = sol.basis.b1, sol.basis.b2
    nq = nq or max(b1.degree, b2.degree) + 3
    t, w = gauss_legendre(nq)
    xs1 = np.concatenate([b1.breaks[e] + t * (b1.breaks[e + 1] - b1.breaks[e]) for e in range(b1.n_elems)])
    ws1 = np.concatenate([w * (b1.breaks[e + 1] - b1.breaks[e]) for e in range(b1.n_elems)])
    xs2 = np.concatenate([b2.breaks[e] + t * (b2.breaks[e + 1] - b2.breaks[e]) for e in range(b2.n_elems)])
    ws2 = np.concatenate([w * (b2.breaks[e + 1] - b2.breaks[e]) for e in range(b2.n_elems)])
    if sol.problem.symmetric and full_arc:
        xs2 = np.concatenate([xs2, sol.problem.W - xs2[::-1]])
        ws2 = np.concatenate([ws2, ws2[::-1]])
    X = np.stack(np.meshgrid(xs1, xs2, indexing="ij"), -1)
    Wt = np.outer(ws1, ws2)
    geom = evaluate_geometry(sol.chart, X)
    return X, Wt * geom.sqrt_a


def section_strain_set(sol, x2):
    """Strain measures along the mid-section, convenience for post-processing."""
    x2 = np.asarray(x2, float)
    pts = np.stack([np.full_like(x2, sol.problem.L / 2), x2], -1)
    s, geom, vals = sol.strains(pts)
    return StrainMeasureSet(s.gamma, s.rho, s.phi), geom, vals
