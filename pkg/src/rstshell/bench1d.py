"""Arc-model benchmarks for the pressurized semi-cylinder in plane strain.

Closed forms (freely sliding case, Lame thick ring, classical-theory arc) and
the two-point boundary-value problems of the refined (RST) and classical
(CST) arc models, solved by collocation with ``scipy.integrate.solve_bvp``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_bvp

from .errors import DomainError, SolverError, ValidationError

BC_CASES = ("free-sliding", "clamped", "simply-supported")
RST_FIELDS = ("u2", "psi2", "u", "gamma", "rho", "phi")
CST_FIELDS = ("u", "u2", "gamma", "v", "rho", "vartheta")


def sigma_of(nu):
    return nu / (1.0 - nu)


@dataclass(frozen=True)
class ArcProblem:
    R: float
    nu: float = 0.3
    p: float = 1.0
    bc_case: str = "clamped"
    theory: str = "RST"

    def __post_init__(self):
        if not self.R > 1.0:
            raise ValidationError("R must exceed 1")
        if self.bc_case not in BC_CASES:
            raise ValidationError(f"unknown boundary case {self.bc_case!r}")
        if self.theory not in ("RST", "CST"):
            raise ValidationError("theory must be RST or CST")
        if not np.isfinite(self.p):
            raise ValidationError("load must be finite")
        if not -1.0 < self.nu < 0.5:
            raise ValidationError("Poisson ratio must lie in (-1, 0.5)")

    @property
    def sigma(self):
        return sigma_of(self.nu)

    @property
    def W(self):
        return np.pi * self.R

    @property
    def coupling(self):
        """Constitutive gamma-rho coupling of the refined arc model."""
        s = self.sigma
        return (1 + s) * (1 + 1.2 * s) / (6.0 * self.R)

    @property
    def load(self):
        """Effective normal load ``p (1 - (1 - sigma) / (2R))``."""
        return self.p * (1.0 - (1.0 - self.sigma) / (2.0 * self.R))


@dataclass
class BvpSolution:
    problem: ArcProblem
    x2: np.ndarray
    y: np.ndarray  # (6, n)
    fields: tuple
    sol: object = None
    max_residual: float = 0.0

    def __getitem__(self, name):
        return self.y[self.fields.index(name)]

    def interpolant(self, name):
        """Callable evaluating ``name`` at arbitrary arc positions."""
        k = self.fields.index(name)
        if self.sol is None:
            return lambda x: np.interp(x, self.x2, self.y[k])
        return lambda x: self.sol(np.asarray(x, float))[k]


def case1_analytic(R, nu, p):
    """Uniform normal displacement and extension of the freely sliding case."""
    s = sigma_of(nu)
    u = p * R**2 / (2 * (1 + s)) * (1 - (1 - s) / (2 * R))
    return u, u / R


def lame_radial(R, nu, p, zeta):
    """Plane-strain thick-ring radial displacement at ``zeta = xi / R``."""
    zeta = np.asarray(zeta, float)
    lim = 1.0 / (2 * R)
    if np.any(np.abs(zeta) > lim + 1e-14):
        raise DomainError(f"zeta must lie in [-{lim}, {lim}]")
    return p * R**2 / 4 * (1 - lim) ** 2 * ((1 - 2 * nu) * (1 + zeta) + (1 + lim) ** 2 / (1 + zeta))


def lame_average(R, nu, p):
    """Thickness average of :func:`lame_radial` (``xi`` over (-1/2, 1/2))."""
    val, _ = quad(lambda xi: lame_radial(R, nu, p, xi / R), -0.5, 0.5, epsabs=1e-13, epsrel=1e-13)
    return val


def lame_stresses(R, nu, p, r):
    """Rescaled (per mu) radial and hoop stresses of the pressurized thick ring."""
    a, b = R - 0.5, R + 0.5
    c = p * a**2 / (b**2 - a**2)
    r = np.asarray(r, float)
    return c * (1 - b**2 / r**2), c * (1 + b**2 / r**2)


def cst_case1_closed_form(R, nu, p, x2):
    """Classical-theory arc solution of the freely sliding case: ``(u, u2)``."""
    x2 = np.asarray(x2, float)
    c = 0.5 * p * R**2 * (1 - nu)
    u = -c * (np.pi / 2 * np.sin(x2 / R) - 2)
    u2 = c * (np.pi / 2 - np.pi / 2 * np.cos(x2 / R) - x2 / R)
    return u, u2


def _rst_rhs(pr: ArcProblem):
    R, s, P = pr.R, pr.sigma, pr.load
    k = (1 + 1.2 * s) ** 2 / (12 * R**2)
    c_g = s / (2 * (1 + s) * R * (1 - k))
    c_r = -5 * (1 - (1 + 1.2 * s) / (12 * R**2)) / ((1 + s) * (1 - k))
    c_n = (1 + s) * (1 + 1.2 * s) / (6 * R**2)

    def f(x, y):
        u2, psi2, u, g, r, ph = y
        return np.vstack(
            [
                g - u / R,
                -r,
                ph + u2 / R - psi2,
                c_g * ph,
                c_r * ph,
                1.2 * (2 * (1 + s) / R * g + c_n * r - P),
            ]
        )

    return f


def _cst_rhs(pr: ArcProblem):
    R, s, p = pr.R, pr.sigma, pr.p

    def f(x, y):
        u, u2, g, v, r, th = y
        return np.vstack([v, g - u / R, th / (12 * R), r + (g - u / R) / R, th, 6 * p / (1 + s) - 12 * g / R])

    return f


def _rst_bc(pr: ArcProblem):
    s, p, k = pr.sigma, pr.p, pr.coupling

    def moment(y):
        return (1 + s) / 6 * y[4] + k * y[3]

    if pr.bc_case == "clamped":
        return lambda a, b: np.array([a[0], a[1], a[2], b[0], b[1], b[2]])
    if pr.bc_case == "simply-supported":
        return lambda a, b: np.array([a[0], a[2], moment(a) - s * p / 10, b[0], b[2], moment(b) - s * p / 10])
    # free-sliding, solved on half the arc: base u2 = psi2 = q = 0; crown symmetry u2 = psi2 = q = 0
    return lambda a, b: np.array([a[0], a[1], a[5], b[0], b[1], b[5]])


def _cst_bc(pr: ArcProblem):
    if pr.bc_case == "clamped":
        return lambda a, b: np.array([a[0], a[1], a[3], b[0], b[1], b[3]])
    if pr.bc_case == "simply-supported":
        # vanishing bending moment (rho = 0) at a simple support
        return lambda a, b: np.array([a[0], a[1], a[4], b[0], b[1], b[4]])
    raise ValidationError("the classical arc model is only solved for clamped or simply supported ends")


def solve_arc(pr: ArcProblem, n_points=2048, tol=1e-10, max_nodes=200000) -> BvpSolution:
    """Solve the arc BVP on a uniform initial grid of ``n_points`` nodes.

    The freely sliding case is solved on half the arc with crown symmetry
    and mirrored, since the full-arc problem has a rigid translation mode.
    """
    if n_points < 32:
        raise ValidationError("n_points must be at least 32")
    half = pr.bc_case == "free-sliding"
    span = pr.W / 2 if half else pr.W
    x = np.linspace(0.0, span, n_points)
    if pr.theory == "RST":
        f, bc, names = _rst_rhs(pr), _rst_bc(pr), RST_FIELDS
    else:
        f, bc, names = _cst_rhs(pr), _cst_bc(pr), CST_FIELDS
    y0 = np.zeros((6, n_points))
    res = solve_bvp(f, bc, x, y0, tol=tol, max_nodes=max_nodes)
    if res.status != 0:
        raise SolverError(f"BVP did not converge: {res.message}", defect=float(np.max(res.rms_residuals)))
    xs = np.linspace(0.0, pr.W, n_points)
    if half:
        odd = np.array([-1, -1, 1, 1, 1, -1], float)
        inner = np.minimum(xs, pr.W - xs)
        flip = xs > pr.W / 2
        y = res.sol(inner)
        y = np.where(flip[None, :], y * odd[:, None], y)

        def sol(t, _s=res.sol):
            t = np.asarray(t, float)
            out = _s(np.minimum(t, pr.W - t))
            return np.where((t > pr.W / 2)[None, ...], out * odd.reshape((6,) + (1,) * t.ndim), out)

        return BvpSolution(pr, xs, y, names, sol, float(np.max(res.rms_residuals)))
    return BvpSolution(pr, xs, res.sol(xs), names, res.sol, float(np.max(res.rms_residuals)))


def arc_resultants(sol: BvpSolution):
    """Sampled total resultants ``(N, -M, Q)`` along the arc.

    Refined model: ``n - sigma p / 2``, ``m - sigma p / 10``, ``q``. Classical
    model: ``n``, ``m`` and ``q = m'``.
    """
    pr = sol.problem
    s, p = pr.sigma, pr.p
    if pr.theory == "RST":
        g, r, ph = sol["gamma"], sol["rho"], sol["phi"]
        k = pr.coupling
        n = 2 * (1 + s) * g + k * r
        m = (1 + s) / 6 * r + k * g
        return n - s * p / 2, m - s * p / 10, 5.0 / 6.0 * ph
    n = 2 * (1 + s) * sol["gamma"]
    m = (1 + s) / 6 * sol["rho"]
    return n, m, (1 + s) / 6 * sol["vartheta"]


def true_normal_displacement_1d(sol: BvpSolution):
    """``u + sigma/60 * rho`` for the refined model."""
    return sol["u"] + sol.problem.sigma / 60.0 * sol["rho"]
