"""Study drivers shared by the CLI and the acceptance runners.

Every theory is reduced to a *section table*: a dict of arrays sampled along
the arc coordinate ``x2`` with keys ``u`` (true normal displacement), ``u2``,
``psi2``, ``N``, ``minus_M`` and ``Q``.
"""
from __future__ import annotations

import numpy as np

from .bench1d import ArcProblem, arc_resultants, case1_analytic, cst_case1_closed_form, solve_arc
from .errors import ValidationError
from .post import error_report, l2_error
from .ringsolid import RingMesh, integral_characteristics, solve_ring, thickness_average
from .shell2d import CASES, CylinderProblem, solve_cylinder
from .splines import gauss_legendre

SECTION_KEYS = ("u", "u2", "psi2", "N", "minus_M", "Q")
THEORIES = ("rst2d", "rst1d", "cst1d", "ring2d")


def line_quadrature(a, b, n_el=256, nq=6):
    """Composite Gauss rule on ``[a, b]``: points and weights."""
    t, w = gauss_legendre(nq)
    edges = np.linspace(a, b, n_el + 1)
    h = np.diff(edges)
    x = (edges[:-1, None] + t[None, :] * h[:, None]).ravel()
    return x, (w[None, :] * h[:, None]).ravel()


def rst1d_section(R, nu, p, case, x2, n_points=2048):
    """Refined arc model sampled at ``x2``."""
    pr = ArcProblem(R, nu, p, CASES[case], "RST")
    if case == 1:
        u, _ = case1_analytic(R, nu, p)
        s = pr.sigma
        n = np.full_like(x2, 2 * (1 + s) * u / R)
        m = np.full_like(x2, pr.coupling * u / R)
        z = np.zeros_like(x2)
        return {"u": np.full_like(x2, u), "u2": z, "psi2": z, "N": n - s * p / 2, "minus_M": m - s * p / 10, "Q": z}
    sol = solve_arc(pr, n_points)
    y = sol.sol(np.asarray(x2, float))
    table = dict(zip(sol.fields, y))
    view = type(sol)(pr, np.asarray(x2, float), y, sol.fields)
    N, mM, Q = arc_resultants(view)
    return {
        "u": table["u"] + pr.sigma / 60.0 * table["rho"],
        "u2": table["u2"],
        "psi2": table["psi2"],
        "N": N,
        "minus_M": mM,
        "Q": Q,
    }


def cst1d_section(R, nu, p, case, x2, n_points=2048):
    """Classical arc model; the rotation is ``-u'' + u2'/R``, which equals ``-rho``."""
    x2 = np.asarray(x2, float)
    nan = np.full_like(x2, np.nan)
    if case == 1:
        u, u2 = cst_case1_closed_form(R, nu, p, x2)
        return {"u": u, "u2": u2, "psi2": nan, "N": nan, "minus_M": nan, "Q": nan}
    pr = ArcProblem(R, nu, p, CASES[case], "CST")
    sol = solve_arc(pr, n_points)
    y = sol.sol(x2)
    view = type(sol)(pr, x2, y, sol.fields)
    N, mM, Q = arc_resultants(view)
    return {"u": view["u"], "u2": view["u2"], "psi2": -view["rho"], "N": N, "minus_M": mM, "Q": Q}


def rst2d_section(sol, x2):
    d = sol.sample_section(x2)
    return {"u": d["u_true"], "u2": d["u2"], "psi2": d["psi2"], "N": d["N"], "minus_M": d["minus_M"], "Q": d["Q"]}


def ring_section(sol, x2):
    """Plane-strain reference: thickness averages and integral characteristics."""
    theta = np.clip(np.asarray(x2, float) / sol.mesh.R, 0.0, np.pi)
    ut, un, psi = thickness_average(sol, theta)
    N, M, Q = integral_characteristics(sol, theta)
    return {"u": un, "u2": ut, "psi2": psi, "N": N, "minus_M": -M, "Q": Q}


def theory_section(theory, cfg, x2, threads=1):
    """Section table of one theory for a config dict (see :mod:`rstshell.cli`)."""
    g, d = cfg["geometry"], cfg["discretization"]
    R, nu, p, case = g["R"], cfg["material"]["nu"], cfg["load"]["p"], g["case"]
    if theory == "rst2d":
        prob = CylinderProblem(R, nu, p, case, g["L"], d["element"], d["n1"], d["n2"], g["side"])
        sol = solve_cylinder(prob, threads=threads)
        return rst2d_section(sol, x2), sol
    if theory == "rst1d":
        return rst1d_section(R, nu, p, case, x2, d["bvp_points"]), None
    if theory == "cst1d":
        return cst1d_section(R, nu, p, case, x2, d["bvp_points"]), None
    if theory == "ring2d":
        mesh = RingMesh(R, d["ring_n_theta"], d["ring_n_r"], d["ring_element"])
        sol = solve_ring(R, nu, p, CASES[case], mesh, threads=threads)
        return ring_section(sol, x2), sol
    raise ValidationError(f"unknown theory {theory!r}")


def section_error(num, ref, weights, key="u"):
    """Root relative L2 error of one section field."""
    return l2_error(num[key], ref[key], weights)[1]


def convergence_ladder(base: CylinderProblem, levels, reference=None, threads=1, key="u"):
    """Nested uniform refinement ``n2 = base.n2 * 2**k`` against a 1D reference.

    The error is the root relative L2 norm along the arc (the square root of
    the relative squared form). Returns ``(ErrorReport, rows)``.
    """
    levels = int(levels)
    if levels < 3:
        raise ValidationError("a convergence study needs at least 3 refinement levels")
    x2, w = line_quadrature(0.0, base.W)
    ref = reference or rst1d_section(base.R, base.nu, base.p, base.case, x2)
    h, dofs, errs = [], [], []
    for k in range(levels):
        prob = CylinderProblem(
            base.R, base.nu, base.p, base.case, base.L, base.element, base.n1, base.n2 * 2**k, base.side
        )
        sol = solve_cylinder(prob, threads=threads)
        errs.append(section_error(rst2d_section(sol, x2), ref, w, key))
        h.append(prob.x2_max / prob.n2)
        dofs.append(sol.n_dof)
    return error_report(h, dofs, errs)
