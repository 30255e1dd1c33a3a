"""Acceptance criteria 1-9 as runnable checks.

Each runner returns a :class:`CriterionResult` carrying the measured values,
so the pytest gate and ``rstshell bench`` report the same numbers.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import NFIELD, b_matrix, build_contexts, element_energy, element_stiffness
from .errors import ValidationError
from .bench1d import case1_analytic, cst_case1_closed_form, lame_radial
from .geometry import paraboloid_chart
from .post import ThicknessData, l2_error, reconstruct_thickness
from .ringsolid import RingMesh, integral_characteristics, solve_ring
from .shell2d import CylinderProblem, quadrature_grid, solve_cylinder
from .shellcore import (
    LoadSet,
    Material,
    StrainMeasureSet,
    energy_density,
    strain_measures,
    strain_vector,
    stress_resultants,
)
from .splines import KnotVector, TensorBasis, basis_eval, gauss_legendre, make_basis, nurbs_surface_eval, quarter_arc_patch
from .studies import convergence_ladder, line_quadrature, ring_section, rst1d_section, rst2d_section


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    elapsed: float = 0.0
    limit: float | None = None

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{status}] criterion {self.number}: {self.title} ({vals}; {self.elapsed:.1f}s)"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.4g}"


def _timed(number, title, limit, fn):
    t0 = time.perf_counter()
    ok, metrics = fn()
    dt = time.perf_counter() - t0
    if limit is not None:
        metrics["within_time"] = dt < limit
        ok = ok and dt < limit
    return CriterionResult(number, title, bool(ok), metrics, dt, limit)


def criterion1(threads=1, seed=0):
    """Case-1 exactness on a twice-refined Q9 mesh (base 1 x 2 elements on the half arc)."""

    def run():
        prob = CylinderProblem(10.0, 0.3, 1.0, case=1, element="q9", n1=4, n2=8)
        sol = solve_cylinder(prob, threads=threads)
        X, _ = quadrature_grid(sol)
        vals, _ = sol.fields(X)
        u_ref, _ = case1_analytic(10.0, 0.3, 1.0)
        err = float(np.max(np.abs(vals[..., 2] - u_ref)) / u_ref)
        return err < 1e-6, {"u_ref": u_ref, "max_rel_err": err}

    return _timed(1, "Case-1 exactness", 5.0, run)


# refinement ladders: n2 = base * 2**k on the clamped case
LADDERS = {"q4": (32, 5), "q9": (8, 5), "nurbs-cubic": (4, 5)}


def criterion2(threads=1, seed=0):
    """Q4 and Q9 L2 slopes against the 1D refined reference (Case 2, R=10)."""

    def run():
        out, ok = {}, True
        for el, band in (("q4", (1.6, 2.4)), ("q9", (3.5, 4.5))):
            n0, lv = LADDERS[el]
            rep = convergence_ladder(CylinderProblem(10.0, case=2, element=el, n2=n0), lv, threads=threads)
            out[f"{el}_slope"] = rep.slope
            out[f"{el}_final_rate"] = rep.running[-1]
            ok = ok and band[0] <= rep.slope <= band[1]
        return ok, out

    return _timed(2, "Q4/Q9 convergence rates", 120.0, run)


def criterion3(threads=1, seed=0):
    def run():
        n0, lv = LADDERS["nurbs-cubic"]
        rep = convergence_ladder(CylinderProblem(10.0, case=2, element="nurbs-cubic", n2=n0), lv, threads=threads)
        return 3.5 <= rep.slope <= 6.5, {"slope": rep.slope, "final_rate": rep.running[-1]}

    return _timed(3, "cubic NURBS rate band", 300.0, run)


CONVERGED_N2 = 128


def criterion4(threads=1, seed=0):
    """2D vs 1D refined model, Cases 2 and 3, R in {3, 10}, cubic NURBS n2=128."""

    def run():
        out, ok = {}, True
        for case in (2, 3):
            for R in (3.0, 10.0):
                x2, w = line_quadrature(0.0, np.pi * R)
                ref = rst1d_section(R, 0.3, 1.0, case, x2)
                sol = solve_cylinder(CylinderProblem(R, case=case, n2=CONVERGED_N2), threads=threads)
                num = rst2d_section(sol, x2)
                tag = f"c{case}R{R:g}"
                for key, tol in (("u", 1e-3), ("psi2", 1e-3), ("N", 5e-3), ("minus_M", 5e-3), ("Q", 5e-3)):
                    e = l2_error(num[key], ref[key], w)[1]
                    out[f"{tag}_{key}"] = e
                    ok = ok and e < tol
        return ok, out

    return _timed(4, "2D vs 1D refined agreement", 600.0, run)


def criterion5(threads=1, seed=0):
    """Case 2: max-norm relative difference of the true normal displacement vs plane strain."""

    def run():
        out = {}
        for R, tol in ((10.0, 0.04), (3.0, 0.12)):
            x2 = np.linspace(0.0, np.pi * R, 201)
            ring = solve_ring(R, 0.3, 1.0, "clamped", RingMesh(R, 128, 4, "q9"), threads=threads)
            ref = ring_section(ring, x2)["u"]
            sol = solve_cylinder(CylinderProblem(R, case=2, n2=64), threads=threads)
            num = rst2d_section(sol, x2)["u"]
            out[f"R{R:g}"] = float(np.max(np.abs(num - ref)) / np.max(np.abs(ref)))
        ok = out["R10"] < 0.04 and out["R3"] < 0.12 and out["R10"] < out["R3"]
        return ok, out

    return _timed(5, "asymptotic accuracy vs plane strain", None, run)


def sign_changes(q, rel_tol=1e-10):
    """Sign changes of a sampled function, ignoring values below ``rel_tol * max|q|``."""
    q = np.asarray(q, float)
    s = np.sign(q[np.abs(q) > rel_tol * np.max(np.abs(q))])
    return int(np.sum(s[1:] != s[:-1]))


def criterion6(threads=1, seed=0):
    def run():
        R = 10.0
        x2 = np.linspace(0.0, np.pi * R, 2001)
        ref = rst1d_section(R, 0.3, 1.0, 2, x2)["Q"]
        num = rst2d_section(solve_cylinder(CylinderProblem(R, case=2, n2=64), threads=threads), x2)["Q"]
        tv_ref = np.sum(np.abs(np.diff(ref)))
        tv = np.sum(np.abs(np.diff(num)))
        sc, sc_ref = sign_changes(num), sign_changes(ref)
        rel_tv = abs(tv / tv_ref - 1.0)
        return sc == sc_ref == 1 and rel_tv < 0.05, {"sign_changes": sc, "ref_sign_changes": sc_ref, "tv_rel_diff": rel_tv}

    return _timed(6, "locking-free shear force", None, run)


def criterion7(threads=1, seed=0):
    def run():
        R, nu, p = 10.0, 0.3, 1.0
        x2 = np.linspace(0.0, np.pi * R, 2001)
        u_cst, _ = cst_case1_closed_form(R, nu, p, x2)
        u_rst, _ = case1_analytic(R, nu, p)
        ratio = float(np.max(np.abs(u_cst - u_rst)) / u_rst)
        return 0.9 <= ratio <= 1.2, {"max_rel_diff": ratio}

    return _timed(7, "CST displacement failure", None, run)


# ---------------------------------------------------------------- oracle suite


def oracle_context(element="nurbs-cubic", n=2, seed=0):
    """Element data on the doubly curved test chart."""
    chart = paraboloid_chart()
    lo, hi = chart.domain[0]
    basis = TensorBasis(make_basis(element, n, lo, hi), make_basis(element, n, lo, hi))
    return build_contexts(basis, chart), np.random.default_rng(seed)


def _strains_from_dofs(N, dN, geom, d):
    c = d.reshape(-1, NFIELD)
    vals = N @ c
    grads = np.einsum("if,ib->fb", c, dN)
    return strain_measures(vals[[0, 1]], vals[2], vals[[3, 4]], grads[[0, 1]], grads[2], grads[[3, 4]], geom)


def bmatrix_fd_error(n_points=50, seed=0, step=1e-6):
    ctx, rng = oracle_context(seed=seed)
    worst = 0.0
    for _ in range(n_points):
        e, q = rng.integers(ctx.n_elems), rng.integers(ctx.N.shape[1])
        N, dN, geom = ctx.N[e, q], ctx.dN[e, q], ctx.geom[e, q]
        B = b_matrix(N, dN, geom)
        d0 = rng.standard_normal(B.shape[-1])
        fd = np.empty_like(B)
        for j in range(B.shape[-1]):
            dp, dm = d0.copy(), d0.copy()
            dp[j] += step
            dm[j] -= step
            fd[:, j] = (
                strain_vector(_strains_from_dofs(N, dN, geom, dp)) - strain_vector(_strains_from_dofs(N, dN, geom, dm))
            ) / (2 * step)
        worst = max(worst, np.max(np.abs(B - fd)) / np.max(np.abs(B)))
    return worst


def stiffness_fd_error(seed=0, step=1e-4):
    ctx, rng = oracle_context(seed=seed)
    sub = ctx[int(rng.integers(ctx.n_elems))]
    mat = Material(0.3)
    K = element_stiffness(sub, mat)[0]
    nd = K.shape[0]
    d0 = rng.standard_normal(nd)

    def E(d):
        return element_energy(sub, mat, d[None])[0]

    H = np.empty_like(K)
    eye = np.eye(nd) * step
    for i in range(nd):
        for j in range(i, nd):
            H[i, j] = H[j, i] = (
                E(d0 + eye[i] + eye[j]) - E(d0 + eye[i] - eye[j]) - E(d0 - eye[i] + eye[j]) + E(d0 - eye[i] - eye[j])
            ) / (4 * step * step)
    return float(np.max(np.abs(H - K)) / np.max(np.abs(K)))


def resultant_fd_error(n_points=50, seed=0, step=1e-5):
    ctx, rng = oracle_context(seed=seed)
    mat = Material(0.3)
    worst = 0.0
    for _ in range(n_points):
        e, q = rng.integers(ctx.n_elems), rng.integers(ctx.N.shape[1])
        geom = ctx.geom[e, q]
        sym = lambda A: 0.5 * (A + A.T)
        s = StrainMeasureSet(sym(rng.standard_normal((2, 2))), sym(rng.standard_normal((2, 2))), rng.standard_normal(2))
        r = stress_resultants(s, geom, mat)
        for part in ("gamma", "rho", "phi"):
            D = rng.standard_normal(getattr(s, part).shape)
            if D.ndim == 2:
                D = sym(D)
            pert = lambda t: StrainMeasureSet(**{k: getattr(s, k) + (t * D if k == part else 0) for k in ("gamma", "rho", "phi")})
            fd = (energy_density(pert(step), geom, mat) - energy_density(pert(-step), geom, mat)) / (2 * step)
            dual = {"gamma": r.n, "rho": r.m, "phi": r.q}[part]
            exact = float(np.sum(dual * D))
            worst = max(worst, abs(fd - exact) / max(abs(exact), 1e-300))
    return worst


def circle_error(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    patch = quarter_arc_patch(2.0, 1.0)
    pts = [nurbs_surface_eval(patch, x)[0] for x in rng.random((n, 2))]
    return float(max(abs(np.hypot(p[0], p[1]) - 2.0) for p in pts))


def partition_error(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in (1, 2, 3, 4):
        inner = np.sort(rng.random(6))
        kv = KnotVector(np.concatenate([[0.0] * (p + 1), inner, [1.0] * (p + 1)]), p)
        for xi in rng.random(n // 4):
            v, d1, d2, _ = basis_eval(kv, xi)
            worst = max(worst, abs(v.sum() - 1.0), abs(d1.sum()) / max(1.0, np.abs(d1).max()), abs(d2.sum()) / max(1.0, np.abs(d2).max()))
    return worst


def thickness_identity_error(n=50, seed=0):
    ctx, rng = oracle_context(seed=seed)
    mat = Material(0.3)
    t, w = gauss_legendre(4)
    xi = t - 0.5
    worst = 0.0
    for _ in range(n):
        geom = ctx.geom[rng.integers(ctx.n_elems), rng.integers(ctx.N.shape[1])]
        loads = LoadSet(*rng.standard_normal(2), tuple(rng.standard_normal(2)), tuple(rng.standard_normal(2)))
        data = ThicknessData(
            rng.standard_normal(2), rng.standard_normal(), rng.standard_normal(2), rng.standard_normal(2),
            rng.standard_normal(), rng.standard_normal(2), rng.standard_normal(), rng.standard_normal(2),
        )
        wa, wn = reconstruct_thickness(data, geom, loads, mat, xi)
        worst = max(worst, np.max(np.abs(w @ wa - data.u_a)), abs(w @ wn - data.u))
    return float(worst)


def criterion8(threads=1, seed=0):
    def run():
        m = {
            "bmatrix_fd": bmatrix_fd_error(seed=seed),
            "stiffness_fd_hessian": stiffness_fd_error(seed=seed),
            "resultants_fd": resultant_fd_error(seed=seed),
            "circle": circle_error(seed=seed),
            "partition_of_unity": partition_error(seed=seed),
            "thickness_average": thickness_identity_error(seed=seed),
        }
        tol = {"bmatrix_fd": 1e-6, "stiffness_fd_hessian": 1e-5, "resultants_fd": 1e-7, "circle": 1e-12,
               "partition_of_unity": 1e-12, "thickness_average": 1e-12}
        return all(m[k] < tol[k] for k in m), m

    return _timed(8, "oracle and gradient suite", 60.0, run)


def criterion9(threads=1, seed=0):
    def run():
        R, nu, p = 10.0, 0.3, 1.0
        ring = solve_ring(R, nu, p, "free-sliding", RingMesh(R, 64, 4, "q9"), threads=threads)
        theta = np.linspace(0.0, np.pi, 13)
        wr, _ = ring.displacement(theta, np.full_like(theta, R))
        rad = float(np.max(np.abs(wr / lame_radial(R, nu, p, 0.0) - 1.0)))
        N, _, _ = integral_characteristics(ring, theta)
        nerr = float(np.max(np.abs(N / (p * (R - 0.5)) - 1.0)))
        return rad < 1e-3 and nerr < 5e-3, {"radial_rel_err": rad, "N_rel_err": nerr}

    return _timed(9, "Lame cross-check", None, run)


CRITERIA = {1: criterion1, 2: criterion2, 3: criterion3, 4: criterion4, 5: criterion5,
            6: criterion6, 7: criterion7, 8: criterion8, 9: criterion9}


def run_all(numbers=None, threads=1, seed=0, report=print):
    results = []
    for k in numbers or sorted(CRITERIA):
        if k not in CRITERIA:
            raise ValidationError(f"no acceptance criterion {k}")
        res = CRITERIA[k](threads=threads, seed=seed)
        if report:
            report(res.line())
        results.append(res)
    return results
