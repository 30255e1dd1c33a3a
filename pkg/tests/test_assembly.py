import numpy as np
import pytest

from rstshell.acceptance import bmatrix_fd_error, oracle_context, stiffness_fd_error
from rstshell.assembly import (
    NFIELD,
    UN,
    Constraints,
    apply_constraints,
    assemble,
    b_matrix,
    build_b_matrices,
    build_contexts,
    element_energy,
    element_internal_force,
    element_load,
    element_stiffness,
    scatter,
)
from rstshell.geometry import CylinderChart, FlatChart
from rstshell.shellcore import LoadSet, Material, external_work_density
from rstshell.splines import TensorBasis, make_basis

MAT = Material(0.3)


def _cylinder_ctx(R=10.0, element="nurbs-cubic", n1=2, n2=4):
    chart = CylinderChart(R, 10.0)
    basis = TensorBasis(make_basis(element, n1, 0, 10.0), make_basis(element, n2, 0, chart.W))
    return build_contexts(basis, chart), basis


def test_bmatrix_matches_fd():
    assert bmatrix_fd_error(n_points=50, seed=3) < 1e-6


def test_flat_geometry_blocks():
    chart = FlatChart(1.0, 1.0)
    basis = TensorBasis(make_basis("q9", 1, 0, 1), make_basis("q9", 1, 0, 1))
    ctx = build_contexts(basis, chart)
    bm = build_b_matrices(ctx, 0)
    assert np.all(bm.Bm_u == 0)
    # membrane block: symmetric gradient of the tangential components only
    dN = ctx.dN[0, 0]
    Bn = bm.Bn[0]
    assert np.allclose(Bn[0, 0::NFIELD], dN[:, 0])
    assert np.allclose(Bn[1, 1::NFIELD], dN[:, 1])
    assert np.allclose(Bn[2, 0::NFIELD], dN[:, 1])
    assert np.all(Bn[:, UN::NFIELD] == 0)


def test_stiffness_symmetry_and_fd_hessian():
    ctx, _ = oracle_context()
    K = element_stiffness(ctx, MAT)
    assert np.max(np.abs(K - np.swapaxes(K, 1, 2))) / np.max(np.abs(K)) < 1e-12
    assert stiffness_fd_error(seed=5) < 1e-5


def test_internal_force_linear_consistency(rng):
    ctx, _ = _cylinder_ctx()
    K = element_stiffness(ctx, MAT)
    d = rng.standard_normal((ctx.n_elems, K.shape[1]))
    f = element_internal_force(ctx, MAT, d)
    assert np.allclose(f, np.einsum("eij,ej->ei", K, d), rtol=1e-10, atol=1e-10 * np.abs(f).max())
    assert np.allclose(element_internal_force(ctx, MAT, np.zeros_like(d)), 0)


def test_internal_force_is_energy_gradient(rng):
    ctx, _ = _cylinder_ctx()
    sub = ctx[0]
    d = rng.standard_normal((1, NFIELD * sub.N.shape[-1]))
    f = element_internal_force(sub, MAT, d)[0]
    h = 1e-6
    for j in rng.choice(d.shape[1], 12, replace=False):
        e = np.zeros_like(d)
        e[0, j] = h
        fd = (element_energy(sub, MAT, d + e)[0] - element_energy(sub, MAT, d - e)[0]) / (2 * h)
        assert fd == pytest.approx(f[j], rel=1e-6, abs=1e-8 * np.abs(f).max())


def test_flat_stiffness_nullspace():
    chart = FlatChart(1.0, 1.0)
    basis = TensorBasis(make_basis("q4", 1, 0, 1), make_basis("q4", 1, 0, 1))
    K = element_stiffness(build_contexts(basis, chart), MAT)[0]
    w = np.linalg.eigvalsh(K)
    assert w.min() > -1e-12 * w.max()
    # the six rigid motions of a plate: three translations and three rotations
    assert np.sum(w < 1e-10 * w.max()) == 6


def test_element_load_matches_external_work(rng):
    ctx, _ = _cylinder_ctx()
    loads = LoadSet(0.7, -0.4, (0.1, 0.2), (-0.3, 0.05), 0.0, 0.0)
    Fe = element_load(ctx, loads, MAT)
    e = 1
    d = rng.standard_normal(Fe.shape[1])
    c = d.reshape(-1, NFIELD)
    N, dN = ctx.N[e], ctx.dN[e]
    vals = N @ c
    grads = np.einsum("if,qib->qfb", c, dN)
    theta, _ = external_work_density(vals[:, :2], vals[:, 2], vals[:, 3:], grads[:, :2], grads[:, 2], grads[:, 3:], ctx.geom[e], loads, MAT)
    assert Fe[e] @ d == pytest.approx(np.sum(theta * ctx.weight[e]), rel=1e-10)


def test_zero_pressure_gives_zero_load():
    ctx, _ = _cylinder_ctx()
    assert np.all(element_load(ctx, LoadSet.inner_pressure(0.0), MAT) == 0)


def test_total_normal_load_case1():
    R, p = 10.0, 1.0
    ctx, basis = _cylinder_ctx(R, n1=1, n2=8)
    F = element_load(ctx, LoadSet.inner_pressure(p), MAT)
    total_u = F.reshape(ctx.n_elems, -1, NFIELD)[..., UN].sum()
    s, W, L = MAT.sigma, np.pi * R, 10.0
    assert total_u / L == pytest.approx(W * p * (1 - 1 / (2 * R)) + s / 2 * p * W / R, rel=1e-12)


def test_assembly_is_sum_of_scattered_elements():
    ctx, basis = _cylinder_ctx(n1=1, n2=2)
    sys = assemble(ctx, basis.n_funcs, MAT, LoadSet.inner_pressure(1.0))
    Ke = element_stiffness(ctx, MAT)
    dense = np.zeros((sys.n_dof, sys.n_dof))
    for e, dofs in enumerate(ctx.dofs()):
        dense[np.ix_(dofs, dofs)] += Ke[e]
    assert np.allclose(sys.K.toarray(), dense, rtol=1e-13, atol=1e-13 * np.abs(dense).max())
    assert abs(sys.K - sys.K.T).max() <= 1e-10 * abs(sys.K).max()


def test_parallel_assembly_is_bitwise_identical():
    ctx, basis = _cylinder_ctx(n1=2, n2=16)
    a = assemble(ctx, basis.n_funcs, MAT, LoadSet.inner_pressure(1.0), threads=1, chunk=5)
    b = assemble(ctx, basis.n_funcs, MAT, LoadSet.inner_pressure(1.0), threads=4, chunk=5)
    assert (a.K != b.K).nnz == 0
    assert np.array_equal(a.F, b.F)


def test_all_fixed_gives_empty_system():
    ctx, basis = _cylinder_ctx(n1=1, n2=1)
    cons = Constraints()
    cons.fix(np.arange(NFIELD * basis.n_funcs))
    sys = assemble(ctx, basis.n_funcs, MAT, LoadSet.inner_pressure(1.0), cons)
    A, rhs = sys.reduced()
    assert A.shape == (0, 0) and rhs.size == 0


def test_multiplier_rows_form_saddle_system():
    K, F = scatter(3, np.array([[0, 1, 2]]), np.eye(3)[None] * 2.0, np.ones((1, 3)))
    cons = Constraints()
    cons.add_row([0, 1], [1.0, 1.0], 0.0)
    A, rhs = apply_constraints(K, F, cons).reduced()
    assert A.shape == (4, 4)
    assert np.allclose(A.toarray()[3, :3], [1, 1, 0])
