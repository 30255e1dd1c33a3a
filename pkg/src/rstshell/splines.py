"""B-spline / NURBS bases, Bezier extraction and 1D/2D discretization bases.

Two families of 1D bases share one interface (:class:`Basis1D`):

* :class:`BSplineBasis1D` -- open knot vector, evaluated per element through
  its Bezier extraction operator;
* :class:`LagrangeBasis1D` -- equispaced nodal basis of degree 1 (Q4) or 2 (Q9)
  on a uniform element partition.

:class:`TensorBasis` combines two of them into a quadrilateral discretization.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", k)
        p = self.degree
        if p < 1:
            raise ValidationError("degree must be >= 1")
        if k.ndim != 1 or len(k) < 2 * (p + 1):
            raise ValidationError("knot vector too short for its degree")
        if np.any(np.diff(k) < 0):
            raise ValidationError("knots must be nondecreasing")
        if not (np.all(k[: p + 1] == k[0]) and np.all(k[-p - 1 :] == k[-1])):
            raise ValidationError("knot vector must be open (end knots repeated p+1 times)")
        if k[-1] <= k[0]:
            raise ValidationError("knot vector spans an empty interval")
        _, counts = np.unique(k[p + 1 : -p - 1], return_counts=True)
        if counts.size and counts.max() > p:
            raise ValidationError("interior knot multiplicity exceeds the degree")

    @classmethod
    def uniform(cls, degree, n_elems, a=0.0, b=1.0, multiplicity=1):
        inner = np.repeat(np.linspace(a, b, n_elems + 1)[1:-1], multiplicity)
        return cls(np.concatenate([[a] * (degree + 1), inner, [b] * (degree + 1)]), degree)

    @property
    def n_funcs(self):
        return len(self.knots) - self.degree - 1

    @property
    def breaks(self):
        return np.unique(self.knots)

    @property
    def n_elems(self):
        return len(self.breaks) - 1

    def continuity(self):
        """Minimum inter-element continuity order (``p - max interior multiplicity``)."""
        p = self.degree
        _, counts = np.unique(self.knots[p + 1 : -p - 1], return_counts=True)
        return p - (counts.max() if counts.size else 0)

    def require_c1(self):
        if self.continuity() < 1:
            raise ValidationError("C1 continuity requires interior multiplicity <= p-1")

    def find_span(self, xi):
        k, p = self.knots, self.degree
        if xi < k[0] or xi > k[-1]:
            raise DomainError(f"parameter {xi} outside [{k[0]}, {k[-1]}]")
        n = self.n_funcs
        if xi >= k[n]:
            return n - 1
        return int(np.searchsorted(k, xi, side="right") - 1)


def basis_eval(kv: KnotVector, xi, nders=2):
    """Nonzero basis functions and derivatives at ``xi`` (Cox-de Boor).

    Returns ``(values, d1, d2, first)`` where arrays hold the ``p+1`` nonzero
    functions ``first .. first+p``. Derivatives beyond ``p`` are zero.
    """
    p = kv.degree
    U = kv.knots
    span = kv.find_span(float(xi))
    ders = _ders_basis(span, float(xi), p, U, nders)
    return ders[0], ders[1], ders[2], span - p


def _ders_basis(i, u, p, U, n):
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = u - U[i + 1 - j]
        right[j] = U[i + j] - u
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved
    ders = np.zeros((max(n, 2) + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, min(n, p) + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    r = p
    for k in range(1, min(n, p) + 1):
        ders[k] *= r
        r *= p - k
    return ders


def bernstein(p, t, nders=2):
    """Bernstein polynomials of degree ``p`` on [0, 1] and their derivatives.

    ``t`` may be an array; returns an array of shape (nders+1, len(t), p+1).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((nders + 1, t.size, p + 1))
    for d in range(nders + 1):
        if d > p:
            break
        # d-th derivative of B_{i,p} = p!/(p-d)! * sum_k (-1)^(d-k) C(d,k) B_{i-k,p-d}
        fac = 1.0
        for m in range(d):
            fac *= p - m
        q = p - d
        Bq = np.stack([comb(q, i) * t**i * (1 - t) ** (q - i) for i in range(q + 1)], axis=-1)
        for i in range(p + 1):
            acc = np.zeros(t.size)
            for k in range(d + 1):
                j = i - k
                if 0 <= j <= q:
                    acc += (-1) ** (d - k) * comb(d, k) * Bq[:, j]
            out[d, :, i] = fac * acc
    return out


def bezier_extract(kv: KnotVector):
    """Per-element extraction operators ``C_e`` with ``N_e(xi) = C_e B(t)``."""
    U, p = kv.knots, kv.degree
    m = len(U)
    a, b = p + 1, p + 2
    nb = 0
    C = [np.eye(p + 1)]
    ops = []
    while b < m:
        C.append(np.eye(p + 1))
        i = b
        while b < m and U[b] == U[b - 1]:
            b += 1
        mult = b - i + 1
        if mult < p:
            numer = U[b - 1] - U[a - 1]
            alphas = np.zeros(p + 1)
            for j in range(p, mult, -1):
                alphas[j - mult - 1] = numer / (U[a + j - 1] - U[a - 1])
            r = p - mult
            for j in range(1, r + 1):
                save = r - j + 1
                s = mult + j
                for k in range(p + 1, s, -1):
                    alpha = alphas[k - s - 1]
                    C[nb][:, k - 1] = alpha * C[nb][:, k - 1] + (1 - alpha) * C[nb][:, k - 2]
                if b < m:
                    C[nb + 1][save - 1 : j + save, save - 1] = C[nb][p - j : p + 1, p]
        ops.append(C[nb])
        nb += 1
        if b < m:
            a = b
            b += 1
    return ops


def insert_knots(kv: KnotVector, ctrl, insertions):
    """Boehm knot insertion on a curve with homogeneous control points ``ctrl`` (n, d)."""
    ctrl = np.asarray(ctrl, dtype=float)
    for x in np.atleast_1d(np.asarray(insertions, dtype=float)):
        U, p = kv.knots, kv.degree
        if not (U[0] < x < U[-1]):
            raise ValueError(f"insertion {x} outside the open span ({U[0]}, {U[-1]})")
        k = kv.find_span(x)
        new = np.zeros((ctrl.shape[0] + 1, ctrl.shape[1]))
        new[: k - p + 1] = ctrl[: k - p + 1]
        new[k + 1 :] = ctrl[k:]
        for i in range(k - p + 1, k + 1):
            alpha = (x - U[i]) / (U[i + p] - U[i])
            new[i] = alpha * ctrl[i] + (1 - alpha) * ctrl[i - 1]
        kv = KnotVector(np.insert(U, k + 1, x), p)
        ctrl = new
    return kv, ctrl


def degree_elevate(kv: KnotVector, ctrl=None):
    """Raise the degree by one, keeping the continuity at every break.

    With ``ctrl`` (homogeneous, (n, d)) the new control points reproduce the
    curve exactly; they are found by interpolation at the Greville abscissae
    of the elevated basis, which contains the original space.
    """
    p = kv.degree
    brk, counts = np.unique(kv.knots, return_counts=True)
    new = KnotVector(np.repeat(brk, counts + 1), p + 1)
    if ctrl is None:
        return new
    ctrl = np.asarray(ctrl, dtype=float)
    gr = greville(new)
    A = np.zeros((len(gr), new.n_funcs))
    rhs = np.zeros((len(gr), ctrl.shape[1]))
    for r, x in enumerate(gr):
        v, _, _, f = basis_eval(new, x, 0)
        A[r, f : f + p + 2] = v
        vo, _, _, fo = basis_eval(kv, x, 0)
        rhs[r] = vo @ ctrl[fo : fo + p + 1]
    return new, np.linalg.solve(A, rhs)


def greville(kv: KnotVector):
    p = kv.degree
    U = kv.knots
    return np.array([U[i + 1 : i + p + 1].mean() for i in range(kv.n_funcs)])


@dataclass(frozen=True)
class SplinePatch:
    """Tensor-product NURBS surface: control grid (n1, n2, 3) and weights (n1, n2)."""

    kv1: KnotVector
    kv2: KnotVector
    ctrl: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        ctrl = np.asarray(self.ctrl, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "ctrl", ctrl)
        object.__setattr__(self, "weights", w)
        if ctrl.shape != (self.kv1.n_funcs, self.kv2.n_funcs, 3):
            raise ValidationError("control grid does not match basis counts")
        if w.shape != ctrl.shape[:2]:
            raise ValidationError("weights grid does not match control grid")
        if np.any(w <= 0):
            raise ValidationError("weights must be strictly positive")

    def homogeneous(self):
        return np.concatenate([self.ctrl * self.weights[..., None], self.weights[..., None]], axis=-1)

    @classmethod
    def from_homogeneous(cls, kv1, kv2, Pw):
        w = Pw[..., 3]
        return cls(kv1, kv2, Pw[..., :3] / w[..., None], w)

    def refine(self, direction, insertions):
        """Knot insertion along parameter ``direction`` (0 or 1)."""
        Pw = self.homogeneous()
        if len(np.atleast_1d(insertions)) == 0:
            return self
        if direction == 1:
            Pw = np.swapaxes(Pw, 0, 1)
        kv = self.kv1 if direction == 0 else self.kv2
        n2 = Pw.shape[1]
        flat = Pw.reshape(Pw.shape[0], -1)
        kv_new, flat = insert_knots(kv, flat, insertions)
        Pw = flat.reshape(-1, n2, 4)
        if direction == 1:
            return SplinePatch.from_homogeneous(self.kv1, kv_new, np.swapaxes(Pw, 0, 1))
        return SplinePatch.from_homogeneous(kv_new, self.kv2, Pw)

    def elevate(self, direction):
        Pw = self.homogeneous()
        if direction == 1:
            Pw = np.swapaxes(Pw, 0, 1)
        kv = self.kv1 if direction == 0 else self.kv2
        n2 = Pw.shape[1]
        kv_new, flat = degree_elevate(kv, Pw.reshape(Pw.shape[0], -1))
        Pw = flat.reshape(-1, n2, 4)
        if direction == 1:
            return SplinePatch.from_homogeneous(self.kv1, kv_new, np.swapaxes(Pw, 0, 1))
        return SplinePatch.from_homogeneous(kv_new, self.kv2, Pw)


def nurbs_surface_eval(patch: SplinePatch, xi):
    """Point, first derivatives (3, 2) and second derivatives (3, 2, 2) at ``xi``."""
    v1, d11, d12, f1 = basis_eval(patch.kv1, xi[0])
    v2, d21, d22, f2 = basis_eval(patch.kv2, xi[1])
    p1, p2 = patch.kv1.degree, patch.kv2.degree
    Pw = patch.homogeneous()[f1 : f1 + p1 + 1, f2 : f2 + p2 + 1]
    B1 = [v1, d11, d12]
    B2 = [v2, d21, d22]
    # S[k, l] = d^{k+l}/du^k dv^l of the homogeneous surface
    S = np.zeros((3, 3, 4))
    for k in range(3):
        for l in range(3 - k):
            S[k, l] = np.einsum("i,j,ijc->c", B1[k], B2[l], Pw)
    A, w = S[..., :3], S[..., 3]
    if w[0, 0] == 0:
        raise ArithmeticError("zero NURBS denominator")
    pt = A[0, 0] / w[0, 0]
    d1 = np.zeros((3, 2))
    d1[:, 0] = (A[1, 0] - w[1, 0] * pt) / w[0, 0]
    d1[:, 1] = (A[0, 1] - w[0, 1] * pt) / w[0, 0]
    d2 = np.zeros((3, 2, 2))
    d2[:, 0, 0] = (A[2, 0] - 2 * w[1, 0] * d1[:, 0] - w[2, 0] * pt) / w[0, 0]
    d2[:, 1, 1] = (A[0, 2] - 2 * w[0, 1] * d1[:, 1] - w[0, 2] * pt) / w[0, 0]
    d2[:, 0, 1] = (A[1, 1] - w[1, 0] * d1[:, 1] - w[0, 1] * d1[:, 0] - w[1, 1] * pt) / w[0, 0]
    d2[:, 1, 0] = d2[:, 0, 1]
    return pt, d1, d2


def quarter_arc_patch(R=1.0, length=1.0):
    """Quadratic exact quarter-cylinder patch: arc of radius ``R`` times a linear extrusion."""
    s = np.sqrt(0.5)
    kv1 = KnotVector([0, 0, 0, 1, 1, 1], 2)
    kv2 = KnotVector([0, 0, 1, 1], 1)
    arc = np.array([[R, 0, 0], [R, R, 0], [0, R, 0]], dtype=float)
    ctrl = np.zeros((3, 2, 3))
    for j, z in enumerate([0.0, length]):
        ctrl[:, j] = arc + [0, 0, z]
    w = np.array([[1, 1], [s, s], [1, 1]], dtype=float)
    return SplinePatch(kv1, kv2, ctrl, w)


class Basis1D:
    """Common interface of the 1D element bases."""

    degree: int
    n_funcs: int
    breaks: np.ndarray

    @property
    def n_elems(self):
        return len(self.breaks) - 1

    def element_functions(self, e):
        raise NotImplementedError

    def eval_reference(self, e, t):
        """Values and first/second derivatives w.r.t. the element's reference t in [0,1]."""
        raise NotImplementedError

    def eval_element(self, e, t):
        """Values and derivatives w.r.t. the global parameter at reference points ``t``."""
        N, dN, d2N = self.eval_reference(e, t)
        hl = self.breaks[e + 1] - self.breaks[e]
        return N, dN / hl, d2N / hl**2

    def locate(self, x):
        e = int(np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.n_elems - 1))
        lo, hi = self.breaks[e], self.breaks[e + 1]
        return e, (x - lo) / (hi - lo)

    def eval_at(self, x):
        """Global function indices, values, d1 and d2 at global parameter ``x``."""
        e, t = self.locate(x)
        N, dN, d2N = self.eval_element(e, np.array([t]))
        return self.element_functions(e), N[0], dN[0], d2N[0]


class BSplineBasis1D(Basis1D):
    def __init__(self, kv: KnotVector):
        self.kv = kv
        self.degree = kv.degree
        self.n_funcs = kv.n_funcs
        self.breaks = kv.breaks
        self.extraction = bezier_extract(kv)
        # first function index of each element
        p = kv.degree
        firsts = []
        for e in range(self.n_elems):
            mid = 0.5 * (self.breaks[e] + self.breaks[e + 1])
            firsts.append(kv.find_span(mid) - p)
        self._first = np.array(firsts)

    @classmethod
    def uniform(cls, degree, n_elems, a, b, continuity=None):
        mult = 1 if continuity is None else degree - continuity
        return cls(KnotVector.uniform(degree, n_elems, a, b, mult))

    def element_functions(self, e):
        return self._first[e] + np.arange(self.degree + 1)

    def eval_reference(self, e, t):
        B = bernstein(self.degree, t)
        C = self.extraction[e]
        return B[0] @ C.T, B[1] @ C.T, B[2] @ C.T


class LagrangeBasis1D(Basis1D):
    """Equispaced nodal basis of degree 1 or 2 on ``n_elems`` uniform elements."""

    def __init__(self, degree, n_elems, a, b):
        if degree not in (1, 2, 3):
            raise ValidationError("Lagrange degree must be 1, 2 or 3")
        self.degree = degree
        self.n_funcs = degree * n_elems + 1
        self.breaks = np.linspace(a, b, n_elems + 1)
        self._nodes = np.linspace(0.0, 1.0, degree + 1)

    def element_functions(self, e):
        return e * self.degree + np.arange(self.degree + 1)

    def eval_reference(self, e, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = self._nodes
        p = self.degree
        N = np.ones((t.size, p + 1))
        dN = np.zeros((t.size, p + 1))
        d2N = np.zeros((t.size, p + 1))
        for i in range(p + 1):
            others = [j for j in range(p + 1) if j != i]
            denom = np.prod([z[i] - z[j] for j in others])
            N[:, i] = np.prod([t - z[j] for j in others], axis=0) / denom
            for k in others:
                rest = [j for j in others if j != k]
                dN[:, i] += np.prod([t - z[j] for j in rest], axis=0) / denom if rest else 1.0 / denom
                for m in rest:
                    rest2 = [j for j in rest if j != m]
                    d2N[:, i] += (
                        np.prod([t - z[j] for j in rest2], axis=0) / denom if rest2 else 1.0 / denom
                    )
        return N, dN, d2N


def make_basis(element, n_elems, a, b):
    """Factory: ``element`` in {'q4', 'q9', 'nurbs-quadratic', 'nurbs-cubic', 'nurbs-quartic'}."""
    element = element.lower()
    if element == "q4":
        return LagrangeBasis1D(1, n_elems, a, b)
    if element == "q9":
        return LagrangeBasis1D(2, n_elems, a, b)
    degrees = {"nurbs-quadratic": 2, "nurbs-cubic": 3, "nurbs-quartic": 4}
    if element in degrees:
        return BSplineBasis1D.uniform(degrees[element], n_elems, a, b)
    raise ValidationError(f"unknown element type {element!r}")


def gauss_legendre(n):
    """Gauss points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


class TensorBasis:
    """Tensor product of two 1D bases. Global function index = i1 * n2 + i2."""

    def __init__(self, b1: Basis1D, b2: Basis1D):
        self.b1, self.b2 = b1, b2
        self.n_funcs = b1.n_funcs * b2.n_funcs
        self.n_elems = b1.n_elems * b2.n_elems

    @property
    def shape(self):
        return self.b1.n_funcs, self.b2.n_funcs

    def index(self, i1, i2):
        return np.asarray(i1) * self.b2.n_funcs + np.asarray(i2)

    def boundary_functions(self, side):
        """Functions whose trace is nonzero on a side: 'x1-', 'x1+', 'x2-', 'x2+'."""
        n1, n2 = self.shape
        if side == "x1-":
            return self.index(0, np.arange(n2))
        if side == "x1+":
            return self.index(n1 - 1, np.arange(n2))
        if side == "x2-":
            return self.index(np.arange(n1), 0)
        if side == "x2+":
            return self.index(np.arange(n1), n2 - 1)
        raise ValueError(side)

    def element_data(self, nq1=None, nq2=None):
        """Connectivity, quadrature points and basis derivatives for all elements.

        Returns a dict with ``conn`` (ne, nloc), ``x`` (ne, nq, 2), ``w`` (ne, nq)
        parameter-space weights, ``N`` (ne, nq, nloc), ``dN`` (ne, nq, nloc, 2) and
        ``d2N`` (ne, nq, nloc, 2, 2).
        """
        b1, b2 = self.b1, self.b2
        nq1 = nq1 or b1.degree + 1
        nq2 = nq2 or b2.degree + 1
        t1, w1 = gauss_legendre(nq1)
        t2, w2 = gauss_legendre(nq2)
        E1 = [b1.eval_element(e, t1) for e in range(b1.n_elems)]
        E2 = [b2.eval_element(e, t2) for e in range(b2.n_elems)]
        conn, X, W, N, dN, d2N = [], [], [], [], [], []
        for e1 in range(b1.n_elems):
            lo1, hi1 = b1.breaks[e1], b1.breaks[e1 + 1]
            f1 = b1.element_functions(e1)
            A0, A1, A2 = E1[e1]
            for e2 in range(b2.n_elems):
                lo2, hi2 = b2.breaks[e2], b2.breaks[e2 + 1]
                f2 = b2.element_functions(e2)
                B0, B1, B2 = E2[e2]
                conn.append(self.index(f1[:, None], f2[None, :]).ravel())
                xx = np.stack(np.meshgrid(lo1 + t1 * (hi1 - lo1), lo2 + t2 * (hi2 - lo2), indexing="ij"), -1)
                X.append(xx.reshape(-1, 2))
                W.append(np.outer(w1 * (hi1 - lo1), w2 * (hi2 - lo2)).ravel())
                # (q1, q2, i1, i2) -> (q, loc)
                def tp(P, Q):
                    return np.einsum("ai,bj->abij", P, Q).reshape(len(t1) * len(t2), -1)

                N.append(tp(A0, B0))
                dN.append(np.stack([tp(A1, B0), tp(A0, B1)], axis=-1))
                d2 = np.empty(dN[-1].shape + (2,))
                d2[..., 0, 0] = tp(A2, B0)
                d2[..., 1, 1] = tp(A0, B2)
                d2[..., 0, 1] = d2[..., 1, 0] = tp(A1, B1)
                d2N.append(d2)
        return {
            "conn": np.array(conn),
            "x": np.array(X),
            "w": np.array(W),
            "N": np.array(N),
            "dN": np.array(dN),
            "d2N": np.array(d2N),
        }

    def eval_at(self, x1, x2):
        """Global indices, values and first derivatives of all functions nonzero at a point."""
        f1, v1, d1, _ = self.b1.eval_at(x1)
        f2, v2, d2, _ = self.b2.eval_at(x2)
        idx = self.index(f1[:, None], f2[None, :]).ravel()
        N = np.outer(v1, v2).ravel()
        dN = np.stack([np.outer(d1, v2).ravel(), np.outer(v1, d2).ravel()], axis=-1)
        return idx, N, dN
