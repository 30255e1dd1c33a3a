"""Direct solution of assembled systems."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

RESIDUAL_TOL = 1e-9
_DENSE_DIAGNOSIS_LIMIT = 4000


@dataclass(frozen=True)
class SolveReport:
    status: str
    residual: float
    n_dof: int
    wall_time: float


def _zero_pivot(A):
    """Index of the first (near) zero pivot of a small matrix, found by dense LU."""
    if A.shape[0] > _DENSE_DIAGNOSIS_LIMIT:
        return None
    lu, piv = sla.lu_factor(A.toarray(), check_finite=False)
    d = np.abs(np.diag(lu))
    bad = np.flatnonzero(d <= 1e-12 * max(d.max(), 1.0))
    return int(bad[0]) if bad.size else None


def solve_sparse(A, b):
    """Solve ``A x = b`` with SuperLU; raise :class:`SolverError` on singularity."""
    A = sp.csc_matrix(A)
    if A.shape[0] == 0:
        return np.zeros(0)
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SolverError(f"singular system: {exc}", dof=_zero_pivot(A)) from exc
    diag = np.abs(lu.U.diagonal())
    if diag.min() <= 1e-14 * diag.max():
        k = int(np.argmin(diag))
        raise SolverError("numerically singular system", dof=int(lu.perm_c[k]))
    return lu.solve(np.asarray(b, float))


def solve_linear(sys):
    """Solve a :class:`~rstshell.assembly.GlobalSystem`.

    Returns ``(d, report, multipliers)``; the residual is rechecked explicitly
    on the reduced system.
    """
    t0 = time.perf_counter()
    A, rhs = sys.reduced()
    x = solve_sparse(A, rhs)
    res = float(np.max(np.abs(A @ x - rhs), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    if res > RESIDUAL_TOL * scale:
        raise SolverError("residual check failed", defect=res)
    d, mult = sys.expand(x)
    report = SolveReport("ok", res, A.shape[0], time.perf_counter() - t0)
    return d, report, mult
