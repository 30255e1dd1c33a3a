"""Post-processing: true normal displacement, through-thickness Ansatz,
total resultants, L2 errors and convergence-rate fits."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .shellcore import LoadSet, Material, StressResultantSet


def true_normal_displacement(u, rho, geom, mat: Material):
    """``u + sigma/60 * tr(rho)`` (rescaled)."""
    trr = np.einsum("...ab,...ab->...", geom.a_inv, rho)
    return np.asarray(u) + mat.sigma / 60.0 * trr


def total_resultants(r: StressResultantSet, loads: LoadSet, geom, mat: Material):
    """Total membrane forces ``T``, minus moments ``-M`` and shear ``Q``.

    These are the shell quantities compared with thickness integrals of a 3D
    stress field.
    """
    s = mat.sigma
    ai = geom.a_inv
    T = r.n + (0.5 * s * loads.g + s / 12.0 * loads.f_div) * ai
    mM = r.m - (0.1 * s * loads.f + s / 120.0 * loads.g_div) * ai
    Q = r.q - np.asarray(loads.g_alpha, float) / 12.0
    return T, mM, Q


@dataclass(frozen=True)
class ThicknessData:
    """Kinematic quantities entering the through-thickness Ansatz at one point.

    ``trA``/``trB`` are the traces of the extension-like and bending-like
    tensors; ``grad_trA``/``grad_trB`` their covariant gradients (lower index).
    """

    u_a: np.ndarray
    u: float
    phi: np.ndarray
    du: np.ndarray
    trA: float = 0.0
    grad_trA: np.ndarray = field(default_factory=lambda: np.zeros(2))
    trB: float = 0.0
    grad_trB: np.ndarray = field(default_factory=lambda: np.zeros(2))


def reconstruct_thickness(data: ThicknessData, geom, loads: LoadSet, mat: Material, xi):
    """Tangential and normal 3D displacements at layers ``xi`` in [-1/2, 1/2].

    Returns ``(w_a, w)`` with shapes (len(xi), 2) and (len(xi),).
    """
    xi = np.atleast_1d(np.asarray(xi, float))
    if np.any(np.abs(xi) > 0.5 + 1e-12):
        raise ValidationError("xi must lie in [-1/2, 1/2]")
    s = mat.sigma
    p2 = xi**2 - 1.0 / 12.0
    p3 = xi * (xi**2 - 3.0 / 20.0)
    bu = geom.b_mixed.T @ np.asarray(data.u_a, float)  # b^b_a u_b
    phi = np.asarray(data.phi, float)
    gA = np.asarray(data.grad_trA, float)
    gB = np.asarray(data.grad_trB, float)
    phi_t = phi - s / 60.0 * gB
    f_low = geom.a @ np.asarray(loads.f_alpha, float)
    g_low = geom.a @ np.asarray(loads.g_alpha, float)
    w_a = (
        np.asarray(data.u_a, float)[None, :]
        + xi[:, None] * (phi - np.asarray(data.du, float) - bu)[None, :]
        + 0.5 * gA[None, :] * p2[:, None]
        - s / 6.0 * gB[None, :] * p3[:, None]
        - 5.0 / 3.0 * phi_t[None, :] * p3[:, None]
        + 5.0 / 6.0 * g_low[None, :] * p3[:, None]
        + 0.5 * f_low[None, :] * p2[:, None]
    )
    w = (
        data.u
        - xi * s * data.trA
        + 0.5 * s * data.trB * p2
        + (1.0 - s) / 4.0 * (loads.g * 5.0 / 3.0 * p3 + loads.f * p2)
    )
    return w_a, w


def l2_error(num, ref, weights):
    """Relative squared L2 error and its square root.

    ``num`` and ``ref`` are field samples (..., k) at quadrature points with
    integration ``weights`` (...). Returns ``(relative_squared, relative)``.
    """
    num = np.asarray(num, float)
    ref = np.asarray(ref, float)
    if num.ndim == np.ndim(weights):
        num, ref = num[..., None], ref[..., None]
    den = float(np.sum(weights * np.sum(ref**2, axis=-1)))
    if den <= 0.0:
        raise ValidationError("reference field has zero norm")
    e2 = float(np.sum(weights * np.sum((num - ref) ** 2, axis=-1))) / den
    return e2, np.sqrt(e2)


@dataclass(frozen=True)
class ErrorReport:
    h_elem: np.ndarray
    n_dof: np.ndarray
    errors: np.ndarray
    slope: float
    running: np.ndarray
    monotone: bool


def convergence_slope(points):
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    Warns (and still returns the slope) when the errors do not decrease
    monotonically with ``h``.
    """
    pts = sorted(((float(h), float(e)) for h, e in points), key=lambda t: -t[0])
    if len(pts) < 3:
        raise ValidationError("need at least three refinement levels")
    h, e = np.array(pts).T
    if np.any(e <= 0):
        raise ValidationError("errors must be positive")
    if np.any(np.diff(e) >= 0):
        warnings.warn("error sequence is not monotone", RuntimeWarning, stacklevel=2)
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def error_report(h, n_dof, errors):
    h, e = np.asarray(h, float), np.asarray(errors, float)
    running = np.full(len(h), np.nan)
    for k in range(1, len(h)):
        running[k] = np.log(e[k] / e[k - 1]) / np.log(h[k] / h[k - 1])
    monotone = bool(np.all(np.diff(e) < 0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        slope = convergence_slope(zip(h, e))
    return ErrorReport(h, np.asarray(n_dof), e, slope, running, monotone)
