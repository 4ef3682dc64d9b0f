"""Error measurement: L2/H1 norms against exact solutions, the mesh-dependent
dual norm, the composite space-time energy semi-norm, overshoot metrics and
convergence-order fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble_mass, assemble_stiffness, quadrature_points
from .basis import gauss_legendre, lagrange2_values, time_diff_coeffs
from .mesh import MeshSlice, fe_eval, fe_eval_deriv, slice_at
from .timestepper import FEFunction

__all__ = [
    "ErrorRecord",
    "l2_error",
    "h1_seminorm_error",
    "l2_norm",
    "negative_norm",
    "energy_seminorm",
    "overshoot_metric",
    "convergence_rate",
]

_QUAD = gauss_legendre(5)


@dataclass
class ErrorRecord:
    n: int
    m: int
    l2_final: float
    h1_final: float
    energy: float | None
    cpu_seconds: float


def _element_quadrature(slice_: MeshSlice) -> tuple[np.ndarray, np.ndarray]:
    xq = quadrature_points(slice_)
    wq = slice_.element_lengths[:, None] * _QUAD.weights[None, :]
    return xq, wq


def l2_error(slice_: MeshSlice, coeffs: np.ndarray, exact) -> float:
    """|| u_h - u ||_0 by 5-point Gauss quadrature per element."""
    xq, wq = _element_quadrature(slice_)
    diff = fe_eval(slice_, coeffs, xq.ravel()) - np.asarray(
        exact(xq.ravel()), dtype=float
    )
    return float(np.sqrt(np.sum(wq.ravel() * diff * diff)))


def h1_seminorm_error(slice_: MeshSlice, coeffs: np.ndarray, exact_x) -> float:
    """| u_h - u |_1, i.e. the L2 distance of the spatial derivatives."""
    xq, wq = _element_quadrature(slice_)
    diff = fe_eval_deriv(slice_, coeffs, xq.ravel()) - np.asarray(
        exact_x(xq.ravel()), dtype=float
    )
    return float(np.sqrt(np.sum(wq.ravel() * diff * diff)))


def l2_norm(slice_: MeshSlice, coeffs: np.ndarray) -> float:
    mass = assemble_mass(slice_)
    return float(np.sqrt(np.dot(coeffs, mass.matvec(coeffs))))


def negative_norm(slice_: MeshSlice, v) -> float:
    """The dual norm sup_chi <v, chi> / ||chi||_1 over the slice's FE space.

    In finite dimensions the supremum is attained exactly: with moments
    r_j = <v, phi_j> and the H1 Gram matrix G = M + K the value equals
    sqrt(r^T G^{-1} r).  ``v`` is either an FE coefficient vector on this
    slice or a callable evaluated by quadrature.
    """
    mass = assemble_mass(slice_)
    if callable(v):
        xq, wq = _element_quadrature(slice_)
        vals = np.asarray(v(xq.ravel()), dtype=float) * wq.ravel()
        verts = slice_.vertex_positions
        idx = np.clip(
            np.searchsorted(verts, xq.ravel(), side="right") - 1, 0, verts.size - 2
        )
        xhat = np.clip(
            (xq.ravel() - verts[idx]) / (verts[idx + 1] - verts[idx]), 0.0, 1.0
        )
        shapes = lagrange2_values(xhat)
        moments = np.zeros(slice_.n_nodes)
        for j in range(3):
            np.add.at(moments, 2 * idx + j, vals * shapes[j])
    else:
        moments = mass.matvec(np.asarray(v, dtype=float))
    gram = mass + assemble_stiffness(slice_)
    return float(np.sqrt(max(np.dot(moments, gram.solve(moments)), 0.0)))


def _h1_full_norm_sq(slice_: MeshSlice, coeffs: np.ndarray) -> float:
    mass = assemble_mass(slice_)
    stiff = assemble_stiffness(slice_)
    return float(
        np.dot(coeffs, mass.matvec(coeffs)) + np.dot(coeffs, stiff.matvec(coeffs))
    )


def energy_seminorm(partition_errors: list[FEFunction]) -> float:
    """Squared composite space-time error measure of a sequence of slab errors.

    Each entry carries the error's FE coefficients at the slab's three basis
    times.  The returned square combines the max L2 norm over the collocation
    nodes with step-weighted sums of dual norms of the discrete time
    derivative and full H1 norms of the trapezoid combination, the
    intermediate basis value and the end value; it is homogeneous of degree
    two in the error.
    """
    max_l2_sq = 0.0
    accum = 0.0
    for err in partition_errors:
        part = err.partition
        eps, dt = part.eps, part.dt
        coeffs_mid = err.coefficients_at(part.collocation_times[0])
        s_mid = slice_at(part, part.collocation_times[0])
        s_end = slice_at(part, part.t_end)
        l2_mid = l2_norm(s_mid, coeffs_mid)
        l2_end = l2_norm(s_end, err.u2)
        max_l2_sq = max(max_l2_sq, l2_mid**2, l2_end**2)

        stencil = time_diff_coeffs(eps)
        d_mid = (stencil.mid[0] * err.u0 + stencil.mid[1] * err.u1) / dt
        d_end = (
            stencil.end[0] * err.u0 + stencil.end[1] * err.u1 + stencil.end[2] * err.u2
        ) / dt
        u_tr = 0.5 * (err.u0 + err.u1)
        s_zeta1 = slice_at(part, part.basis_times[1])
        accum += dt * (
            negative_norm(s_mid, d_mid) ** 2
            + _h1_full_norm_sq(s_mid, u_tr)
            + _h1_full_norm_sq(s_zeta1, err.u1)
            + negative_norm(s_end, d_end) ** 2
            + _h1_full_norm_sq(s_end, err.u2)
        )
    return float(max_l2_sq + accum)


def overshoot_metric(values: np.ndarray, bounds: tuple[float, float]) -> float:
    """Total violation of the exact solution's range by a sampled snapshot."""
    values = np.asarray(values, dtype=float)
    lo, hi = bounds
    return float(max(0.0, values.max() - hi) + max(0.0, lo - values.min()))


def convergence_rate(errors, step_sizes) -> float:
    """Least-squares slope of log(error) against log(step size)."""
    errors = np.asarray(errors, dtype=float)
    steps = np.asarray(step_sizes, dtype=float)
    if errors.size < 3 or errors.size != steps.size:
        raise ValueError("need at least 3 matching (error, step) pairs")
    if np.any(errors <= 0.0) or np.any(steps <= 0.0):
        raise ValueError("errors and step sizes must be positive")
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)
