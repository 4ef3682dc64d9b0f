"""The two-stage moving-mesh time integrator.

Each time slab is advanced by a trapezoid solve at the mid collocation point
followed by a second-order backward-difference completion at the slab end,
with all matrices assembled on the mesh slice frozen at the respective
collocation time.  Coefficient vectors are shift-invariant between slices of
one slab, so the three stage vectors are plain arrays and the slice choice
carries all of the moving-mesh semantics.

Across slab boundaries the solution is carried over either by pointwise
interpolation or by an L2 projection that enforces the jump condition
<u_new - u_old, chi> = 0 for every basis function of the new mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assembly import (
    BandedMatrix,
    assemble_Atau,
    assemble_load,
    assemble_mass,
    assemble_system,
    convection_matrix,
    fe_values_at_quadrature,
    mesh_velocity_at_quadrature,
    supg_test_shift,
    weighted_mass,
)
from .basis import gauss_legendre, lagrange2_values, time_lagrange
from .errors import SolverFailure
from .mesh import MeshSlice, TimePartition, fe_eval, slice_at

__all__ = [
    "RICHARDSON_EPS",
    "TransferMode",
    "StepperConfig",
    "FEFunction",
    "transfer_initial",
    "tr_stage",
    "bdf2_stage",
    "newton_stage",
    "stage_residual",
    "advance_partition",
    "stability_function",
]

# The truncation-error-optimal intermediate basis node.
RICHARDSON_EPS = 2.0 - math.sqrt(2.0)

_QUAD = gauss_legendre(5)


class TransferMode(Enum):
    INTERPOLATE = "interp"
    L2_PROJECT = "l2"


@dataclass
class StepperConfig:
    eps: float = RICHARDSON_EPS
    transfer: TransferMode = TransferMode.INTERPOLATE
    supg_delta: float = 0.0
    newton_steps: int = 1
    residual_tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.supg_delta < 0.0:
            raise ValueError("supg_delta must be nonnegative")
        if self.newton_steps != 1:
            raise ValueError("exactly one Newton step per stage is supported")


@dataclass
class FEFunction:
    """Stage coefficient vectors at the three basis times of one slab."""

    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    partition: TimePartition

    def coefficients_at(self, t: float) -> np.ndarray:
        """Quadratic-in-time combination along the node trajectories."""
        s = self.partition.normalized(t)
        l0, l1, l2 = time_lagrange(self.partition.eps, s)
        return l0 * self.u0 + l1 * self.u1 + l2 * self.u2

    def evaluate(self, t: float, x: np.ndarray) -> np.ndarray:
        return fe_eval(slice_at(self.partition, t), self.coefficients_at(t), x)


def transfer_initial(
    prev: np.ndarray,
    old_slice: MeshSlice,
    new_slice: MeshSlice,
    mode: TransferMode,
) -> np.ndarray:
    """Carry a coefficient vector across a mesh discontinuity.

    Interpolation evaluates the old function at the new nodes; projection
    solves M_new c = <u_old, phi_new> with the right side integrated exactly
    on the union partition of both vertex sets, so the old function is a
    polynomial on every subinterval.
    """
    prev = np.asarray(prev, dtype=float)
    if prev.size != old_slice.n_nodes:
        raise ValueError("coefficient vector does not match the old slice")
    if np.array_equal(old_slice.node_positions, new_slice.node_positions):
        return prev.copy()
    if mode is TransferMode.INTERPOLATE:
        return fe_eval(old_slice, prev, new_slice.node_positions)

    breaks = np.union1d(old_slice.vertex_positions, new_slice.vertex_positions)
    lo, hi = new_slice.domain
    breaks = breaks[(breaks >= lo) & (breaks <= hi)]
    widths = np.diff(breaks)
    keep = widths > 0.0
    starts, widths = breaks[:-1][keep], widths[keep]
    xq = (starts[:, None] + widths[:, None] * _QUAD.points[None, :]).ravel()
    wq = (widths[:, None] * _QUAD.weights[None, :]).ravel()
    uq = fe_eval(old_slice, prev, xq)

    verts = new_slice.vertex_positions
    idx = np.clip(np.searchsorted(verts, xq, side="right") - 1, 0, verts.size - 2)
    xhat = (xq - verts[idx]) / (verts[idx + 1] - verts[idx])
    shapes = lagrange2_values(np.clip(xhat, 0.0, 1.0))
    rhs = np.zeros(new_slice.n_nodes)
    for j in range(3):
        np.add.at(rhs, 2 * idx + j, wq * uq * shapes[j])
    return assemble_mass(new_slice).solve(rhs)


def _stage_operators(
    slice_: MeshSlice, problem, t: float, config: StepperConfig
) -> tuple[BandedMatrix, BandedMatrix, np.ndarray]:
    system = assemble_system(slice_, problem, t, config.supg_delta)
    return system.mass, system.stiffness, system.load


def _checked_solve(
    lhs: BandedMatrix, rhs: np.ndarray, config: StepperConfig, label: str
) -> np.ndarray:
    sol = lhs.solve(rhs)
    if not np.all(np.isfinite(sol)):
        raise SolverFailure(f"{label} solve produced non-finite values")
    residual = np.linalg.norm(lhs.matvec(sol) - rhs)
    scale = np.linalg.norm(rhs) + lhs.norm_inf() * np.linalg.norm(sol)
    if residual > config.residual_tol * max(scale, 1e-300):
        raise SolverFailure(
            f"{label} residual {residual:.3e} exceeds tolerance at scale {scale:.3e}"
        )
    return sol


def tr_stage(
    U0: np.ndarray, partition: TimePartition, problem, config: StepperConfig
) -> np.ndarray:
    """Trapezoid stage: [M/(eps dt) + A/2] U1 = [M/(eps dt) - A/2] U0 + L."""
    eps, dt = partition.eps, partition.dt
    t_mid = partition.collocation_times[0]
    s_mid = slice_at(partition, t_mid)
    mass, atau, load = _stage_operators(s_mid, problem, t_mid, config)
    lhs = mass.scaled(1.0 / (eps * dt)) + atau.scaled(0.5)
    rhs = mass.matvec(U0) / (eps * dt) - 0.5 * atau.matvec(U0) + load
    return _checked_solve(lhs, rhs, config, "trapezoid stage")


def bdf2_stage(
    U0: np.ndarray,
    U1: np.ndarray,
    partition: TimePartition,
    problem,
    config: StepperConfig,
) -> np.ndarray:
    """Backward-difference completion at the slab end.

    [(2-eps)/((1-eps) dt) M + A] U2
        = M U1 / (eps (1-eps) dt) - (1-eps)/(eps dt) M U0 + L.
    """
    eps, dt = partition.eps, partition.dt
    t_end = partition.collocation_times[1]
    s_end = slice_at(partition, t_end)
    mass, atau, load = _stage_operators(s_end, problem, t_end, config)
    lhs = mass.scaled((2.0 - eps) / ((1.0 - eps) * dt)) + atau
    rhs = (
        mass.matvec(U1) / (eps * (1.0 - eps) * dt)
        - mass.matvec(U0) * ((1.0 - eps) / (eps * dt))
        + load
    )
    return _checked_solve(lhs, rhs, config, "backward-difference stage")


def _nonlinear_operator(
    slice_: MeshSlice, problem, t: float, V: np.ndarray, config: StepperConfig
) -> tuple[np.ndarray, BandedMatrix, np.ndarray]:
    """Spatial residual vector S(V) - L and its linearization at V.

    The convection field is the solution itself; its Jacobian contributes
    B(V - x_t) from differentiating u_x and a weighted mass from
    differentiating the transported field.
    """
    atau = assemble_Atau(slice_, problem, t)  # diffusion, -x_t offset, reaction
    load = assemble_load(slice_, problem, t)
    vals, ders = fe_values_at_quadrature(slice_, V)
    conv = convection_matrix(slice_, vals)
    jac = atau + conv + weighted_mass(slice_, ders)
    spatial = atau.matvec(V) + conv.matvec(V)
    if config.supg_delta > 0.0:
        xt = mesh_velocity_at_quadrature(slice_)
        pert, pert_load = supg_test_shift(
            slice_, problem, t, config.supg_delta, conv_field=vals - xt
        )
        spatial = spatial + pert.matvec(V)
        load = load + pert_load
        jac = jac + pert
    return spatial - load, jac, load


def _stage_system(
    stage: str,
    W: np.ndarray,
    U0: np.ndarray,
    partition: TimePartition,
    problem,
    config: StepperConfig,
    U1: np.ndarray | None,
) -> tuple[np.ndarray, BandedMatrix]:
    """Stage residual R(W) and Jacobian dR/dW at the candidate W."""
    eps, dt = partition.eps, partition.dt
    if stage == "tr":
        t_col = partition.collocation_times[0]
        s_col = slice_at(partition, t_col)
        mass = assemble_mass(s_col)
        V = 0.5 * (W + U0)
        if problem.nonlinear:
            spatial_res, spatial_jac, _ = _nonlinear_operator(
                s_col, problem, t_col, V, config
            )
        else:
            _, atau, load = _stage_operators(s_col, problem, t_col, config)
            spatial_res, spatial_jac = atau.matvec(V) - load, atau
        residual = mass.matvec(W - U0) / (eps * dt) + spatial_res
        jac = mass.scaled(1.0 / (eps * dt)) + spatial_jac.scaled(0.5)
        return residual, jac
    if stage == "bdf2":
        if U1 is None:
            raise ValueError("bdf2 stage requires U1")
        t_col = partition.collocation_times[1]
        s_col = slice_at(partition, t_col)
        mass = assemble_mass(s_col)
        if problem.nonlinear:
            spatial_res, spatial_jac, _ = _nonlinear_operator(
                s_col, problem, t_col, W, config
            )
        else:
            _, atau, load = _stage_operators(s_col, problem, t_col, config)
            spatial_res, spatial_jac = atau.matvec(W) - load, atau
        residual = (
            mass.matvec(eps * (2.0 - eps) * W - U1 + (1.0 - eps) ** 2 * U0)
            / (eps * (1.0 - eps) * dt)
            + spatial_res
        )
        jac = mass.scaled((2.0 - eps) / ((1.0 - eps) * dt)) + spatial_jac
        return residual, jac
    raise ValueError(f"stage must be 'tr' or 'bdf2', got {stage!r}")


def stage_residual(
    stage: str,
    W: np.ndarray,
    U0: np.ndarray,
    partition: TimePartition,
    problem,
    config: StepperConfig,
    U1: np.ndarray | None = None,
) -> np.ndarray:
    """Residual of the stage equation at a candidate vector (diagnostic)."""
    residual, _ = _stage_system(
        stage, np.asarray(W, dtype=float), U0, partition, problem, config, U1
    )
    return residual


def newton_stage(
    stage: str,
    predictor: np.ndarray,
    U0: np.ndarray,
    partition: TimePartition,
    problem,
    config: StepperConfig,
    U1: np.ndarray | None = None,
) -> np.ndarray:
    """One Newton step on the stage equation, from the given predictor.

    ``stage`` is "tr" or "bdf2"; the bdf2 stage requires U1.  On a linear
    problem the single step lands exactly on the direct stage solution.
    """
    W = np.asarray(predictor, dtype=float)
    residual, jac = _stage_system(stage, W, U0, partition, problem, config, U1)
    step = jac.solve(residual)
    if not np.all(np.isfinite(step)):
        raise SolverFailure("Newton step produced non-finite values")
    return W - step


def advance_partition(
    prev: np.ndarray,
    old_slice: MeshSlice,
    partition: TimePartition,
    problem,
    config: StepperConfig,
) -> FEFunction:
    """Transfer onto the slab's start slice, then run both stages."""
    start = slice_at(partition, partition.t_start)
    u0 = transfer_initial(prev, old_slice, start, config.transfer)
    if problem.nonlinear:
        u1 = newton_stage("tr", u0, u0, partition, problem, config)
        u2 = newton_stage("bdf2", u1, u0, partition, problem, config, U1=u1)
    else:
        u1 = tr_stage(u0, partition, problem, config)
        u2 = bdf2_stage(u0, u1, partition, problem, config)
    return FEFunction(u0=u0, u1=u1, u2=u2, partition=partition)


def stability_function(z: complex, eps: float) -> complex:
    """Amplification factor of one step applied to y' = lambda*y with z = lambda*dt.

    Composition of the trapezoid and backward-difference stage maps:
    R(z) = [(1 + eps z/2)/(1 - eps z/2) - (1-eps)^2] / [eps(2-eps) - eps(1-eps) z].
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    z = complex(z)
    tr_den = 1.0 - 0.5 * eps * z
    bdf_den = eps * (2.0 - eps) - eps * (1.0 - eps) * z
    if abs(tr_den) < 1e-14 or abs(bdf_den) < 1e-14:
        raise ValueError(f"z={z} is at (or numerically near) a pole of the stability function")
    return ((1.0 + 0.5 * eps * z) / tr_den - (1.0 - eps) ** 2) / bdf_den
