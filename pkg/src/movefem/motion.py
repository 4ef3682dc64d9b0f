"""Mesh-motion policies and topology changes at slab boundaries.

Trajectories are generated per slab: either from the convection field via two
forward-Euler substeps (so the quadratic node paths approximately follow
x_t = b(x, t)), or linearly from the previous solution's nodal values.
Boundary vertices never move.  Any vertex whose generated path would leave
the domain or collide with a neighbor is deleted before the slab starts, and
between slabs elements that became too short or too long are merged or
bisected (or the whole mesh is reset to uniform).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DegenerateMeshError, InvalidStateError
from .mesh import (
    MeshSlice,
    NodeTrajectory,
    TimePartition,
    build_uniform_slice,
    fit_quadratic_trajectory,
    partition_from_vertex_trajectories,
    static_partition,
)

__all__ = [
    "MotionKind",
    "MotionPolicy",
    "characteristics_trajectories",
    "solution_velocity_trajectories",
    "reconfigure_between_partitions",
    "generate_partition",
]

_INTERIOR_SAMPLES = 11


class MotionKind(Enum):
    STATIC = "static"
    CHARACTERISTICS = "char"
    SOLUTION_VELOCITY = "solvel"


@dataclass(frozen=True)
class MotionPolicy:
    kind: MotionKind
    uniform_reset: bool = False
    min_spacing_factor: float = 0.1
    max_spacing_factor: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.min_spacing_factor < 1.0 < self.max_spacing_factor:
            raise ValueError(
                "need 0 < min_spacing_factor < 1 < max_spacing_factor, got "
                f"{self.min_spacing_factor}, {self.max_spacing_factor}"
            )


def _check_partition_ordering(partition: TimePartition) -> bool:
    samples = np.concatenate(
        [np.linspace(0.0, 1.0, _INTERIOR_SAMPLES), [partition.eps]]
    )
    for s in samples:
        if np.any(np.diff(partition.positions_at(s)) <= 0.0):
            return False
    return True


def _partition_from_vertex_knots(
    t_start: float,
    dt: float,
    eps: float,
    x0: np.ndarray,
    x_mid: np.ndarray,
    x_end: np.ndarray,
) -> TimePartition:
    trajs = [
        fit_quadratic_trajectory(a, b, c, eps)
        for a, b, c in zip(x0, x_mid, x_end)
    ]
    part = partition_from_vertex_trajectories(t_start, dt, eps, trajs)
    if not _check_partition_ordering(part):
        raise DegenerateMeshError(
            f"generated trajectories cross inside the slab starting at t={t_start}"
        )
    return part


def characteristics_trajectories(
    start_slice: MeshSlice, problem, t_start: float, dt: float, eps: float
) -> TimePartition:
    """Quadratic vertex paths from two forward-Euler substeps of x_t = b(x, t).

    The first substep covers eps*dt, the second the remaining (1-eps)*dt, and
    the quadratic is fitted through the three resulting positions.  Boundary
    vertices are clamped to the domain endpoints.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x0 = start_slice.vertex_positions.copy()
    t_mid = t_start + eps * dt
    v0 = np.broadcast_to(np.asarray(problem.b(x0, t_start), dtype=float), x0.shape)
    x_mid = x0 + eps * dt * v0
    v1 = np.broadcast_to(np.asarray(problem.b(x_mid, t_mid), dtype=float), x0.shape)
    x_end = x_mid + (1.0 - eps) * dt * v1
    x_mid, x_end = x_mid.copy(), x_end.copy()
    x_mid[0] = x_end[0] = x0[0]
    x_mid[-1] = x_end[-1] = x0[-1]
    return _partition_from_vertex_knots(t_start, dt, eps, x0, x_mid, x_end)


def solution_velocity_trajectories(
    start_slice: MeshSlice,
    u_prev: Callable[[np.ndarray], np.ndarray],
    t_start: float,
    dt: float,
    eps: float,
) -> TimePartition:
    """Linear vertex motion with the previous solution's value as velocity."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    x0 = start_slice.vertex_positions.copy()
    vel = np.broadcast_to(np.asarray(u_prev(x0), dtype=float), x0.shape).copy()
    vel[0] = vel[-1] = 0.0
    trajs = [NodeTrajectory(c0=x, c1=v * dt, c2=0.0) for x, v in zip(x0, vel)]
    part = partition_from_vertex_trajectories(t_start, dt, eps, trajs)
    if not _check_partition_ordering(part):
        raise DegenerateMeshError(
            f"solution-velocity trajectories cross inside the slab at t={t_start}"
        )
    return part


def reconfigure_between_partitions(
    end_slice: MeshSlice,
    policy: MotionPolicy,
    reference_spacing: float,
    reset_n_nodes: int | None = None,
) -> MeshSlice:
    """Topology maintenance at a slab boundary.

    With ``uniform_reset`` the mesh is rebuilt uniform with ``reset_n_nodes``
    nodes (default: the current count).  Otherwise elements shorter than
    min_spacing_factor * reference_spacing lose a vertex (merging with the
    neighbor whose far vertex sits closest to the short element's center) and
    elements longer than max_spacing_factor * reference_spacing are bisected.
    Midpoints are regenerated at the element centers; velocities reset to zero
    since the next slab assigns fresh trajectories.
    """
    lo, hi = end_slice.domain
    if policy.uniform_reset:
        n = reset_n_nodes if reset_n_nodes is not None else end_slice.n_nodes
        return build_uniform_slice(lo, hi, n, end_slice.time)

    verts = list(end_slice.vertex_positions)
    lo_gate = policy.min_spacing_factor * reference_spacing
    hi_gate = policy.max_spacing_factor * reference_spacing

    for _ in range(16):
        changed = False
        # Deletion pass: merge away one endpoint of each too-short element.
        k = 0
        while k < len(verts) - 1:
            if verts[k + 1] - verts[k] >= lo_gate:
                k += 1
                continue
            if len(verts) <= 2:
                raise InvalidStateError("cannot delete below 3 nodes")
            center = 0.5 * (verts[k] + verts[k + 1])
            left_ok = k > 0
            right_ok = k + 1 < len(verts) - 1
            if not (left_ok or right_ok):
                raise InvalidStateError("cannot delete below 3 nodes")
            if left_ok and right_ok:
                drop_left = abs(verts[k - 1] - center) < abs(verts[k + 2] - center)
            else:
                drop_left = left_ok
            del verts[k if drop_left else k + 1]
            changed = True
        # Bisection pass: split too-long elements at their centers.
        k = 0
        while k < len(verts) - 1:
            if verts[k + 1] - verts[k] > hi_gate:
                verts.insert(k + 1, 0.5 * (verts[k] + verts[k + 1]))
                changed = True
            k += 1
        if not changed:
            break

    verts_arr = np.asarray(verts)
    positions = np.empty(2 * verts_arr.size - 1)
    positions[0::2] = verts_arr
    positions[1::2] = 0.5 * (verts_arr[:-1] + verts_arr[1:])
    return MeshSlice(
        time=end_slice.time,
        node_positions=positions,
        node_velocities=np.zeros_like(positions),
    )


def _build_raw(
    start_slice: MeshSlice,
    policy: MotionPolicy,
    problem,
    u_prev: Callable[[np.ndarray], np.ndarray] | None,
    t_start: float,
    dt: float,
    eps: float,
) -> TimePartition:
    if policy.kind is MotionKind.STATIC:
        return static_partition(start_slice, t_start, dt, eps)
    if policy.kind is MotionKind.CHARACTERISTICS:
        if problem.nonlinear:
            raise ValueError(
                "characteristics motion needs an explicit convection field; "
                "use solution-velocity motion for nonlinear problems"
            )
        return characteristics_trajectories(start_slice, problem, t_start, dt, eps)
    if u_prev is None:
        raise ValueError("solution-velocity motion needs the previous solution")
    return solution_velocity_trajectories(start_slice, u_prev, t_start, dt, eps)


def _prune_vertices(
    start_slice: MeshSlice,
    policy: MotionPolicy,
    problem,
    u_prev,
    t_start: float,
    dt: float,
    eps: float,
    separation_floor: float,
) -> tuple[MeshSlice, TimePartition]:
    """Drop vertices whose generated paths would exit the domain or collide.

    This is the reconfiguration a degenerate trajectory set demands: the
    offending interior vertices (and their midpoints) are removed from the
    start slice and the trajectories regenerated.  Boundary vertices are
    never deleted.
    """
    slice_ = start_slice
    lo, hi = slice_.domain
    samples = np.concatenate([np.linspace(0.0, 1.0, _INTERIOR_SAMPLES), [eps]])
    for _ in range(64):
        verts = slice_.vertex_positions
        # Vertex paths, evaluated without the degeneracy guard.
        if policy.kind is MotionKind.CHARACTERISTICS:
            x0 = verts.copy()
            v0 = np.broadcast_to(np.asarray(problem.b(x0, t_start), dtype=float), x0.shape)
            x_mid = x0 + eps * dt * v0
            v1 = np.broadcast_to(
                np.asarray(problem.b(x_mid, t_start + eps * dt), dtype=float), x0.shape
            )
            x_end = x_mid + (1.0 - eps) * dt * v1
            x_mid, x_end = x_mid.copy(), x_end.copy()
            x_mid[0] = x_end[0] = x0[0]
            x_mid[-1] = x_end[-1] = x0[-1]
            trajs = [
                fit_quadratic_trajectory(a, b, c, eps)
                for a, b, c in zip(x0, x_mid, x_end)
            ]
        else:
            vel = np.broadcast_to(np.asarray(u_prev(verts), dtype=float), verts.shape).copy()
            vel[0] = vel[-1] = 0.0
            trajs = [
                NodeTrajectory(c0=x, c1=v * dt, c2=0.0) for x, v in zip(verts, vel)
            ]
        paths = np.stack(
            [
                np.array([tr.position(s) for tr in trajs])
                for s in samples
            ]
        )  # (n_samples, n_vertices)
        drop = np.zeros(verts.size, dtype=bool)
        # Exit check against the fixed domain (interior vertices only).
        drop[1:-1] |= np.any(paths[:, 1:-1] > hi - separation_floor, axis=0)
        drop[1:-1] |= np.any(paths[:, 1:-1] < lo + separation_floor, axis=0)
        if not drop.any():
            # Pairwise collision check; drop the right-hand member of a pair
            # (left when the right one is the boundary vertex).
            gaps = np.diff(paths, axis=1)
            bad = np.any(gaps < separation_floor, axis=0)
            for k in np.flatnonzero(bad):
                if k + 1 < verts.size - 1:
                    drop[k + 1] = True
                elif k > 0:
                    drop[k] = True
                else:
                    raise DegenerateMeshError(
                        "boundary vertices collide; the slab cannot be built"
                    )
        if not drop.any():
            part = _build_raw(slice_, policy, problem, u_prev, t_start, dt, eps)
            return slice_, part
        keep = ~drop
        if keep.sum() < 2:
            raise DegenerateMeshError("vertex pruning exhausted the mesh")
        new_verts = verts[keep]
        positions = np.empty(2 * new_verts.size - 1)
        positions[0::2] = new_verts
        positions[1::2] = 0.5 * (new_verts[:-1] + new_verts[1:])
        slice_ = MeshSlice(
            time=slice_.time,
            node_positions=positions,
            node_velocities=np.zeros_like(positions),
        )
    raise DegenerateMeshError("vertex pruning did not converge")


def generate_partition(
    start_slice: MeshSlice,
    policy: MotionPolicy,
    problem,
    u_prev: Callable[[np.ndarray], np.ndarray] | None,
    t_start: float,
    dt: float,
    eps: float,
    separation_floor: float,
) -> tuple[MeshSlice, TimePartition]:
    """Build the slab for one step, pruning vertices when trajectories degenerate.

    Returns the (possibly pruned) start slice together with the partition; the
    caller transfers the previous solution onto that slice afterwards.
    """
    if policy.kind is MotionKind.STATIC:
        return start_slice, static_partition(start_slice, t_start, dt, eps)
    try:
        part = _build_raw(start_slice, policy, problem, u_prev, t_start, dt, eps)
        return start_slice, part
    except DegenerateMeshError:
        return _prune_vertices(
            start_slice, policy, problem, u_prev, t_start, dt, eps, separation_floor
        )
