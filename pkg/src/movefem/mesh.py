"""Space-time mesh geometry for one spatial dimension.

A time partition is a slab [t_start, t_end] on which every spatial node
(vertices and element midpoints alike) travels along a quadratic trajectory
x(s) = c0 + c1*s + c2*s**2 in the normalized time s = (t - t_start) / dt.
Midpoint trajectories are never independent: the spatial isoparametric map is
affine per element, so they are the mean of their two vertex trajectories.

Freezing the geometry at one time gives a MeshSlice: node positions, node
velocities and element lengths (the 1D element Jacobians).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import lagrange2_derivs, lagrange2_values
from .errors import DegenerateMeshError

__all__ = [
    "NodeTrajectory",
    "TimePartition",
    "MeshSlice",
    "RegularityReport",
    "build_uniform_slice",
    "fit_quadratic_trajectory",
    "partition_from_vertex_trajectories",
    "static_partition",
    "slice_at",
    "evolution_magnitude",
    "regularity_report",
    "shift_coefficients",
    "fe_eval",
    "fe_eval_deriv",
    "trajectory_rows",
]


@dataclass(frozen=True)
class NodeTrajectory:
    """Quadratic path of one node in normalized slab time s in [0, 1]."""

    c0: float
    c1: float
    c2: float

    def position(self, s: float) -> float:
        return self.c0 + s * (self.c1 + s * self.c2)

    def velocity(self, s: float, dt: float) -> float:
        """Physical velocity dx/dt; the chain rule brings in 1/dt."""
        return (self.c1 + 2.0 * self.c2 * s) / dt


@dataclass(frozen=True)
class TimePartition:
    """One time slab with its node trajectories.

    Basis times are (t_start, t_start + eps*dt, t_end); collocation times are
    (t_start + eps/2*dt, t_end).  n_nodes is odd: vertices and midpoints
    interleave, nodes 0, 2, 4, ... being vertices.
    """

    t_start: float
    t_end: float
    eps: float
    trajectories: tuple[NodeTrajectory, ...]

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if len(self.trajectories) < 3 or len(self.trajectories) % 2 == 0:
            raise ValueError("need an odd node count >= 3")

    @property
    def dt(self) -> float:
        return self.t_end - self.t_start

    @property
    def n_nodes(self) -> int:
        return len(self.trajectories)

    @property
    def basis_times(self) -> tuple[float, float, float]:
        return (self.t_start, self.t_start + self.eps * self.dt, self.t_end)

    @property
    def collocation_times(self) -> tuple[float, float]:
        return (self.t_start + 0.5 * self.eps * self.dt, self.t_end)

    def normalized(self, t: float) -> float:
        return (t - self.t_start) / self.dt

    def positions_at(self, s: float) -> np.ndarray:
        c0, c1, c2 = _coefficient_arrays(self)
        return c0 + s * (c1 + s * c2)

    def velocities_at(self, s: float) -> np.ndarray:
        c0, c1, c2 = _coefficient_arrays(self)
        return (c1 + 2.0 * s * c2) / self.dt


def _coefficient_arrays(partition: TimePartition) -> tuple[np.ndarray, ...]:
    c = np.array([(tr.c0, tr.c1, tr.c2) for tr in partition.trajectories])
    return c[:, 0], c[:, 1], c[:, 2]


@dataclass(frozen=True)
class MeshSlice:
    """The spatial mesh frozen at one time."""

    time: float
    node_positions: np.ndarray
    node_velocities: np.ndarray
    element_lengths: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pos = np.asarray(self.node_positions, dtype=float)
        vel = np.asarray(self.node_velocities, dtype=float)
        if pos.ndim != 1 or pos.size < 3 or pos.size % 2 == 0:
            raise ValueError("node_positions must be a flat odd-length array, >= 3")
        if vel.shape != pos.shape:
            raise ValueError("node_velocities must match node_positions")
        if np.any(np.diff(pos) <= 0.0):
            raise DegenerateMeshError(
                f"node positions not strictly increasing at t={self.time}"
            )
        lengths = pos[2::2] - pos[0:-2:2]
        object.__setattr__(self, "node_positions", pos)
        object.__setattr__(self, "node_velocities", vel)
        object.__setattr__(self, "element_lengths", lengths)
        for a in (pos, vel, lengths):
            a.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.node_positions.size

    @property
    def n_elements(self) -> int:
        return self.element_lengths.size

    @property
    def vertex_positions(self) -> np.ndarray:
        return self.node_positions[0::2]

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.node_positions[0]), float(self.node_positions[-1])


@dataclass(frozen=True)
class RegularityReport:
    """Sampled space-time shape-regularity summary of one partition."""

    mu_max: float
    det_ratio_min: float
    det_ratio_max: float
    degenerate: bool


def build_uniform_slice(
    domain_lo: float, domain_hi: float, n_nodes: int, time: float
) -> MeshSlice:
    """Equispaced slice over [domain_lo, domain_hi] with zero node velocities."""
    if domain_hi <= domain_lo:
        raise ValueError("domain_hi must exceed domain_lo")
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError(f"n_nodes must be odd and >= 3, got {n_nodes}")
    pos = np.linspace(domain_lo, domain_hi, n_nodes)
    return MeshSlice(time=time, node_positions=pos, node_velocities=np.zeros(n_nodes))


def fit_quadratic_trajectory(
    x0: float, x1: float, x2: float, eps: float
) -> NodeTrajectory:
    """Unique quadratic through (0, x0), (eps, x1), (1, x2) in normalized time."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    c2 = ((x2 - x0) - (x1 - x0) / eps) / (1.0 - eps)
    c1 = (x2 - x0) - c2
    return NodeTrajectory(c0=x0, c1=c1, c2=c2)


def partition_from_vertex_trajectories(
    t_start: float,
    dt: float,
    eps: float,
    vertex_trajectories: list[NodeTrajectory],
) -> TimePartition:
    """Assemble a partition from vertex paths; midpoint paths are vertex means."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    trajs: list[NodeTrajectory] = []
    for k, vt in enumerate(vertex_trajectories):
        trajs.append(vt)
        if k + 1 < len(vertex_trajectories):
            nxt = vertex_trajectories[k + 1]
            trajs.append(
                NodeTrajectory(
                    c0=0.5 * (vt.c0 + nxt.c0),
                    c1=0.5 * (vt.c1 + nxt.c1),
                    c2=0.5 * (vt.c2 + nxt.c2),
                )
            )
    return TimePartition(
        t_start=t_start, t_end=t_start + dt, eps=eps, trajectories=tuple(trajs)
    )


def static_partition(
    slice_: MeshSlice, t_start: float, dt: float, eps: float
) -> TimePartition:
    """Freeze the given slice geometry over [t_start, t_start+dt]."""
    trajs = tuple(NodeTrajectory(c0=x, c1=0.0, c2=0.0) for x in slice_.node_positions)
    return TimePartition(t_start=t_start, t_end=t_start + dt, eps=eps, trajectories=trajs)


def slice_at(partition: TimePartition, t: float) -> MeshSlice:
    """Evaluate the partition geometry at time t in [t_start, t_end]."""
    tol = 1e-12 * max(1.0, abs(partition.t_start), abs(partition.t_end))
    if t < partition.t_start - tol or t > partition.t_end + tol:
        raise ValueError(
            f"t={t} outside partition [{partition.t_start}, {partition.t_end}]"
        )
    s = min(max(partition.normalized(t), 0.0), 1.0)
    pos = partition.positions_at(s)
    vel = partition.velocities_at(s)
    return MeshSlice(time=t, node_positions=pos, node_velocities=vel)


def evolution_magnitude(partition: TimePartition, element: int, t: float) -> float:
    """|H_e(t)| from the 1D Jacobian identity J(t) = (1 + dt*H(t)) * J(t_start)."""
    start = slice_at(partition, partition.t_start)
    j0 = start.element_lengths[element]
    if j0 == 0.0:
        raise DegenerateMeshError("element has zero length at the partition start")
    now = slice_at(partition, t)
    ratio = now.element_lengths[element] / j0
    return abs((ratio - 1.0) / partition.dt)


def regularity_report(partition: TimePartition, n_samples: int = 11) -> RegularityReport:
    """Sample |H_e| and the element-size ratios over the slab.

    Degeneracy is reported through the flag rather than raised, so the report
    can be used to monitor partitions that are about to fail.
    """
    if n_samples < 3:
        raise ValueError("need at least 3 samples")
    svals = np.linspace(0.0, 1.0, n_samples)
    p0 = partition.positions_at(0.0)
    j0 = p0[2::2] - p0[0:-2:2]
    degenerate = bool(np.any(np.diff(p0) <= 0.0) or np.any(j0 == 0.0))
    mu_max = 0.0
    rmin, rmax = np.inf, -np.inf
    for s in svals:
        pos = partition.positions_at(s)
        if np.any(np.diff(pos) <= 0.0):
            degenerate = True
        if degenerate:
            continue
        ratio = (pos[2::2] - pos[0:-2:2]) / j0
        rmin = min(rmin, float(ratio.min()))
        rmax = max(rmax, float(ratio.max()))
        h = np.abs(ratio - 1.0) / partition.dt
        mu_max = max(mu_max, float(h.max()))
    if degenerate:
        return RegularityReport(
            mu_max=float("nan"), det_ratio_min=float("nan"),
            det_ratio_max=float("nan"), degenerate=True,
        )
    return RegularityReport(
        mu_max=mu_max, det_ratio_min=rmin, det_ratio_max=rmax, degenerate=False
    )


def shift_coefficients(
    coeffs: np.ndarray, from_slice: MeshSlice, to_slice: MeshSlice
) -> np.ndarray:
    """Re-anchor a coefficient vector onto another slice of the same partition.

    The shift keeps basis coefficients and swaps the basis functions under
    them, so numerically this is the identity; it exists to make the
    re-interpretation explicit where it matters semantically.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != from_slice.n_nodes or coeffs.size != to_slice.n_nodes:
        raise ValueError(
            f"coefficient/slice size mismatch: {coeffs.size}, "
            f"{from_slice.n_nodes}, {to_slice.n_nodes}"
        )
    return coeffs.copy()


def _locate(slice_: MeshSlice, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Element index and reference coordinate for points x (clamped to the domain)."""
    verts = slice_.vertex_positions
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(verts, x, side="right") - 1, 0, verts.size - 2)
    h = verts[idx + 1] - verts[idx]
    xhat = np.clip((x - verts[idx]) / h, 0.0, 1.0)
    return idx, xhat


def fe_eval(slice_: MeshSlice, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate the piecewise-quadratic function with the given nodal coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != slice_.n_nodes:
        raise ValueError("coefficient vector does not match slice")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    idx, xhat = _locate(slice_, np.atleast_1d(x))
    vals = lagrange2_values(xhat)
    out = (
        coeffs[2 * idx] * vals[0]
        + coeffs[2 * idx + 1] * vals[1]
        + coeffs[2 * idx + 2] * vals[2]
    )
    return float(out[0]) if scalar else out


def fe_eval_deriv(slice_: MeshSlice, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Spatial derivative of the piecewise-quadratic function at points x."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != slice_.n_nodes:
        raise ValueError("coefficient vector does not match slice")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    idx, xhat = _locate(slice_, np.atleast_1d(x))
    verts = slice_.vertex_positions
    h = verts[idx + 1] - verts[idx]
    ders = lagrange2_derivs(xhat)
    out = (
        coeffs[2 * idx] * ders[0]
        + coeffs[2 * idx + 1] * ders[1]
        + coeffs[2 * idx + 2] * ders[2]
    ) / h
    return float(out[0]) if scalar else out


def trajectory_rows(
    partitions: list[TimePartition], samples_per_partition: int = 5
) -> list[tuple[int, float, float]]:
    """(node_index, t, x) samples of every node path, for the mesh dump CSV."""
    if samples_per_partition < 2:
        raise ValueError("need at least 2 samples per partition")
    rows: list[tuple[int, float, float]] = []
    for part in partitions:
        for s in np.linspace(0.0, 1.0, samples_per_partition):
            t = part.t_start + s * part.dt
            for k, pos in enumerate(part.positions_at(s)):
                rows.append((k, float(t), float(pos)))
    return rows
