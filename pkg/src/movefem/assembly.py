"""Galerkin assembly on a mesh slice.

Quadratic elements in 1D couple each degree of freedom with at most two
neighbors on either side, so all operators are pentadiagonal and stored in
LAPACK band layout.  The bilinear form combines diffusion, effective
convection (physical velocity minus mesh velocity) and reaction:

    A[j, k] = int a u_x chi_x + (b - x_t) u_x chi + c u chi dx,
    row j = test function, column k = trial function.

Mesh velocity inside an element is the linear interpolant of the two vertex
velocities, which is exactly the velocity field of the affine element map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import (
    LAGRANGE2_SECOND_DERIV,
    gauss_legendre,
    lagrange2_derivs,
    lagrange2_values,
)
from .errors import CoefficientValidityError, SolverFailure
from .mesh import MeshSlice

__all__ = [
    "BandedMatrix",
    "AssembledSystem",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_Atau",
    "assemble_load",
    "assemble_system",
    "supg_test_shift",
    "convection_matrix",
    "weighted_mass",
]

_QUAD = gauss_legendre(5)
_N = lagrange2_values(_QUAD.points)      # (3, nq)
_DN = lagrange2_derivs(_QUAD.points)     # (3, nq)
_W = _QUAD.weights


class BandedMatrix:
    """Pentadiagonal matrix in LAPACK band storage (kl = ku = 2).

    ``data[2 + i - j, j]`` holds entry (i, j); rows outside the band are
    structurally zero.
    """

    bandwidth = 2

    def __init__(self, n: int, data: np.ndarray | None = None):
        self.n = n
        self.data = np.zeros((5, n)) if data is None else data

    def copy(self) -> "BandedMatrix":
        return BandedMatrix(self.n, self.data.copy())

    def scaled(self, alpha: float) -> "BandedMatrix":
        return BandedMatrix(self.n, alpha * self.data)

    def __add__(self, other: "BandedMatrix") -> "BandedMatrix":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return BandedMatrix(self.n, self.data + other.data)

    def __sub__(self, other: "BandedMatrix") -> "BandedMatrix":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return BandedMatrix(self.n, self.data - other.data)

    def add_local_blocks(self, local: np.ndarray) -> None:
        """Scatter per-element 3x3 blocks; local has shape (n_elements, 3, 3)."""
        ne = local.shape[0]
        base = 2 * np.arange(ne)
        for j in range(3):
            for k in range(3):
                np.add.at(self.data[2 + j - k], base + k, local[:, j, k])

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.data[2] * v
        for off in (1, 2):
            out[:-off] += self.data[2 - off, off:] * v[off:]      # entries (i, i+off)
            out[off:] += self.data[2 + off, :-off] * v[:-off]     # entries (i, i-off)
        return out

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        try:
            return scipy.linalg.solve_banded((2, 2), self.data, rhs)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SolverFailure(f"banded solve failed: {exc}") from exc

    def to_dense(self) -> np.ndarray:
        full = np.zeros((self.n, self.n))
        for off in range(-2, 3):
            d = np.diagonal(full, off)
            d.setflags(write=True)
            if off >= 0:
                d[:] = self.data[2 - off, off : off + d.size]
            else:
                d[:] = self.data[2 - off, : d.size]
        return full

    def norm_inf(self) -> float:
        """Maximum absolute row sum, computed from the band storage."""
        acc = np.zeros(self.n)
        a = np.abs(self.data)
        acc += a[2]
        for off in (1, 2):
            acc[: self.n - off] += a[2 - off, off:]   # entry (i, i+off)
            acc[off:] += a[2 + off, : self.n - off]   # entry (i, i-off)
        return float(acc.max())


@dataclass
class AssembledSystem:
    """Mass, moving-frame stiffness and load of one slice at one time."""

    mass: BandedMatrix
    stiffness: BandedMatrix
    load: np.ndarray
    slice_time: float


@dataclass
class _Geometry:
    lengths: np.ndarray   # (ne,)
    xq: np.ndarray        # (ne, nq) physical quadrature points
    xtq: np.ndarray       # (ne, nq) mesh velocity at quadrature points


def _geometry(slice_: MeshSlice) -> _Geometry:
    verts = slice_.vertex_positions
    left, right = verts[:-1], verts[1:]
    h = right - left
    xq = left[:, None] + np.outer(h, _QUAD.points)
    vverts = slice_.node_velocities[0::2]
    vl, vr = vverts[:-1], vverts[1:]
    xtq = vl[:, None] + np.outer(vr - vl, _QUAD.points)
    return _Geometry(lengths=h, xq=xq, xtq=xtq)


def _eval_coeff(fn, x: np.ndarray, t: float) -> np.ndarray:
    vals = fn(x, t)
    return np.broadcast_to(np.asarray(vals, dtype=float), x.shape)


def _assemble_bilinear(
    slice_: MeshSlice,
    a_vals: np.ndarray | None,
    conv_vals: np.ndarray | None,
    react_vals: np.ndarray | None,
) -> BandedMatrix:
    geo = _geometry(slice_)
    ne = geo.lengths.size
    local = np.zeros((ne, 3, 3))
    if a_vals is not None:
        wa = (_W[None, :] * a_vals) / geo.lengths[:, None]
        local += np.einsum("eq,jq,kq->ejk", wa, _DN, _DN)
    if conv_vals is not None:
        wc = _W[None, :] * conv_vals
        local += np.einsum("eq,jq,kq->ejk", wc, _N, _DN)
    if react_vals is not None:
        wr = (_W[None, :] * react_vals) * geo.lengths[:, None]
        local += np.einsum("eq,jq,kq->ejk", wr, _N, _N)
    mat = BandedMatrix(slice_.n_nodes)
    mat.add_local_blocks(local)
    return mat


def assemble_mass(slice_: MeshSlice) -> BandedMatrix:
    """Mass matrix M[j, k] = int phi_j phi_k dx (symmetric positive definite)."""
    ones = np.ones((slice_.n_elements, _QUAD.points.size))
    return _assemble_bilinear(slice_, None, None, ones)


def assemble_stiffness(slice_: MeshSlice) -> BandedMatrix:
    """Unit-coefficient stiffness K[j, k] = int phi_j' phi_k' dx."""
    ones = np.ones((slice_.n_elements, _QUAD.points.size))
    return _assemble_bilinear(slice_, ones, None, None)


def assemble_Atau(slice_: MeshSlice, problem, t: float) -> BandedMatrix:
    """The moving-frame bilinear form with convection offset by the mesh velocity."""
    geo = _geometry(slice_)
    a_vals = _eval_coeff(problem.a, geo.xq, t)
    if np.any(a_vals <= 0.0):
        raise CoefficientValidityError(
            f"diffusion coefficient not positive at t={t}"
        )
    conv_vals = _eval_coeff(problem.b, geo.xq, t) - geo.xtq
    react_vals = _eval_coeff(problem.c, geo.xq, t)
    return _assemble_bilinear(slice_, a_vals, conv_vals, react_vals)


def assemble_load(slice_: MeshSlice, problem, t: float) -> np.ndarray:
    """Source integrals plus the endpoint Neumann flux contributions."""
    geo = _geometry(slice_)
    f_vals = _eval_coeff(problem.f, geo.xq, t)
    wf = (_W[None, :] * f_vals) * geo.lengths[:, None]
    local = np.einsum("eq,jq->ej", wf, _N)
    load = np.zeros(slice_.n_nodes)
    base = 2 * np.arange(geo.lengths.size)
    for j in range(3):
        np.add.at(load, base + j, local[:, j])
    load[0] += problem.g_left(t)
    load[-1] += problem.g_right(t)
    return load


def assemble_system(
    slice_: MeshSlice, problem, t: float, supg_delta: float = 0.0
) -> AssembledSystem:
    """All stage operators of one slice, with the optional upwind perturbation."""
    mass = assemble_mass(slice_)
    stiffness = assemble_Atau(slice_, problem, t)
    load = assemble_load(slice_, problem, t)
    if supg_delta > 0.0:
        pert, pert_load = supg_test_shift(slice_, problem, t, supg_delta)
        stiffness = stiffness + pert
        load = load + pert_load
    return AssembledSystem(mass=mass, stiffness=stiffness, load=load, slice_time=t)


def convection_matrix(slice_: MeshSlice, field_vals: np.ndarray) -> BandedMatrix:
    """B[j, k] = int v(x) phi_k' phi_j dx for a field given at quadrature points."""
    return _assemble_bilinear(slice_, None, field_vals, None)


def weighted_mass(slice_: MeshSlice, weight_vals: np.ndarray) -> BandedMatrix:
    """C[j, k] = int w(x) phi_k phi_j dx for a weight given at quadrature points."""
    return _assemble_bilinear(slice_, None, None, weight_vals)


def quadrature_points(slice_: MeshSlice) -> np.ndarray:
    """Physical quadrature points, shape (n_elements, 5)."""
    return _geometry(slice_).xq


def fe_values_at_quadrature(
    slice_: MeshSlice, coeffs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Values and x-derivatives of an FE coefficient vector at the quadrature points."""
    coeffs = np.asarray(coeffs, dtype=float)
    ne = slice_.n_elements
    base = 2 * np.arange(ne)
    local = np.stack([coeffs[base], coeffs[base + 1], coeffs[base + 2]], axis=1)
    vals = np.einsum("ej,jq->eq", local, _N)
    ders = np.einsum("ej,jq->eq", local, _DN) / slice_.element_lengths[:, None]
    return vals, ders


def mesh_velocity_at_quadrature(slice_: MeshSlice) -> np.ndarray:
    """Mesh velocity at the quadrature points, shape (n_elements, 5)."""
    return _geometry(slice_).xtq


def _problem_ax(problem, x: np.ndarray, t: float) -> np.ndarray:
    ax = getattr(problem, "a_x", None)
    if ax is not None:
        return _eval_coeff(ax, x, t)
    delta = 1e-6
    return (_eval_coeff(problem.a, x + delta, t) - _eval_coeff(problem.a, x - delta, t)) / (
        2.0 * delta
    )


def supg_test_shift(
    slice_: MeshSlice,
    problem,
    t: float,
    delta: float,
    conv_field: np.ndarray | None = None,
) -> tuple[BandedMatrix, np.ndarray]:
    """Streamline-upwind perturbation from the test shift chi -> chi + delta*(b-x_t)*chi_x.

    Returns the matrix and load increments (already scaled by delta) that the
    shifted test function adds when applied to the strong spatial residual:
    effective convection, both parts of the divergence-form diffusion (the
    second-derivative part is constant per quadratic element) and reaction on
    the matrix side, the source on the load side.

    ``conv_field`` overrides the effective convection (b - x_t) at the
    quadrature points; the nonlinear stages pass the frozen predictor here.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    geo = _geometry(slice_)
    ne = geo.lengths.size
    if conv_field is None:
        conv_field = _eval_coeff(problem.b, geo.xq, t) - geo.xtq
    a_vals = _eval_coeff(problem.a, geo.xq, t)
    ax_vals = _problem_ax(problem, geo.xq, t)
    c_vals = _eval_coeff(problem.c, geo.xq, t)
    f_vals = _eval_coeff(problem.f, geo.xq, t)

    # Test part delta * tau * phi_j' with tau = effective convection; the 1/h of
    # the test derivative cancels the h of the volume element.
    test = delta * (_W[None, :] * conv_field)   # (ne, nq), includes w_q
    local = np.zeros((ne, 3, 3))
    # First-order trial terms: (tau - a_x) u_x, derivative brings another 1/h.
    first = (conv_field - ax_vals) / geo.lengths[:, None]
    local += np.einsum("eq,jq,kq->ejk", test * first, _DN, _DN)
    # Second-derivative trial term: -a u_xx, with phi'' constant per element.
    curv = np.einsum("eq,jq->ej", test * (-a_vals) / geo.lengths[:, None] ** 2, _DN)
    local += curv[:, :, None] * LAGRANGE2_SECOND_DERIV[None, None, :]
    # Reaction trial term: c u.
    local += np.einsum("eq,jq,kq->ejk", test * c_vals, _DN, _N)

    mat = BandedMatrix(slice_.n_nodes)
    mat.add_local_blocks(local)

    load_local = np.einsum("eq,jq->ej", test * f_vals, _DN)
    load = np.zeros(slice_.n_nodes)
    base = 2 * np.arange(ne)
    for j in range(3):
        np.add.at(load, base + j, load_local[:, j])
    return mat, load
