import numpy as np
import pytest

from movefem.assembly import (
    BandedMatrix,
    assemble_Atau,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    assemble_system,
    convection_matrix,
    fe_values_at_quadrature,
    quadrature_points,
    supg_test_shift,
    weighted_mass,
)
from movefem.errors import CoefficientValidityError
from movefem.mesh import MeshSlice, build_uniform_slice, fe_eval, fe_eval_deriv
from movefem.problems import problem_convection

from conftest import LinearProblem, slice_from_vertices


@pytest.mark.parametrize("h", [1.0, 0.35])
def test_single_element_mass(h):
    sl = build_uniform_slice(0.0, h, 3, 0.0)
    expected = (h / 30.0) * np.array([[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]])
    assert np.abs(assemble_mass(sl).to_dense() - expected).max() < 1e-13


@pytest.mark.parametrize("h", [1.0, 0.35])
def test_single_element_stiffness(h):
    sl = build_uniform_slice(0.0, h, 3, 0.0)
    expected = (1.0 / (3.0 * h)) * np.array(
        [[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]]
    )
    assert np.abs(assemble_stiffness(sl).to_dense() - expected).max() < 1e-13


def test_mass_row_sums_single_element():
    h = 0.8
    sl = build_uniform_slice(0.0, h, 3, 0.0)
    rows = assemble_mass(sl).to_dense().sum(axis=1)
    assert rows == pytest.approx([h / 6.0, 2.0 * h / 3.0, h / 6.0], abs=1e-14)


def test_mass_total_is_domain_length(rng):
    sl = slice_from_vertices(np.sort(np.concatenate([[-3.0, 3.0], rng.uniform(-3, 3, 7)])))
    ones = np.ones(sl.n_nodes)
    assert assemble_mass(sl).matvec(ones).sum() == pytest.approx(6.0, abs=1e-12)


def test_mass_spd(rng):
    for _ in range(5):
        sl = slice_from_vertices(
            np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0.05, 0.95, 6)]))
        )
        eigs = np.linalg.eigvalsh(assemble_mass(sl).to_dense())
        assert eigs.min() > 0.0


def test_atau_with_pure_reaction_equals_mass():
    sl = build_uniform_slice(-1.0, 2.0, 9, 0.0)
    problem = LinearProblem(
        a=lambda x, t: np.full_like(x, 1e-30),
        c=lambda x, t: np.ones_like(x),
    )
    diff = assemble_Atau(sl, problem, 0.0).to_dense() - assemble_mass(sl).to_dense()
    assert np.abs(diff).max() < 1e-12


def test_atau_annihilates_constants_without_reaction():
    sl = build_uniform_slice(-3.0, 3.0, 31, 0.0)
    problem = problem_convection()
    out = assemble_Atau(sl, problem, 0.3).matvec(np.ones(31))
    assert np.abs(out).max() < 1e-12


def test_atau_convection_cancellation():
    # b = 3 with mesh velocity 3 matches b = 0 with a static mesh.
    n = 21
    static = build_uniform_slice(-3.0, 3.0, n, 0.0)
    moving = MeshSlice(0.0, static.node_positions, np.full(n, 3.0))
    with_b = LinearProblem(b=lambda x, t: np.full_like(x, 3.0))
    without_b = LinearProblem()
    am = assemble_Atau(moving, with_b, 0.0)
    a0 = assemble_Atau(static, without_b, 0.0)
    assert np.abs(am.data - a0.data).max() < 1e-12


def test_atau_offset_invariance(rng):
    # Velocities v against b are the same as a static mesh against b - v,
    # with v interpolated linearly from the vertex values.
    base = build_uniform_slice(-3.0, 3.0, 41, 0.0)
    vel = 0.4 * np.sin(base.node_positions)
    vel[1::2] = 0.5 * (vel[0:-2:2] + vel[2::2])
    moving = MeshSlice(0.0, base.node_positions, vel)
    b_field = lambda x, t: np.cos(x)
    offset_b = lambda x, t: np.cos(x) - np.interp(
        x, base.node_positions[0::2], vel[0::2]
    )
    am = assemble_Atau(moving, LinearProblem(b=b_field), 0.0)
    a0 = assemble_Atau(base, LinearProblem(b=offset_b), 0.0)
    assert np.abs(am.data - a0.data).max() < 1e-12


def test_atau_symmetric_without_convection(rng):
    sl = slice_from_vertices(np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0.1, 0.9, 5)])))
    problem = LinearProblem(
        a=lambda x, t: 1.0 + 0.5 * np.sin(3.0 * x),
        c=lambda x, t: 0.3 + x * x,
    )
    dense = assemble_Atau(sl, problem, 0.0).to_dense()
    assert np.abs(dense - dense.T).max() < 1e-12


def test_atau_rejects_nonpositive_diffusion():
    sl = build_uniform_slice(-3.0, 3.0, 11, 0.0)
    problem = LinearProblem(a=lambda x, t: x)  # negative on half the domain
    with pytest.raises(CoefficientValidityError):
        assemble_Atau(sl, problem, 0.0)


class TestLoad:
    def test_zero(self):
        sl = build_uniform_slice(0.0, 1.0, 9, 0.0)
        assert np.abs(assemble_load(sl, LinearProblem(), 0.0)).max() == 0.0

    def test_unit_source_single_element(self):
        h = 0.6
        sl = build_uniform_slice(0.0, h, 3, 0.0)
        problem = LinearProblem(f=lambda x, t: np.ones_like(x))
        load = assemble_load(sl, problem, 0.0)
        assert load == pytest.approx([h / 6.0, 2.0 * h / 3.0, h / 6.0], abs=1e-14)

    def test_neumann_endpoints(self):
        sl = build_uniform_slice(0.0, 1.0, 7, 0.0)
        problem = LinearProblem(g_left=lambda t: 2.0, g_right=lambda t: 3.0)
        load = assemble_load(sl, problem, 0.0)
        assert load[0] == pytest.approx(2.0)
        assert load[-1] == pytest.approx(3.0)
        assert np.abs(load[1:-1]).max() == 0.0

    def test_manufactured_flux_value(self):
        # The convection problem's right flux at t = 0 is a u_x n = 0.01 * (-6 e^-9).
        problem = problem_convection()
        sl = build_uniform_slice(-3.0, 3.0, 5, 0.0)
        load = assemble_load(sl, problem, 0.0)
        f_part = assemble_load(sl, LinearProblem(f=problem.f), 0.0)
        assert load[-1] - f_part[-1] == pytest.approx(0.01 * (-6.0 * np.exp(-9.0)), rel=1e-12)


class TestSupg:
    def test_zero_delta_is_noop(self):
        sl = build_uniform_slice(-3.0, 3.0, 11, 0.0)
        mat, load = supg_test_shift(sl, problem_convection(), 0.0, 0.0)
        assert np.abs(mat.data).max() == 0.0
        assert np.abs(load).max() == 0.0

    def test_aligned_velocity_kills_perturbation(self):
        n = 11
        base = build_uniform_slice(-3.0, 3.0, n, 0.0)
        moving = MeshSlice(0.0, base.node_positions, np.full(n, 3.0))
        problem = LinearProblem(
            b=lambda x, t: np.full_like(x, 3.0),
            f=lambda x, t: np.ones_like(x),
        )
        mat, load = supg_test_shift(moving, problem, 0.0, 0.1)
        assert np.abs(mat.data).max() < 1e-13
        assert np.abs(load).max() < 1e-13

    def test_static_convection_shift_shape(self):
        sl = build_uniform_slice(0.0, 1.0, 9, 0.0)
        # Convection block alone: delta b^2 int phi' phi' has a positive diagonal.
        conv_only = LinearProblem(
            a=lambda x, t: np.full_like(x, 1e-30),
            b=lambda x, t: np.full_like(x, 3.0),
        )
        mat, _ = supg_test_shift(sl, conv_only, 0.0, 0.1)
        assert mat.to_dense().diagonal().min() > 0.0
        # With diffusion present the perturbed operator is asymmetric.
        full = LinearProblem(b=lambda x, t: np.full_like(x, 3.0))
        mat2, _ = supg_test_shift(sl, full, 0.0, 0.1)
        dense = mat2.to_dense()
        assert np.abs(dense - dense.T).max() > 1e-8

    def test_negative_delta_rejected(self):
        sl = build_uniform_slice(0.0, 1.0, 5, 0.0)
        with pytest.raises(ValueError):
            supg_test_shift(sl, problem_convection(), 0.0, -0.1)


class TestBandedMatrix:
    def test_matvec_solve_roundtrip(self, rng):
        sl = slice_from_vertices(np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0.1, 0.9, 6)])))
        mat = assemble_mass(sl) + assemble_stiffness(sl)
        x = rng.normal(size=sl.n_nodes)
        assert np.abs(mat.solve(mat.matvec(x)) - x).max() < 1e-10

    def test_matvec_matches_dense(self, rng):
        mat = BandedMatrix(8, rng.normal(size=(5, 8)))
        v = rng.normal(size=8)
        assert np.abs(mat.matvec(v) - mat.to_dense() @ v).max() < 1e-13

    def test_norm_inf_matches_dense(self, rng):
        mat = BandedMatrix(8, rng.normal(size=(5, 8)))
        assert mat.norm_inf() == pytest.approx(
            np.abs(mat.to_dense()).sum(axis=1).max(), abs=1e-13
        )

    def test_structural_band(self):
        sl = build_uniform_slice(0.0, 1.0, 9, 0.0)
        dense = assemble_mass(sl).to_dense()
        for i in range(9):
            for j in range(9):
                if abs(i - j) > 2:
                    assert dense[i, j] == 0.0


def test_assemble_system_bundle():
    problem = problem_convection()
    sl = build_uniform_slice(-3.0, 3.0, 21, 0.0)
    system = assemble_system(sl, problem, 0.25)
    assert system.slice_time == 0.25
    assert system.mass.n == sl.n_nodes == system.stiffness.n == system.load.size
    assert np.linalg.eigvalsh(system.mass.to_dense()).min() > 0.0
    # SUPG variant folds the perturbation into stiffness and load.
    perturbed = assemble_system(sl, problem, 0.25, supg_delta=0.1)
    assert np.abs(perturbed.stiffness.data - system.stiffness.data).max() > 0.0
    assert np.abs(perturbed.mass.data - system.mass.data).max() == 0.0


def test_fe_values_at_quadrature(rng):
    sl = slice_from_vertices(np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0.1, 0.9, 4)])))
    coeffs = rng.normal(size=sl.n_nodes)
    vals, ders = fe_values_at_quadrature(sl, coeffs)
    xq = quadrature_points(sl)
    assert np.abs(vals - fe_eval(sl, coeffs, xq.ravel()).reshape(xq.shape)).max() < 1e-13
    assert np.abs(ders - fe_eval_deriv(sl, coeffs, xq.ravel()).reshape(xq.shape)).max() < 1e-11


def test_convection_and_weighted_mass_blocks(rng):
    sl = build_uniform_slice(0.0, 1.0, 7, 0.0)
    xq = quadrature_points(sl)
    field = np.cos(xq)
    conv = convection_matrix(sl, field).to_dense()
    wmass = weighted_mass(sl, field).to_dense()
    # Constants are annihilated by the convection block and reproduced by the
    # weighted mass against the partition of unity.
    ones = np.ones(7)
    assert np.abs(conv @ ones).max() < 1e-13
    assert (ones @ wmass @ ones) == pytest.approx(np.sin(1.0), abs=1e-9)
