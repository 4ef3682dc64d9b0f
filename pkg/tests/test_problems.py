import numpy as np
import pytest

from movefem.problems import (
    by_name,
    manufactured_source,
    problem_burgers,
    problem_convection,
    problem_diffusion,
)


def strong_form_residual_fd(problem, x, t, h=1e-4):
    """Central-difference evaluation of u_t - (a u_x)_x + b u_x + c u."""
    u = problem.u_exact
    u_t = (u(x, t + h) - u(x, t - h)) / (2.0 * h)

    def flux(y):
        u_x = (u(y + h, t) - u(y - h, t)) / (2.0 * h)
        return problem.a(y, t) * u_x

    flux_x = (flux(x + h) - flux(x - h)) / (2.0 * h)
    u_x = (u(x + h, t) - u(x - h, t)) / (2.0 * h)
    return u_t - flux_x + problem.b(x, t) * u_x + problem.c(x, t) * u(x, t)


class TestConvectionProblem:
    def test_source_at_moving_peak(self):
        p = problem_convection()
        for t in (0.0, 0.25, 0.8):
            assert manufactured_source(p, np.array(3.0 * t), t) == pytest.approx(
                0.02, abs=1e-14
            )

    def test_exact_at_origin(self):
        p = problem_convection()
        assert p.u_exact(np.array(0.0), 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_right_flux(self):
        p = problem_convection()
        assert p.g_right(0.0) == pytest.approx(0.01 * (-6.0 * np.exp(-9.0)), rel=1e-13)

    def test_positive_diffusion(self):
        p = problem_convection()
        x = np.linspace(-3.0, 3.0, 11)
        assert np.all(p.a(x, 0.5) > 0.0)


class TestDiffusionProblem:
    def test_source_at_origin(self):
        p = problem_diffusion()
        assert manufactured_source(p, np.array(0.0), 0.0) == pytest.approx(
            5.0 * np.pi / 6.0, rel=1e-14
        )

    def test_exact_zero_crossing(self):
        p = problem_diffusion()
        assert p.u_exact(np.array(1.0), 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_diffusion_floor(self):
        p = problem_diffusion()
        assert p.a(np.array(0.0), 0.0) == pytest.approx(0.1, abs=1e-15)


class TestBurgersProblem:
    def test_front_profile(self):
        p = problem_burgers(100.0)
        assert p.u_initial(np.array(-3.0)) == pytest.approx(1.0, abs=1e-9)
        assert p.u_initial(np.array(3.0)) == pytest.approx(0.0, abs=1e-9)
        assert p.u_initial(np.array(0.0)) == pytest.approx(0.5, abs=1e-15)

    def test_reynolds_scaling(self):
        p = problem_burgers(100.0)
        assert p.a(np.array(0.0), 0.0) == pytest.approx(0.01, abs=1e-15)

    def test_homogeneous(self):
        p = problem_burgers(100.0)
        x = np.linspace(-3.0, 3.0, 7)
        assert np.abs(p.f(x, 1.0)).max() == 0.0
        assert p.g_left(0.3) == 0.0 and p.g_right(0.3) == 0.0
        assert p.nonlinear

    def test_bad_reynolds(self):
        with pytest.raises(ValueError):
            problem_burgers(0.0)

    def test_no_exact_solution(self):
        with pytest.raises(ValueError):
            manufactured_source(problem_burgers(100.0), np.array(0.0), 0.0)


@pytest.mark.parametrize("factory", [problem_convection, problem_diffusion])
class TestManufacturedConsistency:
    def test_source_matches_fd_residual(self, factory, rng):
        p = factory()
        x = rng.uniform(-3.0, 3.0, size=1000)
        t = rng.uniform(0.05, 0.95, size=1000)
        for xi, ti in zip(x[:100], t[:100]):
            fd = strong_form_residual_fd(p, np.array(xi), float(ti))
            closed = manufactured_source(p, np.array(xi), float(ti))
            assert abs(fd - closed) < 1e-6

    def test_exact_solves_pde(self, factory, rng):
        p = factory()
        x = rng.uniform(-2.9, 2.9, size=1000)
        t = rng.uniform(0.05, 0.95, size=1000)
        fd = strong_form_residual_fd(p, x, 0.5)  # vectorized at one time
        closed = p.f(x, 0.5)
        assert np.abs(fd - closed).max() < 1e-6
        for xi, ti in zip(x[:50], t[:50]):
            assert abs(
                strong_form_residual_fd(p, np.array(xi), float(ti))
                - p.f(np.array(xi), float(ti))
            ) < 1e-6

    def test_initial_condition_consistency(self, factory):
        p = factory()
        x = np.linspace(-3.0, 3.0, 101)
        assert np.abs(p.u_initial(x) - p.u_exact(x, 0.0)).max() < 1e-14

    def test_flux_consistency(self, factory, rng):
        p = factory()
        for t in rng.uniform(0.0, 1.0, size=10):
            t = float(t)
            left = p.a(np.array(-3.0), t) * p.u_exact_x(np.array(-3.0), t) * (-1.0)
            right = p.a(np.array(3.0), t) * p.u_exact_x(np.array(3.0), t) * (+1.0)
            assert p.g_left(t) == pytest.approx(float(left), rel=1e-12, abs=1e-15)
            assert p.g_right(t) == pytest.approx(float(right), rel=1e-12, abs=1e-15)


def test_by_name():
    assert by_name("conv1").name == "conv1"
    assert by_name("diff2").name == "diff2"
    assert by_name("burgers", reynolds=1000.0).a(np.array(0.0), 0.0) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        by_name("poisson")
