import numpy as np
import pytest

import movefem.harness as harness
from movefem.errors import DegenerateMeshError
from movefem.harness import (
    RESULTS_HEADER,
    RunConfig,
    fmt,
    run_comparison_table,
    run_convergence,
    run_single,
)
from movefem.motion import MotionKind


class TestRunConfig:
    def test_even_n_rejected(self):
        with pytest.raises(ValueError):
            RunConfig(problem="conv1", n=100, m=10)

    def test_zero_m_rejected(self):
        with pytest.raises(ValueError):
            RunConfig(problem="conv1", n=101, m=0)

    def test_reset_defaults(self):
        char = RunConfig(problem="conv1", n=101, m=10, motion=MotionKind.CHARACTERISTICS)
        solvel = RunConfig(problem="burgers", n=61, m=25, motion=MotionKind.SOLUTION_VELOCITY)
        assert char.resolved_reset() is True
        assert solvel.resolved_reset() is False


class TestRunSingle:
    def test_static_smoke(self):
        res = run_single(RunConfig(problem="conv1", n=101, m=10))
        assert res.ok
        assert np.isfinite(res.record.l2_final) and res.record.l2_final > 0.0
        assert np.isfinite(res.record.h1_final)
        assert res.record.cpu_seconds > 0.0

    def test_determinism(self):
        cfg = dict(problem="conv1", n=101, m=10, motion=MotionKind.CHARACTERISTICS)
        a = run_single(RunConfig(**cfg))
        b = run_single(RunConfig(**cfg))
        assert a.record.l2_final == b.record.l2_final
        assert a.record.h1_final == b.record.h1_final
        assert np.array_equal(a.final_coefficients, b.final_coefficients)

    def test_burgers_has_no_error_norms(self):
        res = run_single(
            RunConfig(problem="burgers", n=61, m=5, motion=MotionKind.STATIC)
        )
        assert res.ok
        assert np.isnan(res.record.l2_final)

    def test_characteristics_on_burgers_rejected(self):
        with pytest.raises(ValueError):
            run_single(
                RunConfig(problem="burgers", n=61, m=5, motion=MotionKind.CHARACTERISTICS)
            )

    def test_solution_dump_rows(self):
        res = run_single(
            RunConfig(problem="conv1", n=11, m=2, collect_solution=True,
                      collect_mesh=True, mesh_samples_per_partition=3)
        )
        csv = res.solution_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "t,x,u"
        # initial snapshot plus one per slab end
        assert len(lines) == 1 + 11 * 3
        mesh_lines = res.mesh_csv().strip().split("\n")
        assert mesh_lines[0] == "node_index,t,x"
        assert len(mesh_lines) == 1 + 2 * 3 * 11

    def test_energy_diagnostic(self):
        res = run_single(
            RunConfig(problem="diff2", n=41, m=4, motion=MotionKind.CHARACTERISTICS,
                      compute_energy=True)
        )
        assert res.ok
        assert res.record.energy is not None and res.record.energy > 0.0


class TestComparisonTable:
    def test_single_cell_matches_run_single(self):
        table = run_comparison_table("diff2", [101], [10])
        row = table.rows[0]
        moving = run_single(
            RunConfig(problem="diff2", n=101, m=10, motion=MotionKind.CHARACTERISTICS)
        )
        static = run_single(RunConfig(problem="diff2", n=101, m=10))
        assert row.l2_moving == pytest.approx(moving.record.l2_final, rel=1e-12)
        assert row.l2_static == pytest.approx(static.record.l2_final, rel=1e-12)
        assert row.ratio == pytest.approx(
            moving.record.l2_final / static.record.l2_final, rel=1e-12
        )

    def test_emitted_ratio_consistent_with_columns(self):
        table = run_comparison_table("diff2", [41], [5])
        lines = table.grid_csv().strip().split("\n")
        header = lines[0].split(",")
        vals = dict(zip(header, lines[1].split(",")))
        ratio = float(vals["ratio"])
        quotient = float(vals["l2_moving"]) / float(vals["l2_static"])
        assert ratio == pytest.approx(quotient, rel=1e-11)

    def test_results_csv_header(self):
        table = run_comparison_table("diff2", [41], [5])
        assert table.results_csv().startswith(RESULTS_HEADER + "\n")
        row = table.results_csv().strip().split("\n")[1].split(",")
        assert len(row) == len(RESULTS_HEADER.split(","))

    def test_failed_cell_marked(self, monkeypatch):
        calls = {"count": 0}
        real = harness.run_single

        def flaky(config):
            calls["count"] += 1
            if config.n == 41 and config.motion is not MotionKind.STATIC:
                raise DegenerateMeshError("synthetic failure")
            return real(config)

        monkeypatch.setattr(harness, "run_single", flaky)
        table = run_comparison_table("diff2", [41, 61], [5])
        failed = [r for r in table.rows if r.failure is not None]
        good = [r for r in table.rows if r.failure is None]
        assert len(failed) == 1 and failed[0].n == 41
        assert len(good) == 1 and np.isfinite(good[0].ratio)
        assert "failed:" in table.grid_csv()

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            run_comparison_table("diff2", [], [10])


class TestConvergenceRunner:
    def test_bad_axis(self):
        with pytest.raises(ValueError):
            run_convergence("diff2", "spacetime")

    def test_burgers_rejected(self):
        with pytest.raises(ValueError):
            run_convergence("burgers", "time")


class TestFormatting:
    def test_twelve_significant_digits(self):
        assert fmt(1.0 / 3.0) == "0.333333333333"
        assert fmt(None) == ""
        assert fmt(float("nan")) == ""

    def test_results_header_fields(self):
        assert RESULTS_HEADER.split(",") == [
            "problem", "n", "m", "motion", "transfer", "eps", "supg",
            "l2_moving_or_value", "l2_static", "ratio", "cpu_moving", "cpu_static",
        ]
