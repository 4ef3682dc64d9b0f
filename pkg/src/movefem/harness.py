"""Experiment driver: single solves, moving-vs-static comparison tables,
convergence sweeps and the Burgers shock suite.

Everything here is pure computation returning records and CSV payloads;
file and transport concerns live with the callers (HTTP service, CLI).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateMeshError, InvalidStateError, SolverFailure
from .mesh import MeshSlice, build_uniform_slice, fe_eval, fe_eval_deriv, slice_at, trajectory_rows
from .motion import MotionKind, MotionPolicy, generate_partition, reconfigure_between_partitions
from .norms import ErrorRecord, convergence_rate, energy_seminorm, h1_seminorm_error, l2_error, overshoot_metric
from .problems import ProblemSpec, by_name
from .timestepper import (
    RICHARDSON_EPS,
    FEFunction,
    StepperConfig,
    TransferMode,
    advance_partition,
)

__all__ = [
    "RunConfig",
    "RunResult",
    "TableRow",
    "TableResult",
    "ConvergenceResult",
    "BurgersSuiteResult",
    "run_single",
    "run_comparison_table",
    "run_convergence",
    "run_burgers_suite",
    "results_csv_header",
    "fmt",
]

RESULTS_HEADER = (
    "problem,n,m,motion,transfer,eps,supg,"
    "l2_moving_or_value,l2_static,ratio,cpu_moving,cpu_static"
)


def fmt(value: float | None) -> str:
    """CSV number rendering at 12 significant digits; empty for missing."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), ".12g")


def results_csv_header() -> str:
    return RESULTS_HEADER


@dataclass
class RunConfig:
    problem: str
    n: int
    m: int
    motion: MotionKind = MotionKind.STATIC
    transfer: TransferMode = TransferMode.INTERPOLATE
    eps: float = RICHARDSON_EPS
    supg_delta: float = 0.0
    reynolds: float = 100.0
    uniform_reset: Optional[bool] = None
    compute_energy: bool = False
    collect_solution: bool = False
    collect_mesh: bool = False
    mesh_samples_per_partition: int = 5

    def __post_init__(self):
        if self.n < 5 or self.n % 2 == 0:
            raise ValueError(f"n must be odd and >= 5, got {self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.supg_delta < 0.0:
            raise ValueError("supg must be nonnegative")

    def resolved_reset(self) -> bool:
        # The linear experiments restart every slab from a uniform mesh; the
        # Burgers runs let nodes accumulate at the front instead.
        if self.uniform_reset is None:
            return self.motion is MotionKind.CHARACTERISTICS
        return self.uniform_reset


@dataclass
class RunResult:
    record: ErrorRecord
    final_positions: np.ndarray
    final_coefficients: np.ndarray
    solution_rows: list[tuple[float, float, float]] = field(default_factory=list)
    mesh_rows: list[tuple[int, float, float]] = field(default_factory=list)
    failed_partition: Optional[int] = None
    failure_reason: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failed_partition is None

    def solution_csv(self) -> str:
        lines = ["t,x,u"]
        lines += [f"{fmt(t)},{fmt(x)},{fmt(u)}" for t, x, u in self.solution_rows]
        return "\n".join(lines) + "\n"

    def mesh_csv(self) -> str:
        lines = ["node_index,t,x"]
        lines += [f"{k},{fmt(t)},{fmt(x)}" for k, t, x in self.mesh_rows]
        return "\n".join(lines) + "\n"


def _interpolate_initial(problem: ProblemSpec, slice_: MeshSlice) -> np.ndarray:
    return np.asarray(problem.u_initial(slice_.node_positions), dtype=float)


def run_single(config: RunConfig) -> RunResult:
    """Integrate one configuration over m uniform slabs and measure final errors."""
    problem = by_name(config.problem, config.reynolds)
    if problem.nonlinear and config.motion is MotionKind.CHARACTERISTICS:
        raise ValueError("characteristics motion is undefined for Burgers; use solvel")
    lo, hi = problem.domain
    dt = problem.t_final / config.m
    node_spacing = (hi - lo) / (config.n - 1)
    element_ref = (hi - lo) / ((config.n - 1) // 2)
    separation_floor = 0.1 * node_spacing
    policy = MotionPolicy(kind=config.motion, uniform_reset=config.resolved_reset())
    stepcfg = StepperConfig(
        eps=config.eps, transfer=config.transfer, supg_delta=config.supg_delta
    )

    t_begin = time.perf_counter()
    current = build_uniform_slice(lo, hi, config.n, 0.0)
    coeffs = _interpolate_initial(problem, current)

    solution_rows: list[tuple[float, float, float]] = []
    mesh_rows: list[tuple[int, float, float]] = []
    error_functions: list[FEFunction] = []
    if config.collect_solution:
        solution_rows += [
            (0.0, float(x), float(u))
            for x, u in zip(current.node_positions, coeffs)
        ]

    failed_at: Optional[int] = None
    reason: Optional[str] = None
    for i in range(config.m):
        t0 = i * dt
        try:
            start = current
            if policy.kind is not MotionKind.STATIC:
                start = reconfigure_between_partitions(
                    current, policy, element_ref, reset_n_nodes=config.n
                )
            u_prev_eval: Callable[[np.ndarray], np.ndarray] = (
                lambda xs, s=current, c=coeffs: fe_eval(s, c, xs)
            )
            start, partition = generate_partition(
                start, policy, problem, u_prev_eval, t0, dt, config.eps,
                separation_floor,
            )
            fef = advance_partition(coeffs, current, partition, problem, stepcfg)
        except (DegenerateMeshError, SolverFailure, InvalidStateError) as exc:
            failed_at, reason = i, str(exc)
            break
        if config.collect_mesh:
            mesh_rows += trajectory_rows([partition], config.mesh_samples_per_partition)
        if config.compute_energy and problem.u_exact is not None:
            errs = []
            for bt, u_num in zip(partition.basis_times, (fef.u0, fef.u1, fef.u2)):
                sl = slice_at(partition, bt)
                errs.append(
                    np.asarray(problem.u_exact(sl.node_positions, bt), dtype=float)
                    - u_num
                )
            error_functions.append(
                FEFunction(u0=errs[0], u1=errs[1], u2=errs[2], partition=partition)
            )
        current = slice_at(partition, partition.t_end)
        coeffs = fef.u2
        if config.collect_solution:
            solution_rows += [
                (float(current.time), float(x), float(u))
                for x, u in zip(current.node_positions, coeffs)
            ]

    cpu = time.perf_counter() - t_begin
    if failed_at is None and problem.u_exact is not None:
        tf = problem.t_final
        l2 = l2_error(current, coeffs, lambda x: problem.u_exact(x, tf))
        h1 = h1_seminorm_error(current, coeffs, lambda x: problem.u_exact_x(x, tf))
    else:
        l2 = h1 = float("nan")
    energy = (
        energy_seminorm(error_functions)
        if config.compute_energy and error_functions and failed_at is None
        else None
    )
    record = ErrorRecord(
        n=config.n, m=config.m, l2_final=l2, h1_final=h1, energy=energy,
        cpu_seconds=cpu,
    )
    return RunResult(
        record=record,
        final_positions=current.node_positions.copy(),
        final_coefficients=np.asarray(coeffs, dtype=float).copy(),
        solution_rows=solution_rows,
        mesh_rows=mesh_rows,
        failed_partition=failed_at,
        failure_reason=reason,
    )


@dataclass
class TableRow:
    n: int
    m: int
    l2_moving: float
    l2_static: float
    ratio: float
    cpu_moving: float
    cpu_static: float
    cpu_ratio: float
    failure: Optional[str] = None


@dataclass
class TableResult:
    problem: str
    motion: MotionKind
    transfer: TransferMode
    eps: float
    supg_delta: float
    rows: list[TableRow]

    def grid_csv(self) -> str:
        """Raw comparison grid, one row per (n, m) cell."""
        lines = ["n,m,l2_moving,l2_static,ratio,cpu_moving,cpu_static,cpu_ratio"]
        for r in self.rows:
            if r.failure is not None:
                lines.append(f"{r.n},{r.m},failed:{r.failure},,,,,")
            else:
                lines.append(
                    f"{r.n},{r.m},{fmt(r.l2_moving)},{fmt(r.l2_static)},{fmt(r.ratio)},"
                    f"{fmt(r.cpu_moving)},{fmt(r.cpu_static)},{fmt(r.cpu_ratio)}"
                )
        return "\n".join(lines) + "\n"

    def results_csv(self) -> str:
        lines = [RESULTS_HEADER]
        for r in self.rows:
            val = "" if r.failure is not None else fmt(r.l2_moving)
            stat = "" if r.failure is not None else fmt(r.l2_static)
            rat = "" if r.failure is not None else fmt(r.ratio)
            lines.append(
                f"{self.problem},{r.n},{r.m},{self.motion.value},"
                f"{self.transfer.value},{fmt(self.eps)},{fmt(self.supg_delta)},"
                f"{val},{stat},{rat},{fmt(r.cpu_moving)},{fmt(r.cpu_static)}"
            )
        return "\n".join(lines) + "\n"


def run_comparison_table(
    problem: str,
    n_list: list[int],
    m_list: list[int],
    transfer: TransferMode = TransferMode.INTERPOLATE,
    eps: float = RICHARDSON_EPS,
    motion: MotionKind = MotionKind.CHARACTERISTICS,
    supg_delta: float = 0.0,
    reynolds: float = 100.0,
) -> TableResult:
    """Moving-vs-static L2-error ratios over an (n, m) grid."""
    if not n_list or not m_list:
        raise ValueError("n_list and m_list must be non-empty")
    rows: list[TableRow] = []
    for n in n_list:
        for m in m_list:
            try:
                moving = run_single(
                    RunConfig(
                        problem=problem, n=n, m=m, motion=motion, transfer=transfer,
                        eps=eps, supg_delta=supg_delta, reynolds=reynolds,
                    )
                )
                static = run_single(
                    RunConfig(
                        problem=problem, n=n, m=m, motion=MotionKind.STATIC,
                        transfer=transfer, eps=eps, supg_delta=supg_delta,
                        reynolds=reynolds,
                    )
                )
                if not moving.ok:
                    raise DegenerateMeshError(
                        f"moving run failed at partition {moving.failed_partition}: "
                        f"{moving.failure_reason}"
                    )
                if not static.ok:
                    raise DegenerateMeshError(
                        f"static run failed at partition {static.failed_partition}: "
                        f"{static.failure_reason}"
                    )
                rows.append(
                    TableRow(
                        n=n, m=m,
                        l2_moving=moving.record.l2_final,
                        l2_static=static.record.l2_final,
                        ratio=moving.record.l2_final / static.record.l2_final,
                        cpu_moving=moving.record.cpu_seconds,
                        cpu_static=static.record.cpu_seconds,
                        cpu_ratio=moving.record.cpu_seconds / static.record.cpu_seconds,
                    )
                )
            except (DegenerateMeshError, SolverFailure, InvalidStateError) as exc:
                rows.append(
                    TableRow(
                        n=n, m=m, l2_moving=float("nan"), l2_static=float("nan"),
                        ratio=float("nan"), cpu_moving=float("nan"),
                        cpu_static=float("nan"), cpu_ratio=float("nan"),
                        failure=str(exc),
                    )
                )
    return TableResult(
        problem=problem, motion=motion, transfer=transfer, eps=eps,
        supg_delta=supg_delta, rows=rows,
    )


@dataclass
class ConvergenceResult:
    problem: str
    axis: str
    steps: list[float]
    errors: list[float]
    slope: float

    def csv(self) -> str:
        lines = ["step,l2_error"]
        lines += [f"{fmt(s)},{fmt(e)}" for s, e in zip(self.steps, self.errors)]
        lines.append(f"slope,{fmt(self.slope)}")
        return "\n".join(lines) + "\n"


def run_convergence(
    problem: str,
    axis: str,
    motion: MotionKind = MotionKind.CHARACTERISTICS,
    transfer: TransferMode = TransferMode.INTERPOLATE,
    eps: float = RICHARDSON_EPS,
) -> ConvergenceResult:
    """Observed L2 order under time refinement (n = 3001 fixed, m in 10..80)
    or space refinement (m = 1000 fixed, n in 51..401)."""
    axis = axis.lower()
    if axis == "time":
        sweep = [(3001, m) for m in (10, 20, 40, 80)]
    elif axis == "space":
        sweep = [(n, 1000) for n in (51, 101, 201, 401)]
    else:
        raise ValueError(f"axis must be 'space' or 'time', got {axis!r}")
    spec = by_name(problem)
    if spec.u_exact is None:
        raise ValueError("convergence study needs a problem with an exact solution")
    steps, errors = [], []
    for n, m in sweep:
        res = run_single(
            RunConfig(problem=problem, n=n, m=m, motion=motion, transfer=transfer, eps=eps)
        )
        if not res.ok:
            raise DegenerateMeshError(
                f"run (n={n}, m={m}) failed at partition {res.failed_partition}"
            )
        lo, hi = spec.domain
        steps.append(spec.t_final / m if axis == "time" else (hi - lo) / ((n - 1) // 2))
        errors.append(res.record.l2_final)
    return ConvergenceResult(
        problem=problem, axis=axis, steps=steps, errors=errors,
        slope=convergence_rate(errors, steps),
    )


@dataclass
class BurgersSuiteResult:
    reynolds: float
    n: int
    m: int
    overshoot_static: float
    overshoot_supg: float
    overshoot_moving: float
    min_front_element: float
    mean_element: float
    front_position: float
    snapshots: dict[str, RunResult]
    supg_delta: float

    def snapshots_csv(self) -> str:
        lines = ["scheme,t,x,u"]
        for name, res in self.snapshots.items():
            lines += [
                f"{name},{fmt(t)},{fmt(x)},{fmt(u)}" for t, x, u in res.solution_rows
            ]
        return "\n".join(lines) + "\n"


def run_burgers_suite(reynolds: float, n: int, m: int) -> BurgersSuiteResult:
    """Static Galerkin vs static SUPG vs moving mesh on the Burgers front.

    The SUPG coefficient follows the reference configurations: 0.1 for the
    thick-shock run (R = 100) and 1.0 for the thin-shock run (R = 1000).
    """
    if reynolds <= 0:
        raise ValueError("reynolds must be positive")
    supg_delta = 0.1 if reynolds <= 500 else 1.0
    base = dict(problem="burgers", n=n, m=m, reynolds=reynolds, collect_solution=True,
                collect_mesh=True)
    runs = {
        "static": run_single(RunConfig(motion=MotionKind.STATIC, **base)),
        "supg": run_single(
            RunConfig(motion=MotionKind.STATIC, supg_delta=supg_delta, **base)
        ),
        "moving": run_single(
            RunConfig(motion=MotionKind.SOLUTION_VELOCITY, uniform_reset=False, **base)
        ),
    }
    for name, res in runs.items():
        if not res.ok:
            raise DegenerateMeshError(
                f"burgers {name} run failed at partition {res.failed_partition}: "
                f"{res.failure_reason}"
            )
    problem = by_name("burgers", reynolds)
    lo, hi = problem.domain
    grid = np.linspace(lo, hi, 4001)
    bounds_samples = np.asarray(problem.u_initial(grid), dtype=float)
    bounds = (float(bounds_samples.min()), float(bounds_samples.max()))

    overshoots = {}
    for name, res in runs.items():
        sl = MeshSlice(
            time=problem.t_final,
            node_positions=res.final_positions,
            node_velocities=np.zeros_like(res.final_positions),
        )
        overshoots[name] = overshoot_metric(fe_eval(sl, res.final_coefficients, grid), bounds)

    moving = runs["moving"]
    sl = MeshSlice(
        time=problem.t_final,
        node_positions=moving.final_positions,
        node_velocities=np.zeros_like(moving.final_positions),
    )
    slopes = np.abs(fe_eval_deriv(sl, moving.final_coefficients, grid))
    front = float(grid[np.argmax(slopes)])
    lengths = sl.element_lengths
    centers = 0.5 * (sl.vertex_positions[:-1] + sl.vertex_positions[1:])
    near = np.abs(centers - front) <= 0.5
    min_front = float(lengths[near].min()) if near.any() else float(lengths.min())

    return BurgersSuiteResult(
        reynolds=reynolds, n=n, m=m,
        overshoot_static=overshoots["static"],
        overshoot_supg=overshoots["supg"],
        overshoot_moving=overshoots["moving"],
        min_front_element=min_front,
        mean_element=float(lengths.mean()),
        front_position=front,
        snapshots=runs,
        supg_delta=supg_delta,
    )
