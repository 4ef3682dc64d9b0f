"""FastAPI service wrapping the experiment harness.

Runs are synchronous: each request executes the requested computation and
returns records plus CSV payloads, so clients own all file I/O.  Invalid
configurations map to 400/422, numerical failures (degenerate mesh, singular
solve) to 500 with a structured code.
"""

from __future__ import annotations

import math
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import (
    CoefficientValidityError,
    DegenerateMeshError,
    InvalidStateError,
    SolverFailure,
)
from ..harness import (
    RESULTS_HEADER,
    RunConfig,
    RunResult,
    fmt,
    run_burgers_suite,
    run_comparison_table,
    run_convergence,
    run_single,
)
from ..motion import MotionKind
from ..problems import by_name
from ..timestepper import TransferMode
from .schemas import (
    BurgersRequest,
    BurgersResponse,
    ConvergenceRequest,
    ConvergenceResponse,
    ErrorRecordModel,
    ProblemInfo,
    SolveRequest,
    SolveResponse,
    TableCell,
    TableRequest,
    TableResponse,
)

NUMERICAL_FAILURE = "numerical-failure"
INVALID_CONFIG = "invalid-config"

app = FastAPI(
    title="movefem",
    version=__version__,
    description="Moving-mesh finite element solver and experiment harness",
)


@app.exception_handler(ValueError)
async def _invalid_config(request: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"detail": {"code": INVALID_CONFIG, "message": str(exc)}},
    )


@app.exception_handler(DegenerateMeshError)
@app.exception_handler(SolverFailure)
@app.exception_handler(InvalidStateError)
@app.exception_handler(CoefficientValidityError)
async def _numerical_failure(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=500,
        content={"detail": {"code": NUMERICAL_FAILURE, "message": str(exc)}},
    )


def _clean(value: float) -> Optional[float]:
    return None if value is None or math.isnan(value) else float(value)


def _record_model(result: RunResult) -> ErrorRecordModel:
    rec = result.record
    return ErrorRecordModel(
        n=rec.n,
        m=rec.m,
        l2_final=_clean(rec.l2_final),
        h1_final=_clean(rec.h1_final),
        energy=_clean(rec.energy) if rec.energy is not None else None,
        cpu_seconds=rec.cpu_seconds,
    )


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/problems", response_model=list[ProblemInfo])
def problems() -> list[ProblemInfo]:
    infos = []
    for name in ("conv1", "diff2", "burgers"):
        spec = by_name(name)
        infos.append(
            ProblemInfo(
                name=name,
                domain=spec.domain,
                t_final=spec.t_final,
                nonlinear=spec.nonlinear,
                has_exact=spec.u_exact is not None,
            )
        )
    return infos


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    config = RunConfig(
        problem=req.problem,
        n=req.n,
        m=req.m,
        motion=MotionKind(req.motion),
        transfer=TransferMode(req.transfer),
        eps=req.eps,
        supg_delta=req.supg,
        reynolds=req.reynolds,
        uniform_reset=req.uniform_reset,
        compute_energy=req.compute_energy,
        collect_solution=req.include_solution,
        collect_mesh=req.include_mesh,
        mesh_samples_per_partition=req.mesh_samples_per_partition,
    )
    result = run_single(config)
    if not result.ok:
        raise SolverFailure(
            f"run failed at partition {result.failed_partition}: "
            f"{result.failure_reason}"
        )
    row = (
        f"{req.problem},{req.n},{req.m},{req.motion},{req.transfer},"
        f"{fmt(req.eps)},{fmt(req.supg)},{fmt(result.record.l2_final)},,,"
        f"{fmt(result.record.cpu_seconds)},"
    )
    return SolveResponse(
        record=_record_model(result),
        results_csv=RESULTS_HEADER + "\n" + row + "\n",
        solution_csv=result.solution_csv() if req.include_solution else None,
        mesh_csv=result.mesh_csv() if req.include_mesh else None,
    )


@app.post("/table", response_model=TableResponse)
def table(req: TableRequest) -> TableResponse:
    result = run_comparison_table(
        problem=req.problem,
        n_list=req.n_list,
        m_list=req.m_list,
        transfer=TransferMode(req.transfer),
        eps=req.eps,
        motion=MotionKind(req.motion),
        supg_delta=req.supg,
        reynolds=req.reynolds,
    )
    rows = [
        TableCell(
            n=r.n,
            m=r.m,
            l2_moving=_clean(r.l2_moving),
            l2_static=_clean(r.l2_static),
            ratio=_clean(r.ratio),
            cpu_moving=_clean(r.cpu_moving),
            cpu_static=_clean(r.cpu_static),
            cpu_ratio=_clean(r.cpu_ratio),
            failure=r.failure,
        )
        for r in result.rows
    ]
    return TableResponse(
        problem=req.problem,
        rows=rows,
        results_csv=result.results_csv(),
        grid_csv=result.grid_csv(),
    )


@app.post("/convergence", response_model=ConvergenceResponse)
def convergence(req: ConvergenceRequest) -> ConvergenceResponse:
    result = run_convergence(
        problem=req.problem,
        axis=req.axis,
        motion=MotionKind(req.motion),
        transfer=TransferMode(req.transfer),
        eps=req.eps,
    )
    return ConvergenceResponse(
        problem=req.problem,
        axis=req.axis,
        steps=result.steps,
        errors=result.errors,
        slope=result.slope,
        csv=result.csv(),
    )


@app.post("/burgers", response_model=BurgersResponse)
def burgers(req: BurgersRequest) -> BurgersResponse:
    suite = run_burgers_suite(req.reynolds, req.n, req.m)
    mesh_csv = suite.snapshots["moving"].mesh_csv()
    return BurgersResponse(
        reynolds=req.reynolds,
        n=req.n,
        m=req.m,
        supg_delta=suite.supg_delta,
        overshoot_static=suite.overshoot_static,
        overshoot_supg=suite.overshoot_supg,
        overshoot_moving=suite.overshoot_moving,
        front_position=suite.front_position,
        min_front_element=suite.min_front_element,
        mean_element=suite.mean_element,
        snapshots_csv=suite.snapshots_csv(),
        mesh_csv=mesh_csv,
    )
