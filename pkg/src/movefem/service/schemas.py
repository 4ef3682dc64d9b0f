"""Request and response models of the solver service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

MotionName = Literal["static", "char", "solvel"]
TransferName = Literal["interp", "l2"]
AxisName = Literal["space", "time"]

RICHARDSON_EPS_DEFAULT = 0.5857864376269049


class SolveRequest(BaseModel):
    problem: str = Field(description="conv1, diff2 or burgers")
    n: int = Field(ge=5, description="odd spatial node count")
    m: int = Field(ge=1, description="number of uniform time steps")
    motion: MotionName = "static"
    transfer: TransferName = "interp"
    eps: float = Field(default=RICHARDSON_EPS_DEFAULT, gt=0.0, lt=1.0)
    supg: float = Field(default=0.0, ge=0.0)
    reynolds: float = Field(default=100.0, gt=0.0)
    uniform_reset: Optional[bool] = None
    compute_energy: bool = False
    include_solution: bool = False
    include_mesh: bool = False
    mesh_samples_per_partition: int = Field(default=5, ge=2)
    seed: Optional[int] = Field(default=None, description="reserved; runs are deterministic")


class ErrorRecordModel(BaseModel):
    n: int
    m: int
    l2_final: Optional[float]
    h1_final: Optional[float]
    energy: Optional[float]
    cpu_seconds: float


class SolveResponse(BaseModel):
    record: ErrorRecordModel
    failed_partition: Optional[int] = None
    failure_reason: Optional[str] = None
    results_csv: str
    solution_csv: Optional[str] = None
    mesh_csv: Optional[str] = None


class TableRequest(BaseModel):
    problem: str
    n_list: list[int] = Field(min_length=1)
    m_list: list[int] = Field(min_length=1)
    motion: MotionName = "char"
    transfer: TransferName = "interp"
    eps: float = Field(default=RICHARDSON_EPS_DEFAULT, gt=0.0, lt=1.0)
    supg: float = Field(default=0.0, ge=0.0)
    reynolds: float = Field(default=100.0, gt=0.0)
    seed: Optional[int] = None


class TableCell(BaseModel):
    n: int
    m: int
    l2_moving: Optional[float]
    l2_static: Optional[float]
    ratio: Optional[float]
    cpu_moving: Optional[float]
    cpu_static: Optional[float]
    cpu_ratio: Optional[float]
    failure: Optional[str] = None


class TableResponse(BaseModel):
    problem: str
    rows: list[TableCell]
    results_csv: str
    grid_csv: str


class ConvergenceRequest(BaseModel):
    problem: str
    axis: AxisName
    motion: MotionName = "char"
    transfer: TransferName = "interp"
    eps: float = Field(default=RICHARDSON_EPS_DEFAULT, gt=0.0, lt=1.0)
    seed: Optional[int] = None


class ConvergenceResponse(BaseModel):
    problem: str
    axis: AxisName
    steps: list[float]
    errors: list[float]
    slope: float
    csv: str


class BurgersRequest(BaseModel):
    reynolds: float = Field(default=100.0, gt=0.0)
    n: int = Field(ge=5)
    m: int = Field(ge=1)
    seed: Optional[int] = None


class BurgersResponse(BaseModel):
    reynolds: float
    n: int
    m: int
    supg_delta: float
    overshoot_static: float
    overshoot_supg: float
    overshoot_moving: float
    front_position: float
    min_front_element: float
    mean_element: float
    snapshots_csv: str
    mesh_csv: str


class ProblemInfo(BaseModel):
    name: str
    domain: tuple[float, float]
    t_final: float
    nonlinear: bool
    has_exact: bool
