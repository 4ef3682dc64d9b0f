"""Moving-mesh quadratic finite elements with two-stage implicit time stepping.

The core package solves 1D convection-diffusion-reaction problems (and
Burgers' equation) on meshes whose nodes follow quadratic-in-time
trajectories, and ships an experiment harness for moving-vs-static
comparisons.  A FastAPI service (movefem.service) exposes the harness over
HTTP; the command-line client (movefem.cli) talks to it.
"""

from .errors import (
    CoefficientValidityError,
    DegenerateMeshError,
    InvalidStateError,
    SolverFailure,
)
from .harness import RunConfig, run_burgers_suite, run_comparison_table, run_convergence, run_single
from .motion import MotionKind, MotionPolicy
from .problems import by_name, problem_burgers, problem_convection, problem_diffusion
from .timestepper import RICHARDSON_EPS, StepperConfig, TransferMode, stability_function

__version__ = "0.1.0"

__all__ = [
    "CoefficientValidityError",
    "DegenerateMeshError",
    "InvalidStateError",
    "SolverFailure",
    "RunConfig",
    "run_single",
    "run_comparison_table",
    "run_convergence",
    "run_burgers_suite",
    "MotionKind",
    "MotionPolicy",
    "by_name",
    "problem_convection",
    "problem_diffusion",
    "problem_burgers",
    "RICHARDSON_EPS",
    "StepperConfig",
    "TransferMode",
    "stability_function",
    "__version__",
]
