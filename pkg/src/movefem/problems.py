"""The built-in test problems.

Two linear convection-diffusion-reaction problems with manufactured exact
solutions on (-3, 3) x (0, 1], and viscous Burgers flow on (-3, 3) x (0, 2]
with homogeneous Neumann data.  All coefficient callables are vectorized over
x for a scalar time argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["ProblemSpec", "problem_convection", "problem_diffusion",
           "problem_burgers", "manufactured_source", "by_name"]

Coeff = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    a: Coeff
    b: Coeff
    c: Coeff
    f: Coeff
    g_left: Callable[[float], float]
    g_right: Callable[[float], float]
    u_initial: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]
    t_final: float
    nonlinear: bool = False
    u_exact: Optional[Coeff] = None
    u_exact_x: Optional[Coeff] = None
    a_x: Optional[Coeff] = None


def problem_convection() -> ProblemSpec:
    """Convection-dominated transport of a Gaussian pulse moving at speed 3.

    u_t - 0.01 u_xx + 3 u_x = f with exact solution exp(-(x - 3t)^2); the
    source, initial data and Neumann fluxes are manufactured from it.
    """

    def u(x, t):
        w = x - 3.0 * t
        return np.exp(-w * w)

    def u_x(x, t):
        w = x - 3.0 * t
        return -2.0 * w * np.exp(-w * w)

    def f(x, t):
        w = x - 3.0 * t
        return (0.02 - 0.04 * w * w) * np.exp(-w * w)

    return ProblemSpec(
        name="conv1",
        a=lambda x, t: np.full_like(np.asarray(x, dtype=float), 0.01),
        b=lambda x, t: np.full_like(np.asarray(x, dtype=float), 3.0),
        c=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        f=f,
        g_left=lambda t: float(-0.01 * u_x(np.array(-3.0), t)),
        g_right=lambda t: float(0.01 * u_x(np.array(3.0), t)),
        u_initial=lambda x: u(np.asarray(x, dtype=float), 0.0),
        domain=(-3.0, 3.0),
        t_final=1.0,
        u_exact=u,
        u_exact_x=u_x,
        a_x=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
    )


_K = np.pi / 6.0


def problem_diffusion() -> ProblemSpec:
    """Diffusion-dominated wave with variable coefficients.

    u_t - ((x^2 + t^2 + 0.1) u_x)_x + 0.1 (x^3 - 9x) u_x + u = f with exact
    solution sin(pi/6 (x + 5t)).  The divergence-form diffusion contributes
    the -2x u_x piece to the manufactured source.
    """

    def u(x, t):
        return np.sin(_K * (x + 5.0 * t))

    def u_x(x, t):
        return _K * np.cos(_K * (x + 5.0 * t))

    def a(x, t):
        return x * x + t * t + 0.1

    def b(x, t):
        return 0.1 * (x ** 3 - 9.0 * x)

    def f(x, t):
        phi = _K * (x + 5.0 * t)
        sin, cos = np.sin(phi), np.cos(phi)
        return (
            5.0 * _K * cos
            - 2.0 * x * _K * cos
            + a(x, t) * _K * _K * sin
            + b(x, t) * _K * cos
            + sin
        )

    return ProblemSpec(
        name="diff2",
        a=a,
        b=b,
        c=lambda x, t: np.ones_like(np.asarray(x, dtype=float)),
        f=f,
        g_left=lambda t: float(-a(np.array(-3.0), t) * u_x(np.array(-3.0), t)),
        g_right=lambda t: float(a(np.array(3.0), t) * u_x(np.array(3.0), t)),
        u_initial=lambda x: u(np.asarray(x, dtype=float), 0.0),
        domain=(-3.0, 3.0),
        t_final=1.0,
        u_exact=u,
        u_exact_x=u_x,
        a_x=lambda x, t: 2.0 * np.asarray(x, dtype=float),
    )


def problem_burgers(
    reynolds: float, front_width: float = 0.25, amplitude: float = 1.0
) -> ProblemSpec:
    """Viscous Burgers flow u_t - u_xx / R + u u_x = 0 with u_x(+-3) = 0.

    The initial profile amplitude/2 * (1 - tanh(x / width)) puts a
    right-moving front at the center of the domain; it stays inside the domain
    through t = 2 for the default parameters.
    """
    if reynolds <= 0.0:
        raise ValueError(f"Reynolds number must be positive, got {reynolds}")
    if front_width <= 0.0:
        raise ValueError("front_width must be positive")

    def u0(x):
        return 0.5 * amplitude * (1.0 - np.tanh(np.asarray(x, dtype=float) / front_width))

    return ProblemSpec(
        name="burgers",
        a=lambda x, t: np.full_like(np.asarray(x, dtype=float), 1.0 / reynolds),
        b=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),  # convection is u itself
        c=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        f=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        g_left=lambda t: 0.0,
        g_right=lambda t: 0.0,
        u_initial=u0,
        domain=(-3.0, 3.0),
        t_final=2.0,
        nonlinear=True,
        a_x=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
    )


def manufactured_source(problem: ProblemSpec, x: np.ndarray, t: float) -> np.ndarray:
    """Closed-form u_t - (a u_x)_x + b u_x + c u for problems with an exact solution."""
    if problem.u_exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    return np.broadcast_to(
        np.asarray(problem.f(np.asarray(x, dtype=float), t), dtype=float),
        np.asarray(x, dtype=float).shape,
    ).copy()


def by_name(name: str, reynolds: float = 100.0) -> ProblemSpec:
    """Look up a problem by its CLI name: conv1, diff2 or burgers."""
    if name == "conv1":
        return problem_convection()
    if name == "diff2":
        return problem_diffusion()
    if name == "burgers":
        return problem_burgers(reynolds)
    raise ValueError(f"unknown problem {name!r}; choose conv1, diff2 or burgers")
