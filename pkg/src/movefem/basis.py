"""Reference-element machinery: quadratic Lagrange bases, quadrature rules and
the two-stage time-difference stencils.

Everything here lives on the unit reference interval [0, 1].  Spatial shape
functions have nodes at {0, 1/2, 1}; the quadratic-in-time representation has
basis nodes at {0, eps, 1} with collocation points {eps/2, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule",
    "TimeDiffCoeffs",
    "lagrange2_eval",
    "lagrange2_values",
    "lagrange2_derivs",
    "gauss_legendre",
    "gauss_radau_right",
    "time_diff_coeffs",
    "time_lagrange",
    "trapezoid_combination",
]

# Second derivatives of the spatial shape functions are constant on the
# reference element: phi'' = (4, -8, 4).
LAGRANGE2_SECOND_DERIV = np.array([4.0, -8.0, 4.0])


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on the interval noted by ``convention``."""

    points: np.ndarray
    weights: np.ndarray
    convention: str = "[0,1]"

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


@dataclass(frozen=True)
class TimeDiffCoeffs:
    """Stencil weights of the discrete time derivative at the collocation points.

    ``mid`` applies to values at the basis nodes (0, eps); ``end`` applies to
    values at (0, eps, 1).  Both are in units of the reciprocal step, i.e. they
    still need a division by the step length.
    """

    eps: float
    mid: tuple[float, float]
    end: tuple[float, float, float]


def lagrange2_eval(xhat: float, node: int) -> tuple[float, float]:
    """Value and derivative of quadratic shape function ``node`` at ``xhat``.

    Nodes sit at reference coordinates 0, 1/2 and 1; the functions satisfy
    the usual Kronecker property and sum to one.
    """
    if node == 0:
        return (1.0 - xhat) * (1.0 - 2.0 * xhat), 4.0 * xhat - 3.0
    if node == 1:
        return 4.0 * xhat * (1.0 - xhat), 4.0 - 8.0 * xhat
    if node == 2:
        return xhat * (2.0 * xhat - 1.0), 4.0 * xhat - 1.0
    raise ValueError(f"shape function index must be 0, 1 or 2, got {node}")


def lagrange2_values(xhat: np.ndarray) -> np.ndarray:
    """Shape-function values at many reference points; shape (3, len(xhat))."""
    xhat = np.asarray(xhat, dtype=float)
    return np.stack(
        [
            (1.0 - xhat) * (1.0 - 2.0 * xhat),
            4.0 * xhat * (1.0 - xhat),
            xhat * (2.0 * xhat - 1.0),
        ]
    )


def lagrange2_derivs(xhat: np.ndarray) -> np.ndarray:
    """Reference derivatives of the shape functions; shape (3, len(xhat))."""
    xhat = np.asarray(xhat, dtype=float)
    return np.stack([4.0 * xhat - 3.0, 4.0 - 8.0 * xhat, 4.0 * xhat - 1.0])


def gauss_legendre(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1], exact through degree 2n-1."""
    if n_points not in (3, 4, 5):
        raise ValueError(f"supported Gauss-Legendre sizes are 3, 4, 5; got {n_points}")
    pts, wts = np.polynomial.legendre.leggauss(n_points)
    return QuadratureRule(points=0.5 * (pts + 1.0), weights=0.5 * wts)


def gauss_radau_right() -> QuadratureRule:
    """Two-point right Gauss-Radau rule on [0, 1]: (3/4) f(1/3) + (1/4) f(1).

    Exact for quadratics; the remainder on cubics is f'''(z)/216.
    """
    return QuadratureRule(
        points=np.array([1.0 / 3.0, 1.0]), weights=np.array([0.75, 0.25])
    )


def time_diff_coeffs(eps: float) -> TimeDiffCoeffs:
    """Weights of the interpolatory time derivative at the two collocation points.

    With values u0, u1, u2 at normalized times (0, eps, 1), the derivative of
    the interpolating quadratic is

        at eps/2:  (u1 - u0) / eps
        at 1:      ((1-eps)/eps) u0 - u1/(eps (1-eps)) + ((2-eps)/(1-eps)) u2

    both still to be divided by the physical step length.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    mid = (-1.0 / eps, 1.0 / eps)
    end = (
        (1.0 - eps) / eps,
        -1.0 / (eps * (1.0 - eps)),
        (2.0 - eps) / (1.0 - eps),
    )
    return TimeDiffCoeffs(eps=eps, mid=mid, end=end)


def time_lagrange(eps: float, s: float) -> tuple[float, float, float]:
    """Quadratic Lagrange weights for nodes (0, eps, 1) evaluated at s."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    l0 = (s - eps) * (s - 1.0) / (eps * 1.0)
    l1 = s * (s - 1.0) / (eps * (eps - 1.0))
    l2 = s * (s - eps) / (1.0 - eps)
    return l0, l1, l2


def trapezoid_combination(u0: np.ndarray, u1: np.ndarray) -> np.ndarray:
    """Componentwise average, the trapezoid-stage evaluation at the mid collocation point."""
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    if u0.shape != u1.shape:
        raise ValueError(f"length mismatch: {u0.shape} vs {u1.shape}")
    return 0.5 * (u0 + u1)
