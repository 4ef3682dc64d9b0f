import numpy as np
import pytest

from movefem.mesh import MeshSlice


def slice_from_vertices(vertices, time=0.0, velocities=None) -> MeshSlice:
    """Build a slice from vertex positions with midpoints at element centers."""
    vertices = np.asarray(vertices, dtype=float)
    positions = np.empty(2 * vertices.size - 1)
    positions[0::2] = vertices
    positions[1::2] = 0.5 * (vertices[:-1] + vertices[1:])
    if velocities is None:
        vel = np.zeros_like(positions)
    else:
        velocities = np.asarray(velocities, dtype=float)
        vel = np.empty_like(positions)
        vel[0::2] = velocities
        vel[1::2] = 0.5 * (velocities[:-1] + velocities[1:])
    return MeshSlice(time=time, node_positions=positions, node_velocities=vel)


class LinearProblem:
    """Ad-hoc coefficient bundle for stepping tests."""

    nonlinear = False
    u_exact = None
    u_exact_x = None

    def __init__(self, a=None, b=None, c=None, f=None, g_left=None, g_right=None,
                 a_x=None):
        self.a = a or (lambda x, t: np.ones_like(x))
        self.b = b or (lambda x, t: np.zeros_like(x))
        self.c = c or (lambda x, t: np.zeros_like(x))
        self.f = f or (lambda x, t: np.zeros_like(x))
        self.g_left = g_left or (lambda t: 0.0)
        self.g_right = g_right or (lambda t: 0.0)
        self.a_x = a_x


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
