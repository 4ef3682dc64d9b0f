"""Exception types shared across the solver."""


class DegenerateMeshError(RuntimeError):
    """Node ordering violated (zero or negative element size) somewhere in time."""


class CoefficientValidityError(ValueError):
    """A diffusion coefficient failed the positivity requirement at a sample point."""


class SolverFailure(RuntimeError):
    """A linear stage system was singular or left an unacceptable residual."""


class InvalidStateError(RuntimeError):
    """A mesh reconfiguration request cannot be honored (e.g. too few nodes left)."""
