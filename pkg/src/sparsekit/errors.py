"""Exception types shared across the package."""


class UsageError(ValueError):
    """A caller violated a documented precondition (bad shape, bad range)."""


class SolverFailure(RuntimeError):
    """An iterative solver diverged or hit a degenerate system."""
