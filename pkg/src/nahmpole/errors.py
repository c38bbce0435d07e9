"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
numerical non-convergence exits 2, violated invariants exit 3.
"""


class NahmpoleError(Exception):
    """Base class for all package errors."""


class DomainError(NahmpoleError):
    """Invalid domain specification, grid request, or input data."""


class ConfigError(NahmpoleError):
    """Malformed or inconsistent run configuration (CLI layer)."""


class CoordinateSingularity(NahmpoleError):
    """Evaluation requested exactly at a coordinate singularity."""


class SolveError(NahmpoleError):
    """Iteration failed to converge; carries diagnostic history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class InvariantViolation(NahmpoleError):
    """A mathematical invariant that should hold was violated."""
