"""Numerical laboratory for Nahm-pole boundary problems on half-cylinders and half-spaces.

The package solves the scalar reduction of the extended Bogomolny equations,

    K - (Delta + d^2/dy^2) u + |alpha|^2 e^{2u} - |beta|^2 e^{-2u} = 0,

with the singular product profile at y=0 (optionally decorated by boundary
knot points), reconstructs Hermitian metrics and unitary field triplets from
the scalar solutions, and ships the measurement tools used to validate them:
explicit model solutions, a quadrature-based ODE branch, boundary expansions,
a hemisphere eigenvalue solver, barriers, and a sigma-distance uniqueness
check.
"""

from .errors import (
    NahmpoleError,
    DomainError,
    ConfigError,
    CoordinateSingularity,
    SolveError,
    InvariantViolation,
)
from .grids import (
    DomainSpec,
    HiggsData,
    KnotPoint,
    GradedGrid,
    ScalarField,
    build_grid,
    constant_field,
    spherical_coords,
    field_norms,
    ODE_LINE,
    LIMIT_SURFACE,
    AXISYM_SLAB,
    TORUS_HALF_CYLINDER,
    PLANE_HALF_SPACE,
)
from .models import (
    eval_Sn,
    eval_Un,
    eval_Un_grad,
    eval_Un_lap,
    eval_model_phi,
    eval_sinh_family,
    ModelSolution,
    model_solution,
)
from .mikhaylov import solve_mikhaylov_ode, first_integral_check, invert_by_bisection
from .expansion import formal_expansion, fit_boundary_coefficients, ExpansionTable
from .spectral import eigen_J, indicial_radial, indicial_boundary, Spectrum

__version__ = "0.1.0"

__all__ = [
    "NahmpoleError",
    "DomainError",
    "ConfigError",
    "CoordinateSingularity",
    "SolveError",
    "InvariantViolation",
    "DomainSpec",
    "HiggsData",
    "KnotPoint",
    "GradedGrid",
    "ScalarField",
    "build_grid",
    "constant_field",
    "spherical_coords",
    "field_norms",
    "ODE_LINE",
    "LIMIT_SURFACE",
    "AXISYM_SLAB",
    "TORUS_HALF_CYLINDER",
    "PLANE_HALF_SPACE",
    "eval_Sn",
    "eval_Un",
    "eval_Un_grad",
    "eval_Un_lap",
    "eval_model_phi",
    "eval_sinh_family",
    "ModelSolution",
    "model_solution",
    "solve_mikhaylov_ode",
    "first_integral_check",
    "invert_by_bisection",
    "formal_expansion",
    "fit_boundary_coefficients",
    "ExpansionTable",
    "eigen_J",
    "indicial_radial",
    "indicial_boundary",
    "Spectrum",
    "__version__",
]
