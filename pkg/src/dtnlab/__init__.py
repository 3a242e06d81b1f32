"""dtnlab: a numerical laboratory for the pulled-back Dirichlet-to-Neumann
operator on a circular interface, its shape derivative, and the linearized
interface evolution equation, with a finite-difference oracle adjudicating
the explicit shape-derivative formulas term by term."""

from .evolution import solve_linearized, solve_nonlinear
from .geometry import (
    BoundaryField,
    Geometry,
    curvature_data,
    laplace_beltrami_basis,
    tangential_divergence,
    tangential_gradient,
)
from .operators import apply_operator
from .shape_derivative import fd_oracle, linearized_A1

__version__ = "0.1.0"

__all__ = [
    "apply_operator",
    "fd_oracle",
    "linearized_A1",
    "solve_linearized",
    "solve_nonlinear",
    "BoundaryField",
    "Geometry",
    "curvature_data",
    "laplace_beltrami_basis",
    "tangential_divergence",
    "tangential_gradient",
    "__version__",
]
