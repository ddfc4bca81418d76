"""Conservative transfer between high-order and low-order-refined finite element spaces."""

from .errors import ArgumentError, CompatibilityError, ConvergenceError, UnsupportedError
from .fespace import (Continuity, FESpace, Field, integrate, interpolate_nodal, l2_error,
                      project_l2)
from .mesh import CartesianMesh, LorSpec, make_cartesian, make_lor_mesh, refine_uniform
from .quadrature import QuadRule, RuleKind, make_rule
from .solvers import SolveReport
from .transfer import (TransferPair, density_from_high, density_from_low, lor_pair, make_pair,
                       prolong, prolong_weighted, restrict, restrict_weighted)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "CompatibilityError", "ConvergenceError", "UnsupportedError",
    "Continuity", "FESpace", "Field", "integrate", "interpolate_nodal", "l2_error", "project_l2",
    "CartesianMesh", "LorSpec", "make_cartesian", "make_lor_mesh", "refine_uniform",
    "QuadRule", "RuleKind", "make_rule", "SolveReport",
    "TransferPair", "make_pair", "lor_pair", "restrict", "prolong", "restrict_weighted",
    "prolong_weighted", "density_from_high", "density_from_low",
]
