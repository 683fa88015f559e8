"""Polyhedral kernel: H-representations, LP tests, affine regions, export."""

from .elimination import FM_ROW_CAP, project, region_to_polyhedron
from .lp import TOL, LpOutcome, solve_lp
from .polyhedron import (
    AffineRegion,
    ChebyshevBall,
    Polyhedron,
    UnionOfPolyhedra,
    affine_preimage_constraints,
    bounding_box,
    canonical,
    chebyshev_ball,
    interior_point,
    intersect,
    is_empty,
    lp_feasible,
    region_residual,
    remove_redundancy,
)
from .vertices import vertices_2d

__all__ = [
    "TOL", "FM_ROW_CAP", "LpOutcome", "solve_lp", "AffineRegion", "ChebyshevBall",
    "Polyhedron", "UnionOfPolyhedra", "affine_preimage_constraints", "bounding_box",
    "canonical", "chebyshev_ball", "interior_point", "intersect", "is_empty",
    "lp_feasible", "project", "region_residual", "region_to_polyhedron",
    "remove_redundancy", "vertices_2d",
]
