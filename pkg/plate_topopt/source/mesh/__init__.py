from .triangulation import (
    BoundaryTag,
    TriMesh,
    boundary_length,
    build_unit_square_mesh,
    tag_boundary,
)

__all__ = [
    "BoundaryTag",
    "TriMesh",
    "boundary_length",
    "build_unit_square_mesh",
    "tag_boundary",
]
