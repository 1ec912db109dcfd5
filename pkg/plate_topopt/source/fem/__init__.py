from .assembly import (
    StokesBrinkmanSystem,
    TaylorHoodDofs,
    assemble_smoothing_operator,
    assemble_stokes_brinkman,
    boundary_flux,
    evaluate_at_vertices,
    integrate,
    interpolate_p2,
    mass_matrix,
    p1_mass_matrix,
    stiffness_matrix,
)
from .fields import ElementwiseField, ScalarFieldP1, ScalarFieldP2, VectorFieldP2
from .space import P2Space, get_p2_space

__all__ = [
    "ElementwiseField",
    "P2Space",
    "ScalarFieldP1",
    "ScalarFieldP2",
    "StokesBrinkmanSystem",
    "TaylorHoodDofs",
    "VectorFieldP2",
    "assemble_smoothing_operator",
    "assemble_stokes_brinkman",
    "boundary_flux",
    "evaluate_at_vertices",
    "get_p2_space",
    "integrate",
    "interpolate_p2",
    "mass_matrix",
    "p1_mass_matrix",
    "stiffness_matrix",
]
