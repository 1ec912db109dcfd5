from .derivatives import (
    PENALTY_VARIANTS,
    TDField,
    generalized_td_flow,
    generalized_td_penalty,
    penalty_td_elementwise,
    total_generalized_td,
    vertex_average,
)

__all__ = [
    "PENALTY_VARIANTS",
    "TDField",
    "generalized_td_flow",
    "generalized_td_penalty",
    "penalty_td_elementwise",
    "total_generalized_td",
    "vertex_average",
]
