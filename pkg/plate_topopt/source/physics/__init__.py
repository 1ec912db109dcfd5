from .flow_solver import (
    AdjointState,
    FlowState,
    InflowProfile,
    SmoothedVelocity,
    solve_adjoint,
    solve_adjoint_flow,
    solve_adjoint_smoothing,
    solve_flow,
    solve_smoothing,
)

__all__ = [
    "AdjointState",
    "FlowState",
    "InflowProfile",
    "SmoothedVelocity",
    "solve_adjoint",
    "solve_adjoint_flow",
    "solve_adjoint_smoothing",
    "solve_flow",
    "solve_smoothing",
]
