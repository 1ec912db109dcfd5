from .levelset import (
    LevelSet,
    alpha_from_characteristic,
    alpha_from_levelset,
    angle,
    characteristic_from_levelset,
    element_means,
    fluid_volume,
    initial_levelset,
    l2_norm,
    update_levelset,
    volume_project,
)
from .optimizer import (
    FlowParameters,
    LevelSetOptimizer,
    OptimizationResult,
    OptimizerSettings,
    PenaltyContext,
    ShapeEvaluation,
    evaluate_shape,
    optimize,
)

__all__ = [
    "FlowParameters",
    "LevelSet",
    "LevelSetOptimizer",
    "OptimizationResult",
    "OptimizerSettings",
    "PenaltyContext",
    "ShapeEvaluation",
    "alpha_from_characteristic",
    "alpha_from_levelset",
    "angle",
    "characteristic_from_levelset",
    "element_means",
    "evaluate_shape",
    "fluid_volume",
    "initial_levelset",
    "l2_norm",
    "optimize",
    "update_levelset",
    "volume_project",
]
