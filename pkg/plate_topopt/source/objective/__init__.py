from .functionals import evaluate_objective, fulfillment_fraction
from .penalty import (
    ArchiveEntry,
    PenaltyParams,
    ShapeArchive,
    deflated_objective,
    penalty,
    shape_distance,
    total_penalty,
)

__all__ = [
    "ArchiveEntry",
    "PenaltyParams",
    "ShapeArchive",
    "deflated_objective",
    "evaluate_objective",
    "fulfillment_fraction",
    "penalty",
    "shape_distance",
    "total_penalty",
]
