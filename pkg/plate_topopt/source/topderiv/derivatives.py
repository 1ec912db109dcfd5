"""
一般化トポロジー微分

流れの項は頂点での -(α_U − α_L)·u·v、ペナルティの項は要素ごとに計算して
面積重み付き平均で頂点へ移す。
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..fem import ElementwiseField, ScalarFieldP1, VectorFieldP2, evaluate_at_vertices
from ..interfaces.data_models import AssemblyError, ConfigError, check_finite
from ..mesh import TriMesh
from ..objective import PenaltyParams, ShapeArchive, shape_distance

logger = logging.getLogger(__name__)

PenaltyVariant = Literal["paper", "derived"]
PENALTY_VARIANTS = ("paper", "derived")


@dataclass(frozen=True, eq=False)
class TDField:
    """頂点ごとの一般化トポロジー微分"""
    field: ScalarFieldP1

    def __post_init__(self):
        check_finite(self.field.values, "topological_derivative", AssemblyError)

    @classmethod
    def from_values(cls, values) -> "TDField":
        return cls(ScalarFieldP1(values))

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def __len__(self) -> int:
        return len(self.field)


def generalized_td_flow(u: VectorFieldP2, v: VectorFieldP2, alpha_L: float, alpha_U: float) -> TDField:
    """g(z) = −(α_U − α_L)·u(z)·v(z)（頂点での Euclid 内積）"""
    if len(u) != len(v) or u.num_vertices != v.num_vertices:
        raise AssemblyError("状態と随伴の自由度数が一致しません")
    uu = evaluate_at_vertices(u)
    vv = evaluate_at_vertices(v)
    dot = uu[:, 0] * vv[:, 0] + uu[:, 1] * vv[:, 1]
    return TDField.from_values(-(alpha_U - alpha_L) * dot)


def vertex_average(mesh: TriMesh, element_values: np.ndarray) -> np.ndarray:
    """要素値を面積重み付き平均で頂点へ"""
    tri = mesh.triangles.ravel()
    weights = np.repeat(mesh.element_areas, 3)
    total = np.bincount(tri, weights=np.repeat(mesh.element_areas * element_values, 3), minlength=mesh.num_vertices)
    area = np.bincount(tri, weights=weights, minlength=mesh.num_vertices)
    return total / area


def penalty_td_elementwise(
    mesh: TriMesh,
    chi: ElementwiseField,
    archive: ShapeArchive,
    params: PenaltyParams,
    variant: PenaltyVariant = "paper",
) -> np.ndarray:
    """
    要素ごとのペナルティ微分

    −Σ_j δ(γ²/(2r_j³) + 1/(2r_j))·f_j·exp(δ(γ²/r_j − r_j))、r_j = max(dist, r_min)。
    f_j は variant "paper" で (1 − 2χ)、"derived" で (1 − 2χ_j)。
    """
    if variant not in PENALTY_VARIANTS:
        raise ConfigError(
            f"penalty_td_variant が不正です: {variant}", details={"key": "penalty_td_variant"}
        )
    if len(chi) != mesh.num_triangles:
        raise AssemblyError("特性関数の長さが三角形数と一致しません")

    values = np.zeros(mesh.num_triangles)
    gamma, delta = params.gamma, params.delta
    for entry in archive:
        r = max(shape_distance(mesh, chi, entry.chi), params.r_min)
        scale = delta * (gamma * gamma / (2.0 * r ** 3) + 1.0 / (2.0 * r)) * math.exp(params.exponent(r))
        flip = 1.0 - 2.0 * (chi.values if variant == "paper" else entry.chi.values)
        values -= scale * flip
    return values


def generalized_td_penalty(
    mesh: TriMesh,
    chi: ElementwiseField,
    archive: ShapeArchive,
    params: PenaltyParams,
    variant: PenaltyVariant = "paper",
) -> TDField:
    """ペナルティ項の一般化トポロジー微分（空のアーカイブでは 0）"""
    if len(archive) == 0:
        return TDField.from_values(np.zeros(mesh.num_vertices))
    element_values = penalty_td_elementwise(mesh, chi, archive, params, variant)
    return TDField.from_values(vertex_average(mesh, element_values))


def total_generalized_td(flow_td: TDField, penalty_td: TDField) -> TDField:
    """頂点ごとの和"""
    if len(flow_td) != len(penalty_td):
        raise AssemblyError(
            "トポロジー微分の長さが一致しません",
            details={"flow": len(flow_td), "penalty": len(penalty_td)},
        )
    return TDField.from_values(flow_td.values + penalty_td.values)
