"""
デフレーションペナルティ

既知の最小解集合（アーカイブ）からの L² 距離 r に対し
p(r) = exp(δ(γ²/r − r)) を課し、既知解への再収束を防ぐ。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

import numpy as np

from ..fem import ElementwiseField
from ..interfaces.data_models import ConfigError, MeshError
from ..mesh import TriMesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PenaltyParams:
    """
    ペナルティのパラメータ

    r_min: 距離の下限（r = 0 での発散を避ける）
    exponent_min / exponent_max: exp に渡す指数のクランプ範囲
    """
    gamma: float = 0.4
    delta: float = 50.0
    r_min: float = 1e-3
    exponent_min: float = -745.0
    exponent_max: float = 500.0

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ConfigError(f"gamma は正の値が必要です: {self.gamma}", details={"key": "gamma"})
        if not self.delta > 0.0:
            raise ConfigError(f"delta は正の値が必要です: {self.delta}", details={"key": "delta"})
        if not self.r_min > 0.0:
            raise ConfigError(f"r_min は正の値が必要です: {self.r_min}", details={"key": "r_min"})
        if not self.exponent_min < self.exponent_max:
            raise ConfigError("exponent_min < exponent_max が必要です", details={"key": "exponent_min"})

    def exponent(self, r: float) -> float:
        """クランプ済みの指数 δ(γ² − r²)/r（r は r_min で下限処理）"""
        r = max(float(r), self.r_min)
        value = self.delta * (self.gamma - r) * (self.gamma + r) / r
        return min(max(value, self.exponent_min), self.exponent_max)


@dataclass(frozen=True, eq=False)
class ArchiveEntry:
    """アーカイブに保存した 1 つの最小解"""
    round_index: int
    chi: ElementwiseField
    objective: float = float("nan")
    fulfillment: float = float("nan")


@dataclass(eq=False)
class ShapeArchive:
    """
    既知の最小解の特性関数（追記のみ）

    格納した χ は読み取り専用にする。
    """
    num_triangles: int
    entries: List[ArchiveEntry] = field(default_factory=list)

    @classmethod
    def for_mesh(cls, mesh: TriMesh) -> "ShapeArchive":
        return cls(num_triangles=mesh.num_triangles)

    def append(
        self,
        chi: ElementwiseField,
        round_index: Optional[int] = None,
        objective: float = float("nan"),
        fulfillment: float = float("nan"),
    ) -> ArchiveEntry:
        values = np.array(chi.values, dtype=float)
        if values.shape[0] != self.num_triangles:
            raise MeshError(
                "特性関数の長さがメッシュと一致しません",
                details={"chi": values.shape[0], "triangles": self.num_triangles},
            )
        if not np.all((values == 0.0) | (values == 1.0)):
            raise MeshError("特性関数は 0 または 1 の値のみを取ります")
        values.setflags(write=False)
        entry = ArchiveEntry(
            round_index=len(self.entries) if round_index is None else round_index,
            chi=ElementwiseField(values),
            objective=objective,
            fulfillment=fulfillment,
        )
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ArchiveEntry]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> ArchiveEntry:
        return self.entries[index]


def shape_distance(mesh: TriMesh, chi_1: ElementwiseField, chi_2: ElementwiseField) -> float:
    """
    ‖χ1 − χ2‖_{L²} = √(対称差の面積)
    """
    if len(chi_1) != mesh.num_triangles or len(chi_2) != mesh.num_triangles:
        raise MeshError(
            "特性関数の長さがメッシュと一致しません",
            details={"chi_1": len(chi_1), "chi_2": len(chi_2), "triangles": mesh.num_triangles},
        )
    diff = chi_1.values - chi_2.values
    return math.sqrt(float(np.sum(mesh.element_areas * diff * diff)))


def penalty(r: float, params: PenaltyParams) -> float:
    """p(r) = exp(δ(γ²/r − r))、r = γ で 1、単調減少"""
    return math.exp(params.exponent(r))


def total_penalty(
    mesh: TriMesh, chi: ElementwiseField, archive: ShapeArchive, params: PenaltyParams
) -> float:
    """P(χ) = Σ_j p(‖χ − χ_j‖)（空のアーカイブでは 0）"""
    return math.fsum(penalty(shape_distance(mesh, chi, entry.chi), params) for entry in archive)


def deflated_objective(objective: float, penalty_value: float) -> float:
    """J + P"""
    return objective + penalty_value
