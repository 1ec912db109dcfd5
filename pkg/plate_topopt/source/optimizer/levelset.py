"""
レベルセット関数の操作

流体領域は Ω = {ψ < 0}。ψ は P1 の頂点値で、整合質量行列による L² ノルムで
常に 1 に正規化する。特性関数 χ は要素の頂点平均の符号で決める。
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..fem import ElementwiseField, ScalarFieldP1, p1_mass_matrix
from ..interfaces.data_models import (
    AssemblyError,
    ProjectionError,
    StationaryFieldError,
    check_finite,
)
from ..mesh import TriMesh
from ..topderiv import TDField

logger = logging.getLogger(__name__)

GOLDEN_RATIO_FRACTION = 0.6180339887
ALIGNED_SINE = 1e-14
_MAX_BISECTION_STEPS = 200


@dataclass(frozen=True, eq=False)
class LevelSet:
    """正規化されたレベルセット関数"""
    psi: ScalarFieldP1

    @classmethod
    def normalized(cls, mesh: TriMesh, values) -> "LevelSet":
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.num_vertices,):
            raise AssemblyError(
                "レベルセットの長さが頂点数と一致しません",
                details={"values": list(values.shape), "vertices": mesh.num_vertices},
            )
        check_finite(values, "levelset", AssemblyError)
        norm = l2_norm(mesh, values)
        if not norm > 0.0:
            raise AssemblyError("レベルセットが恒等的に 0 です")
        return cls(ScalarFieldP1(values / norm))

    @property
    def values(self) -> np.ndarray:
        return self.psi.values

    def __len__(self) -> int:
        return len(self.psi)


def l2_inner(mesh: TriMesh, a: np.ndarray, b: np.ndarray) -> float:
    """整合 P1 質量行列による ⟨a, b⟩"""
    return float(a @ (p1_mass_matrix(mesh) @ b))


def l2_norm(mesh: TriMesh, values: np.ndarray) -> float:
    return math.sqrt(max(l2_inner(mesh, values, values), 0.0))


def element_means(mesh: TriMesh, values: np.ndarray) -> np.ndarray:
    """要素ごとの頂点値の平均"""
    return values[mesh.triangles].mean(axis=1)


def characteristic_from_levelset(psi: LevelSet, mesh: TriMesh) -> ElementwiseField:
    """χ_e = 1（頂点平均 < 0）/ 0"""
    return ElementwiseField((element_means(mesh, psi.values) < 0.0).astype(float))


def alpha_from_characteristic(chi: ElementwiseField, alpha_L: float, alpha_U: float) -> ElementwiseField:
    """流体要素 (χ = 1) で α_L、固体要素で α_U"""
    if not (alpha_L > 0.0 and alpha_U > 0.0):
        raise AssemblyError(
            "α_L, α_U は正の値が必要です", details={"alpha_L": alpha_L, "alpha_U": alpha_U}
        )
    return ElementwiseField(np.where(chi.values == 1.0, alpha_L, alpha_U))


def alpha_from_levelset(psi: LevelSet, mesh: TriMesh, alpha_L: float, alpha_U: float) -> ElementwiseField:
    return alpha_from_characteristic(characteristic_from_levelset(psi, mesh), alpha_L, alpha_U)


def fluid_volume(mesh: TriMesh, chi: ElementwiseField) -> float:
    """|Ω| = Σ_e A_e χ_e"""
    if len(chi) != mesh.num_triangles:
        raise AssemblyError("特性関数の長さが三角形数と一致しません")
    return float(np.sum(mesh.element_areas * chi.values))


def _tie_break(mesh: TriMesh, values: np.ndarray) -> np.ndarray:
    """平坦な ψ に加える決定的な傾斜（y = 0.5 からの距離 + 黄金比の端数）"""
    index = np.arange(mesh.num_vertices, dtype=float)
    ramp = np.abs(mesh.vertices[:, 1] - 0.5) + 1e-6 * np.mod(index * GOLDEN_RATIO_FRACTION, 1.0)
    scale = max(float(np.max(np.abs(values))), 1.0)
    return 1e-3 * scale * ramp


def _separating_shift(means: np.ndarray, shift: float) -> float:
    """同じ要素集合を与えるシフトのうち、隣接する平均値の中点"""
    inside = means < shift
    if inside.any() and (~inside).any():
        return 0.5 * (float(means[inside].max()) + float(means[~inside].min()))
    return shift


def volume_project(psi: LevelSet, mesh: TriMesh, V_L: float, V_U: float) -> LevelSet:
    """
    体積制約 V_L ≤ |Ω| ≤ V_U への射影

    制約を満たしていれば ψ をそのまま返す。違反時は ψ − c の c を二分法で求め、
    違反した側の境界に要素面積の分解能で合わせてから再正規化する。

    Raises:
        ProjectionError: 許容集合に入るシフトが見つからない
    """
    if not 0.0 < V_L <= V_U <= 1.0:
        raise ProjectionError(
            "体積制約は 0 < V_L ≤ V_U ≤ 1 が必要です", details={"V_L": V_L, "V_U": V_U}
        )
    areas = mesh.element_areas
    values = psi.values
    means = element_means(mesh, values)
    current = float(np.sum(areas[means < 0.0]))
    if V_L <= current <= V_U:
        return psi

    if float(np.ptp(means)) <= 1e-12 * max(1.0, float(np.max(np.abs(means)))):
        logger.debug("平坦なレベルセットに決定的な傾斜を付加")
        values = values + _tie_break(mesh, values)
        means = element_means(mesh, values)

    def volume(shift: float) -> float:
        return float(np.sum(areas[means < shift]))

    tol = 0.5 * mesh.min_element_area
    if current > V_U:
        lo, hi = float(means.min()) - 1.0, 0.0
        for _ in range(_MAX_BISECTION_STEPS):
            if V_U - volume(lo) <= tol:
                break
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            if volume(mid) <= V_U:
                lo = mid
            else:
                hi = mid
        shift = lo
    else:
        lo, hi = 0.0, float(means.max()) + 1.0
        for _ in range(_MAX_BISECTION_STEPS):
            if volume(hi) - V_L <= tol:
                break
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            if volume(mid) >= V_L:
                hi = mid
            else:
                lo = mid
        shift = hi

    shift = _separating_shift(means, shift)
    shifted = values - shift
    projected = float(np.sum(areas[element_means(mesh, shifted) < 0.0]))
    if not V_L - 1e-12 <= projected <= V_U + 1e-12:
        raise ProjectionError(
            f"体積制約を満たすシフトが見つかりません: |Ω| = {projected:.6f}",
            details={"volume": projected, "V_L": V_L, "V_U": V_U},
        )
    logger.debug(f"体積射影: {current:.6f} → {projected:.6f}（シフト {shift:.3e}）")
    return LevelSet.normalized(mesh, shifted)


def _scaled(g: TDField) -> np.ndarray:
    peak = float(np.max(np.abs(g.values))) if len(g) else 0.0
    if peak == 0.0:
        raise StationaryFieldError("一般化トポロジー微分が恒等的に 0 です")
    return g.values / peak


def angle(psi: LevelSet, g: TDField, mesh: TriMesh) -> float:
    """
    θ = arccos(⟨ψ, g⟩ / (‖ψ‖‖g‖))

    g は最大値ノルムで割ってから内積を取る。

    Raises:
        StationaryFieldError: g ≡ 0
    """
    if len(g) != len(psi):
        raise AssemblyError("レベルセットとトポロジー微分の長さが一致しません")
    gs = _scaled(g)
    denom = l2_norm(mesh, psi.values) * l2_norm(mesh, gs)
    cosine = l2_inner(mesh, psi.values, gs) / denom
    return float(np.arccos(np.clip(cosine, -1.0, 1.0)))


def update_levelset(psi: LevelSet, g: TDField, kappa: float, mesh: TriMesh) -> LevelSet:
    """
    球面補間による更新

    ψ' = [sin((1−κ)θ)ψ + sin(κθ)g/‖g‖] / sin θ を再正規化する。
    """
    if not 0.0 <= kappa <= 1.0:
        raise AssemblyError(f"κ は [0, 1] の範囲が必要です: {kappa}", details={"kappa": kappa})
    theta = angle(psi, g, mesh)
    sine = math.sin(theta)
    if kappa == 0.0 or sine < ALIGNED_SINE:
        return psi
    gs = _scaled(g)
    direction = gs / l2_norm(mesh, gs)
    values = (math.sin((1.0 - kappa) * theta) * psi.values + math.sin(kappa * theta) * direction) / sine
    return LevelSet.normalized(mesh, values)


def initial_levelset(mesh: TriMesh) -> LevelSet:
    """全流体の初期形状（負の定数、正規化済み）"""
    return LevelSet.normalized(mesh, -np.ones(mesh.num_vertices))
