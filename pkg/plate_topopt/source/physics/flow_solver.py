"""
状態方程式と随伴方程式の求解

- solve_flow: 流入口に放物線分布を与えた Stokes–Brinkman 流れ
- solve_smoothing: 熱方程式 1 ステップによる速度の平滑化
- solve_adjoint_smoothing / solve_adjoint_flow: 目的関数の随伴
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..fem import (
    ElementwiseField,
    ScalarFieldP1,
    StokesBrinkmanSystem,
    VectorFieldP2,
    assemble_smoothing_operator,
    assemble_stokes_brinkman,
    boundary_flux,
    get_p2_space,
)
from ..fem.assembly import DirichletData
from ..interfaces.data_models import AssemblyError, ConsistencyError
from ..linalg import solve
from ..mesh import BoundaryTag, TriMesh

logger = logging.getLogger(__name__)

FLUX_BALANCE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class InflowProfile:
    """
    流入口・流出口の x 方向放物線分布

    u_x = amplitude·(y − y_low)(y_high − y)、帯の外では 0。
    既定値は y = 0.5 で 1 となる振幅。
    """
    amplitude: float = 400.0 / 9.0
    y_low: float = 0.35
    y_high: float = 0.65

    @property
    def peak(self) -> float:
        half = 0.5 * (self.y_high - self.y_low)
        return self.amplitude * half * half

    def __call__(self, x: np.ndarray, y: np.ndarray):
        y = np.asarray(y, dtype=float)
        ux = self.amplitude * (y - self.y_low) * (self.y_high - y)
        ux = np.where((y >= self.y_low) & (y <= self.y_high), ux, 0.0)
        return ux, np.zeros_like(ux)


def no_slip(x: np.ndarray, y: np.ndarray):
    zero = np.zeros_like(np.asarray(x, dtype=float))
    return zero, zero


def default_dirichlet(profile: InflowProfile) -> dict:
    """壁で 0、流入口・流出口で同じ放物線分布"""
    return {
        BoundaryTag.WALL: no_slip,
        BoundaryTag.INLET: profile,
        BoundaryTag.OUTLET: profile,
    }


@dataclass(frozen=True, eq=False)
class FlowState:
    """状態方程式の解"""
    velocity: VectorFieldP2
    pressure: ScalarFieldP1
    multiplier: float
    system: StokesBrinkmanSystem
    inlet_flux: float = 0.0
    outlet_flux: float = 0.0


@dataclass(frozen=True, eq=False)
class SmoothedVelocity:
    """平滑化された速度 u_s"""
    velocity: VectorFieldP2
    dt: float

    def magnitude(self) -> np.ndarray:
        return self.velocity.magnitude()


@dataclass(frozen=True, eq=False)
class AdjointState:
    """随伴変数 (v_s, v, q)"""
    smoothing: VectorFieldP2
    velocity: VectorFieldP2
    pressure: ScalarFieldP1


def solve_flow(
    mesh: TriMesh,
    alpha: ElementwiseField,
    profile: Optional[InflowProfile] = None,
    dirichlet: Optional[Mapping[BoundaryTag, DirichletData]] = None,
) -> FlowState:
    """
    状態方程式を解く

    Args:
        mesh: タグ付きメッシュ（流入口と流出口が必要）
        alpha: 要素ごとの逆透過率
        profile: 流入口分布（dirichlet 未指定時に使用）
        dirichlet: タグごとの Dirichlet データ（指定時は profile より優先）

    Raises:
        AssemblyError: 流入口または流出口がない
        ConsistencyError: 流入・流出フラックスの不均衡
    """
    if dirichlet is None:
        for tag in (BoundaryTag.INLET, BoundaryTag.OUTLET):
            if not mesh.has_tag(tag):
                raise AssemblyError(
                    f"メッシュに {tag.value} 境界がありません（n={mesh.n}）",
                    details={"tag": tag.value, "n": mesh.n},
                )
        dirichlet = default_dirichlet(profile or InflowProfile())

    system = assemble_stokes_brinkman(mesh, alpha, dirichlet)
    velocity, pressure, multiplier = system.split(solve(system.matrix, system.rhs))

    inlet = boundary_flux(mesh, velocity, BoundaryTag.INLET) if mesh.has_tag(BoundaryTag.INLET) else 0.0
    outlet = boundary_flux(mesh, velocity, BoundaryTag.OUTLET) if mesh.has_tag(BoundaryTag.OUTLET) else 0.0
    if abs(inlet + outlet) > FLUX_BALANCE_TOLERANCE:
        raise ConsistencyError(
            f"流入・流出フラックスが釣り合いません: {inlet:.3e} + {outlet:.3e}",
            details={"inlet_flux": inlet, "outlet_flux": outlet},
        )

    logger.debug(f"流れ場を計算: 流入フラックス {inlet:.6e}, 乗数 {multiplier:.3e}")
    return FlowState(
        velocity=velocity,
        pressure=pressure,
        multiplier=multiplier,
        system=system,
        inlet_flux=inlet,
        outlet_flux=outlet,
    )


def _check_velocity(mesh: TriMesh, u: VectorFieldP2, name: str) -> None:
    if len(u) != get_p2_space(mesh).num_dofs:
        raise AssemblyError(f"{name} の長さが P2 自由度数と一致しません")


def solve_smoothing(mesh: TriMesh, u: VectorFieldP2, dt: float) -> SmoothedVelocity:
    """
    (u_s − u)/dt − Δu_s = 0（自然境界条件）を成分ごとに解く
    """
    _check_velocity(mesh, u, "速度")
    space = get_p2_space(mesh)
    operator = assemble_smoothing_operator(mesh, dt)
    ux = solve(operator, space.mass @ u.x.values / dt)
    uy = solve(operator, space.mass @ u.y.values / dt)
    return SmoothedVelocity(VectorFieldP2.from_arrays(ux, uy, space.num_vertices), float(dt))


def smoothing_adjoint_source(
    mesh: TriMesh, smoothed: SmoothedVelocity, u_t: float, norm_eps: float = 1e-12
):
    """
    積分点での 2·(u_s/|u_s|)·min(0, |u_s| − u_t)

    Returns:
        tuple: (x 成分, y 成分) 各 (Nt, Q)
    """
    space = get_p2_space(mesh)
    sx = space.p2_at_quadrature(smoothed.velocity.x.values)
    sy = space.p2_at_quadrature(smoothed.velocity.y.values)
    speed = np.hypot(sx, sy)
    scale = 2.0 * np.minimum(0.0, speed - u_t) / np.maximum(speed, norm_eps)
    return scale * sx, scale * sy


def solve_adjoint_smoothing(
    mesh: TriMesh,
    smoothed: SmoothedVelocity,
    u_t: float,
    dt: float,
    norm_eps: float = 1e-12,
) -> VectorFieldP2:
    """
    v_s/dt − Δv_s = 2·(u_s/|u_s|)·min(0, |u_s| − u_t)（自然境界条件）
    """
    _check_velocity(mesh, smoothed.velocity, "平滑化速度")
    space = get_p2_space(mesh)
    operator = assemble_smoothing_operator(mesh, dt)
    fx, fy = smoothing_adjoint_source(mesh, smoothed, u_t, norm_eps)
    vx = solve(operator, space.load_vector(fx))
    vy = solve(operator, space.load_vector(fy))
    return VectorFieldP2.from_arrays(vx, vy, space.num_vertices)


def solve_adjoint_flow(
    mesh: TriMesh,
    alpha: ElementwiseField,
    v_s: VectorFieldP2,
    dt: float,
    system: Optional[StokesBrinkmanSystem] = None,
):
    """
    −Δv + αv + ∇q = −v_s/dt, div v = 0, v = 0 on ∂D

    右辺の符号は、離散目的関数の α_e 方向微分が +∫_e u·v となるように選ぶ。
    system を渡すと状態方程式と同じ行列（と LU 分解）を再利用する。

    Returns:
        tuple: (VectorFieldP2 v, ScalarFieldP1 q)
    """
    _check_velocity(mesh, v_s, "平滑化随伴")
    if system is None:
        zero = {tag: no_slip for tag in BoundaryTag}
        system = assemble_stokes_brinkman(mesh, alpha, zero)
    elif len(system.alpha) != len(alpha) or not np.array_equal(system.alpha.values, alpha.values):
        raise AssemblyError("再利用する鞍点系の α が一致しません")

    space = get_p2_space(mesh)
    if not np.any(v_s.x.values) and not np.any(v_s.y.values):
        logger.debug("平滑化随伴が 0 のため流れ随伴も 0 とします")
        return VectorFieldP2.zeros(space.num_dofs, space.num_vertices), ScalarFieldP1(np.zeros(mesh.num_vertices))
    rhs = system.velocity_rhs(-(space.mass @ v_s.x.values) / dt, -(space.mass @ v_s.y.values) / dt)
    velocity, pressure, _ = system.split(solve(system.matrix, rhs))
    return velocity, pressure


def solve_adjoint(
    mesh: TriMesh,
    flow: FlowState,
    smoothed: SmoothedVelocity,
    u_t: float,
    dt: float,
    norm_eps: float = 1e-12,
) -> AdjointState:
    """平滑化随伴と流れ随伴を順に解く"""
    v_s = solve_adjoint_smoothing(mesh, smoothed, u_t, dt, norm_eps)
    v, q = solve_adjoint_flow(mesh, flow.system.alpha, v_s, dt, system=flow.system)
    return AdjointState(smoothing=v_s, velocity=v, pressure=q)
