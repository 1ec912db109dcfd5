"""
有限要素組み立て

Stokes–Brinkman 鞍点系・平滑化作用素・質量/剛性行列と、
積分・頂点評価・境界フラックスの補助関数を提供する。
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ..interfaces.data_models import AssemblyError, check_finite
from ..mesh import BoundaryTag, TriMesh
from ..mesh.triangulation import edge_lengths, outward_normals
from .fields import ElementwiseField, ScalarFieldP1, ScalarFieldP2, VectorFieldP2
from .quadrature import GAUSS_POINTS_1D, GAUSS_WEIGHTS_1D, p2_edge_basis
from .space import get_p2_space

logger = logging.getLogger(__name__)

DirichletData = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
Field = Union[ScalarFieldP1, ScalarFieldP2, VectorFieldP2, ElementwiseField]

# 共有頂点では後に適用したタグの値が残る
DIRICHLET_ORDER = (BoundaryTag.WALL, BoundaryTag.INLET, BoundaryTag.OUTLET)


@dataclass(frozen=True, eq=False)
class TaylorHoodDofs:
    """鞍点系の未知数配置 [u_x, u_y, p, λ]"""
    num_velocity: int
    num_pressure: int
    num_vertices: int
    dirichlet_dofs: np.ndarray  # 全体番号（u_x, u_y 両成分）

    @property
    def ux(self) -> slice:
        return slice(0, self.num_velocity)

    @property
    def uy(self) -> slice:
        return slice(self.num_velocity, 2 * self.num_velocity)

    @property
    def pressure(self) -> slice:
        return slice(2 * self.num_velocity, 2 * self.num_velocity + self.num_pressure)

    @property
    def multiplier(self) -> int:
        return 2 * self.num_velocity + self.num_pressure

    @property
    def size(self) -> int:
        return self.multiplier + 1


@dataclass(frozen=True, eq=False)
class StokesBrinkmanSystem:
    """
    組み立て済みの鞍点系

    matrix の Dirichlet 行は単位行に置き換え済み。同じ α・同じ Dirichlet 自由度で
    右辺だけを差し替えて随伴方程式にも使う。
    """
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofs: TaylorHoodDofs
    alpha: ElementwiseField

    def velocity_rhs(self, load_x: np.ndarray, load_y: np.ndarray) -> np.ndarray:
        """速度行に荷重を置き、Dirichlet 行・圧力行・乗数行は 0 の右辺"""
        rhs = np.zeros(self.dofs.size)
        rhs[self.dofs.ux] = load_x
        rhs[self.dofs.uy] = load_y
        rhs[self.dofs.dirichlet_dofs] = 0.0
        return rhs

    def split(self, solution: np.ndarray):
        """
        解ベクトルを場に分解

        Returns:
            tuple: (VectorFieldP2 速度, ScalarFieldP1 圧力, float 乗数)
        """
        velocity = VectorFieldP2.from_arrays(
            solution[self.dofs.ux].copy(), solution[self.dofs.uy].copy(), self.dofs.num_vertices
        )
        pressure = ScalarFieldP1(solution[self.dofs.pressure].copy())
        return velocity, pressure, float(solution[self.dofs.multiplier])


def _check_alpha(mesh: TriMesh, alpha: ElementwiseField) -> None:
    if len(alpha) != mesh.num_triangles:
        raise AssemblyError(
            "α の長さが三角形数と一致しません",
            details={"alpha": len(alpha), "triangles": mesh.num_triangles},
        )
    check_finite(alpha.values, "alpha", AssemblyError)
    if np.any(alpha.values < 0.0):
        raise AssemblyError("α に負の値があります")


def dirichlet_values(
    mesh: TriMesh, dirichlet: Mapping[BoundaryTag, DirichletData]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    境界速度自由度と値を評価

    Returns:
        tuple: (P2 自由度番号, u_x 値, u_y 値)
    """
    if not mesh.is_tagged:
        raise AssemblyError("境界タグが未設定のメッシュです")
    space = get_p2_space(mesh)
    values: Dict[int, Tuple[float, float]] = {}
    for tag in DIRICHLET_ORDER:
        if not mesh.has_tag(tag):
            continue
        if tag not in dirichlet:
            raise AssemblyError(
                f"境界 {tag.value} の Dirichlet データがありません", details={"tag": tag.value}
            )
        dofs = space.boundary_dofs(tag)
        xy = space.dof_coordinates[dofs]
        ux, uy = dirichlet[tag](xy[:, 0], xy[:, 1])
        ux = np.broadcast_to(np.asarray(ux, dtype=float), dofs.shape)
        uy = np.broadcast_to(np.asarray(uy, dtype=float), dofs.shape)
        check_finite(ux, f"dirichlet[{tag.value}]", AssemblyError)
        check_finite(uy, f"dirichlet[{tag.value}]", AssemblyError)
        for dof, vx, vy in zip(dofs.tolist(), ux.tolist(), uy.tolist()):
            values[dof] = (vx, vy)

    dofs = np.array(sorted(values), dtype=np.int64)
    ux = np.array([values[d][0] for d in dofs.tolist()])
    uy = np.array([values[d][1] for d in dofs.tolist()])
    return dofs, ux, uy


def assemble_stokes_brinkman(
    mesh: TriMesh,
    alpha: ElementwiseField,
    dirichlet: Mapping[BoundaryTag, DirichletData],
) -> StokesBrinkmanSystem:
    """
    Stokes–Brinkman 鞍点系を組み立てる

    -Δu + αu + ∇p = 0, div u = 0, ∫p = 0（Lagrange 乗数）。
    全境界で速度 Dirichlet。

    Args:
        mesh: タグ付きメッシュ
        alpha: 要素ごとの α ≥ 0
        dirichlet: タグ → (x, y) ↦ (u_x, u_y)

    Returns:
        StokesBrinkmanSystem
    """
    _check_alpha(mesh, alpha)
    space = get_p2_space(mesh)
    nu, nv = space.num_dofs, space.num_vertices

    bc_dofs, bc_x, bc_y = dirichlet_values(mesh, dirichlet)

    velocity_block = (space.stiffness + space.weighted_mass(alpha.values)).tocsr()
    bx, by = space.divergence
    c = sp.csr_matrix(space.pressure_mean[:, None])
    matrix = sp.bmat(
        [
            [velocity_block, None, bx.T, None],
            [None, velocity_block, by.T, None],
            [bx, by, None, c],
            [None, None, c.T, None],
        ],
        format="csr",
    )

    dofs = TaylorHoodDofs(
        num_velocity=nu,
        num_pressure=nv,
        num_vertices=nv,
        dirichlet_dofs=np.concatenate([bc_dofs, nu + bc_dofs]),
    )

    keep = np.ones(dofs.size)
    keep[dofs.dirichlet_dofs] = 0.0
    matrix = (sp.diags(keep) @ matrix + sp.diags(1.0 - keep)).tocsr()
    matrix.eliminate_zeros()
    matrix.sum_duplicates()

    rhs = np.zeros(dofs.size)
    rhs[bc_dofs] = bc_x
    rhs[nu + bc_dofs] = bc_y

    logger.debug(f"Stokes–Brinkman 系を組み立て: 未知数 {dofs.size}, 非零 {matrix.nnz}")
    return StokesBrinkmanSystem(matrix=matrix, rhs=rhs, dofs=dofs, alpha=alpha)


def assemble_smoothing_operator(mesh: TriMesh, dt: float) -> sp.csr_matrix:
    """熱方程式 1 ステップの作用素 S = M/dt + K（スカラー P2、自然境界条件）"""
    if not dt > 0.0:
        raise AssemblyError(f"dt は正の値が必要です: {dt}", details={"dt": dt})
    return get_p2_space(mesh).smoothing_operator(dt)


def mass_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """P2 スカラー質量行列"""
    return get_p2_space(mesh).mass


def stiffness_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """P2 スカラー剛性行列"""
    return get_p2_space(mesh).stiffness


def p1_mass_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """P1 質量行列（レベルセットの L² 内積）"""
    return get_p2_space(mesh).p1_mass


def _values_at_quadrature(mesh: TriMesh, field: Field):
    space = get_p2_space(mesh)
    if isinstance(field, VectorFieldP2):
        return np.stack(
            [space.p2_at_quadrature(field.x.values), space.p2_at_quadrature(field.y.values)], axis=-1
        )
    if isinstance(field, ScalarFieldP2):
        return space.p2_at_quadrature(field.values)
    if isinstance(field, ScalarFieldP1):
        if len(field) != mesh.num_vertices:
            raise AssemblyError("P1 場の長さが頂点数と一致しません")
        return space.p1_at_quadrature(field.values)
    if isinstance(field, ElementwiseField):
        if len(field) != mesh.num_triangles:
            raise AssemblyError("要素場の長さが三角形数と一致しません")
        return np.broadcast_to(field.values[:, None], space.quad_weights.shape)
    raise AssemblyError(f"積分できない場の型です: {type(field).__name__}")


def integrate(
    mesh: TriMesh,
    integrand: Callable[..., np.ndarray],
    fields: Optional[Mapping[str, Field]] = None,
) -> float:
    """
    ∫_D integrand(x, y, **fields) を要素積分則で近似

    integrand は積分点の座標 x, y (Nt, Q) と、fields の各場の積分点値
    （ベクトル場は (Nt, Q, 2)）をキーワード引数で受け取る。
    """
    space = get_p2_space(mesh)
    values = {name: _values_at_quadrature(mesh, f) for name, f in (fields or {}).items()}
    x = space.quad_points[..., 0]
    y = space.quad_points[..., 1]
    result = np.broadcast_to(np.asarray(integrand(x, y, **values), dtype=float), x.shape)
    return float(np.sum(space.quad_weights * result))


def evaluate_at_vertices(field: Field) -> np.ndarray:
    """
    頂点値を取り出す

    Returns:
        np.ndarray: スカラー場は (Nv,)、ベクトル場は (Nv, 2)
    """
    if isinstance(field, VectorFieldP2):
        return np.column_stack([field.x.vertex_values, field.y.vertex_values])
    if isinstance(field, ScalarFieldP2):
        return field.vertex_values.copy()
    if isinstance(field, ScalarFieldP1):
        return field.values.copy()
    raise AssemblyError(f"頂点値を持たない場の型です: {type(field).__name__}")


def interpolate_p2(mesh: TriMesh, fx, fy) -> VectorFieldP2:
    """関数 (x, y) ↦ 値 を P2 節点で補間したベクトル場"""
    space = get_p2_space(mesh)
    x, y = space.dof_coordinates[:, 0], space.dof_coordinates[:, 1]
    return VectorFieldP2.from_arrays(
        np.broadcast_to(np.asarray(fx(x, y), dtype=float), x.shape).copy(),
        np.broadcast_to(np.asarray(fy(x, y), dtype=float), x.shape).copy(),
        space.num_vertices,
    )


def boundary_flux(mesh: TriMesh, u: VectorFieldP2, tag: BoundaryTag) -> float:
    """
    ∫_{Γ_tag} u·n ds（外向き法線、辺上の 2 次トレースを 3 点 Gauss で積分）
    """
    space = get_p2_space(mesh)
    if len(u) != space.num_dofs:
        raise AssemblyError("速度場の長さが P2 自由度数と一致しません")
    edges = mesh.edges_with_tag(tag)
    if edges.shape[0] == 0:
        return 0.0
    dofs = space.boundary_edge_dofs(tag)
    trace = p2_edge_basis(GAUSS_POINTS_1D)  # (3 点, 3 節点)
    normals = outward_normals(mesh, edges)
    lengths = edge_lengths(mesh, edges)
    un = u.x.values[dofs] * normals[:, [0]] + u.y.values[dofs] * normals[:, [1]]  # (k, 3)
    at_points = un @ trace.T
    return float(np.sum(lengths[:, None] * GAUSS_WEIGHTS_1D[None, :] * at_points))
