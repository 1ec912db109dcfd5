"""
単位正方形の構造化三角形メッシュ

保持領域 D = (0,1)² を一様格子に分割し、各セルを左下→右上の対角線で
2 つの三角形に分ける。境界辺は中点で Inlet / Outlet / Wall に分類する。
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from ..interfaces.data_models import MeshError

logger = logging.getLogger(__name__)

INLET_Y_RANGE = (0.35, 0.65)
_TAG_TOL = 1e-12


class BoundaryTag(Enum):
    """境界辺の種別"""
    INLET = "inlet"
    OUTLET = "outlet"
    WALL = "wall"


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    三角形メッシュ（生成後は不変）

    vertices: (Nv, 2) 座標
    triangles: (Nt, 3) 反時計回りの頂点番号
    boundary_edges: (Nb, 2) 境界辺（領域を反時計回りに一周する向き）
    boundary_tags: 境界辺ごとの BoundaryTag（tag_boundary 前は None）
    element_areas: (Nt,) 三角形面積
    """
    n: int
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    element_areas: np.ndarray
    boundary_tags: Optional[tuple] = None

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def is_tagged(self) -> bool:
        return self.boundary_tags is not None

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def min_element_area(self) -> float:
        return float(self.element_areas.min())

    def edges_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        """指定タグの境界辺 (k, 2) を返す"""
        if not self.is_tagged:
            raise MeshError("境界タグが未設定のメッシュです", details={"tag": tag.value})
        mask = np.array([t is tag for t in self.boundary_tags], dtype=bool)
        return self.boundary_edges[mask]

    def has_tag(self, tag: BoundaryTag) -> bool:
        return self.is_tagged and any(t is tag for t in self.boundary_tags)


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """三角形の符号付き面積（反時計回りで正）"""
    p0 = vertices[triangles[:, 0]]
    p1 = vertices[triangles[:, 1]]
    p2 = vertices[triangles[:, 2]]
    return 0.5 * (
        (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
        - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
    )


def build_unit_square_mesh(n: int) -> TriMesh:
    """
    一様な単位正方形メッシュを生成し、境界タグを付与する

    Args:
        n: 1 辺あたりの分割数（n ≥ 1）

    Returns:
        TriMesh: (n+1)² 頂点、2n² 三角形のメッシュ
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise MeshError(f"分割数は 1 以上の整数が必要です: {n}", details={"n": n})
    n = int(n)

    coords = np.arange(n + 1, dtype=float) / n
    xx, yy = np.meshgrid(coords, coords)  # yy[j, i] = j / n
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3).astype(np.int64)

    k = np.arange(n)
    bottom = np.column_stack([vid(k, 0), vid(k + 1, 0)])
    right = np.column_stack([vid(n, k), vid(n, k + 1)])
    top = np.column_stack([vid(n - k, n), vid(n - k - 1, n)])
    left = np.column_stack([vid(0, n - k), vid(0, n - k - 1)])
    boundary_edges = np.vstack([bottom, right, top, left]).astype(np.int64)

    areas = signed_areas(vertices, triangles)
    if np.any(areas <= 0.0):
        raise MeshError("向きが不正な三角形があります")

    mesh = TriMesh(
        n=n,
        vertices=_freeze(vertices),
        triangles=_freeze(triangles),
        boundary_edges=_freeze(boundary_edges),
        element_areas=_freeze(areas),
    )

    if abs(INLET_Y_RANGE[0] * n - round(INLET_Y_RANGE[0] * n)) > 1e-9:
        logger.warning(
            f"0.35·n が整数ではありません (n={n})。離散的な流入口長さは 0.3 からずれます"
        )

    logger.debug(f"メッシュ生成: 頂点 {mesh.num_vertices}, 三角形 {mesh.num_triangles}")
    return tag_boundary(mesh)


def classify_midpoint(x: float, y: float) -> BoundaryTag:
    """境界辺の中点座標からタグを判定"""
    y_low, y_high = INLET_Y_RANGE
    in_band = (y_low - _TAG_TOL) <= y <= (y_high + _TAG_TOL)
    if abs(x) <= _TAG_TOL and in_band:
        return BoundaryTag.INLET
    if abs(x - 1.0) <= _TAG_TOL and in_band:
        return BoundaryTag.OUTLET
    return BoundaryTag.WALL


def tag_boundary(mesh: TriMesh) -> TriMesh:
    """
    境界辺を中点で分類したメッシュを返す

    Returns:
        TriMesh: boundary_tags を設定した新しいメッシュ
    """
    pts = mesh.vertices[mesh.boundary_edges]
    midpoints = pts.mean(axis=1)
    on_square = (
        (np.abs(midpoints[:, 0]) <= _TAG_TOL)
        | (np.abs(midpoints[:, 0] - 1.0) <= _TAG_TOL)
        | (np.abs(midpoints[:, 1]) <= _TAG_TOL)
        | (np.abs(midpoints[:, 1] - 1.0) <= _TAG_TOL)
    )
    if not np.all(on_square):
        raise MeshError("単位正方形の辺上にない境界辺があります")

    tags = tuple(classify_midpoint(float(x), float(y)) for x, y in midpoints)
    return replace(mesh, boundary_tags=tags)


def edge_lengths(mesh: TriMesh, edges: np.ndarray) -> np.ndarray:
    """辺の長さ"""
    pts = mesh.vertices[edges]
    return np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)


def boundary_length(mesh: TriMesh, tag: Optional[BoundaryTag] = None) -> float:
    """
    境界長さ

    Args:
        tag: None の場合は境界全体
    """
    edges = mesh.boundary_edges if tag is None else mesh.edges_with_tag(tag)
    return float(edge_lengths(mesh, edges).sum())


def outward_normals(mesh: TriMesh, edges: np.ndarray) -> np.ndarray:
    """反時計回りに並んだ境界辺の外向き単位法線"""
    pts = mesh.vertices[edges]
    tangent = pts[:, 1] - pts[:, 0]
    tangent /= np.linalg.norm(tangent, axis=1)[:, None]
    return np.column_stack([tangent[:, 1], -tangent[:, 0]])
