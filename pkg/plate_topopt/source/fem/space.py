"""
P2/P1 Taylor–Hood 空間の自由度配置と要素レベルの前計算

自由度番号: 頂点 0..Nv-1、続いて辺 Nv + e（辺は (小さい番号, 大きい番号) で
辞書順に整列）。メッシュごとに 1 回だけ構築し、弱参照キャッシュに保持する。
"""

import logging
import weakref
from functools import cached_property
from typing import Dict

import numpy as np
import scipy.sparse as sp

from ..interfaces.data_models import MeshError
from ..mesh import BoundaryTag, TriMesh
from .quadrature import (
    LOCAL_EDGES,
    TRIANGLE_POINTS,
    TRIANGLE_WEIGHTS,
    barycentric_gradients,
    p2_basis,
    p2_gradient_coefficients,
)

logger = logging.getLogger(__name__)

_SPACES: "weakref.WeakKeyDictionary[TriMesh, P2Space]" = weakref.WeakKeyDictionary()


def assemble_local(row_dofs: np.ndarray, col_dofs: np.ndarray, local: np.ndarray, shape) -> sp.csr_matrix:
    """
    要素行列 (Nt, r, c) を全体行列に足し込む

    重複は COO → CSR 変換時に入力順で加算される。
    """
    rows = np.broadcast_to(row_dofs[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(col_dofs[:, None, :], local.shape).ravel()
    matrix = sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()
    matrix.sum_duplicates()
    return matrix


def assemble_vector(dofs: np.ndarray, local: np.ndarray, size: int) -> np.ndarray:
    """要素ベクトル (Nt, k) を全体ベクトルに足し込む"""
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=size)


class P2Space:
    """1 つのメッシュ上の P2 速度 / P1 圧力空間"""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        nv = mesh.num_vertices
        tri = mesh.triangles

        local_edges = np.stack([tri[:, [a, b]] for a, b in LOCAL_EDGES], axis=1)  # (Nt, 3, 2)
        pairs = np.sort(local_edges.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        self.edges = edges
        self.num_vertices = nv
        self.num_dofs = nv + edges.shape[0]
        self.element_dofs = np.hstack([tri, nv + inverse.reshape(-1, 3)]).astype(np.int64)

        self.dof_coordinates = np.vstack([mesh.vertices, mesh.vertices[edges].mean(axis=1)])

        self.grad_lambda, self.areas = barycentric_gradients(mesh.vertices, tri)
        self.quad_bary = TRIANGLE_POINTS
        self.quad_weights = self.areas[:, None] * TRIANGLE_WEIGHTS[None, :]  # (Nt, Q)
        self.basis = p2_basis(TRIANGLE_POINTS)  # (Q, 6)
        coeff = p2_gradient_coefficients(TRIANGLE_POINTS)  # (Q, 6, 3)
        self.basis_gradients = np.einsum("qik,ekd->eqid", coeff, self.grad_lambda)  # (Nt, Q, 6, 2)
        self.quad_points = np.einsum("qk,ekd->eqd", TRIANGLE_POINTS, mesh.vertices[tri])  # (Nt, Q, 2)

        self._edge_keys = edges[:, 0] * nv + edges[:, 1]
        self._smoothing: Dict[float, sp.csr_matrix] = {}
        logger.debug(f"P2 空間を構築: 自由度 {self.num_dofs}（辺 {edges.shape[0]}）")

    # ----------------------------------------
    # 自由度の検索
    # ----------------------------------------

    def edge_dofs_of(self, edges: np.ndarray) -> np.ndarray:
        """頂点対 (k, 2) で与えた辺の中点自由度番号"""
        ordered = np.sort(edges, axis=1)
        keys = ordered[:, 0] * self.num_vertices + ordered[:, 1]
        idx = np.minimum(np.searchsorted(self._edge_keys, keys), self._edge_keys.shape[0] - 1)
        if np.any(self._edge_keys[idx] != keys):
            raise MeshError("メッシュに存在しない辺が指定されました")
        return self.num_vertices + idx

    def boundary_edge_dofs(self, tag: BoundaryTag = None) -> np.ndarray:
        """境界辺ごとの (始点, 中点, 終点) 自由度 (k, 3)"""
        edges = self.mesh.boundary_edges if tag is None else self.mesh.edges_with_tag(tag)
        if edges.shape[0] == 0:
            return np.zeros((0, 3), dtype=np.int64)
        mids = self.edge_dofs_of(edges)
        return np.column_stack([edges[:, 0], mids, edges[:, 1]]).astype(np.int64)

    def boundary_dofs(self, tag: BoundaryTag = None) -> np.ndarray:
        """境界上の P2 自由度（昇順・重複なし）"""
        return np.unique(self.boundary_edge_dofs(tag).ravel())

    # ----------------------------------------
    # 積分点での補間
    # ----------------------------------------

    def p2_at_quadrature(self, values: np.ndarray) -> np.ndarray:
        """P2 節点値 → 積分点値 (Nt, Q)"""
        return values[self.element_dofs] @ self.basis.T

    def p1_at_quadrature(self, values: np.ndarray) -> np.ndarray:
        """P1 頂点値 → 積分点値 (Nt, Q)"""
        return values[self.mesh.triangles] @ self.quad_bary.T

    def load_vector(self, integrand_at_quadrature: np.ndarray) -> np.ndarray:
        """b_i = ∫ f N_i（f は積分点値 (Nt, Q)）"""
        local = np.einsum("eq,qi->ei", self.quad_weights * integrand_at_quadrature, self.basis)
        return assemble_vector(self.element_dofs, local, self.num_dofs)

    # ----------------------------------------
    # 係数に依存しない行列（遅延構築）
    # ----------------------------------------

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """P2 スカラー剛性行列 ∫∇N_i·∇N_j"""
        local = np.einsum("eq,eqid,eqjd->eij", self.quad_weights, self.basis_gradients, self.basis_gradients)
        return assemble_local(self.element_dofs, self.element_dofs, local, (self.num_dofs, self.num_dofs))

    @cached_property
    def _reference_mass(self) -> np.ndarray:
        """要素質量行列 (Nt, 6, 6)"""
        return np.einsum("eq,qi,qj->eij", self.quad_weights, self.basis, self.basis)

    @cached_property
    def mass(self) -> sp.csr_matrix:
        """P2 スカラー質量行列 ∫N_i N_j"""
        return self.weighted_mass(np.ones(self.mesh.num_triangles))

    def weighted_mass(self, coefficient: np.ndarray) -> sp.csr_matrix:
        """要素ごとの定数係数 c_e を掛けた質量行列 Σ_e c_e ∫_e N_i N_j"""
        local = coefficient[:, None, None] * self._reference_mass
        return assemble_local(self.element_dofs, self.element_dofs, local, (self.num_dofs, self.num_dofs))

    @cached_property
    def p1_mass(self) -> sp.csr_matrix:
        """P1 質量行列（要素ごと A/12·(1+δ_ij)）"""
        base = (np.ones((3, 3)) + np.eye(3)) / 12.0
        local = self.areas[:, None, None] * base[None, :, :]
        tri = self.mesh.triangles
        nv = self.num_vertices
        return assemble_local(tri, tri, local, (nv, nv))

    @cached_property
    def divergence(self):
        """
        B_x, B_y: (Nv, Ndof)、B_kj = -∫ λ_k ∂N_j

        Returns:
            tuple: (B_x, B_y)
        """
        shape = (self.num_vertices, self.num_dofs)
        tri = self.mesh.triangles
        blocks = []
        for d in range(2):
            local = -np.einsum("eq,qk,eqj->ekj", self.quad_weights, self.quad_bary, self.basis_gradients[..., d])
            blocks.append(assemble_local(tri, self.element_dofs, local, shape))
        return tuple(blocks)

    @cached_property
    def pressure_mean(self) -> np.ndarray:
        """c_k = ∫ λ_k（圧力の平均値拘束）"""
        local = np.repeat(self.areas[:, None] / 3.0, 3, axis=1)
        return assemble_vector(self.mesh.triangles, local, self.num_vertices)

    def smoothing_operator(self, dt: float) -> sp.csr_matrix:
        """S = M/dt + K（自然境界条件）"""
        key = float(dt)
        if key not in self._smoothing:
            self._smoothing[key] = (self.mass / key + self.stiffness).tocsr()
        return self._smoothing[key]


def get_p2_space(mesh: TriMesh) -> P2Space:
    """メッシュに対応する P2 空間（キャッシュ済み）"""
    space = _SPACES.get(mesh)
    if space is None:
        space = P2Space(mesh)
        _SPACES[mesh] = space
    return space
