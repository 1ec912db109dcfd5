"""
三角形・線分の数値積分則と 2 次 Lagrange 基底

三角形は重心座標 (λ0, λ1, λ2) で表す。局所節点の順序は
頂点 0,1,2 と辺中点 3=(0,1), 4=(1,2), 5=(2,0)。
"""

import numpy as np

# 6 点・4 次精度の三角形積分則（重みの和は 1、面積を掛けて使う）
_A1, _W1 = 0.44594849091596488632, 0.22338158967801146570
_A2, _W2 = 0.09157621350977074346, 0.10995174365532186764

TRIANGLE_POINTS = np.array([
    [1.0 - 2.0 * _A1, _A1, _A1],
    [_A1, 1.0 - 2.0 * _A1, _A1],
    [_A1, _A1, 1.0 - 2.0 * _A1],
    [1.0 - 2.0 * _A2, _A2, _A2],
    [_A2, 1.0 - 2.0 * _A2, _A2],
    [_A2, _A2, 1.0 - 2.0 * _A2],
])
TRIANGLE_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

# 区間 [0,1] 上の 3 点 Gauss 則（5 次まで厳密）
_G = np.sqrt(15.0) / 10.0
GAUSS_POINTS_1D = np.array([0.5 - _G, 0.5, 0.5 + _G])
GAUSS_WEIGHTS_1D = np.array([5.0, 8.0, 5.0]) / 18.0

LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def p2_basis(bary: np.ndarray) -> np.ndarray:
    """
    2 次基底関数の値

    Args:
        bary: (Q, 3) 重心座標

    Returns:
        np.ndarray: (Q, 6)
    """
    l0, l1, l2 = bary[:, 0], bary[:, 1], bary[:, 2]
    return np.column_stack([
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l0 * l1,
        4.0 * l1 * l2,
        4.0 * l2 * l0,
    ])


def p2_gradient_coefficients(bary: np.ndarray) -> np.ndarray:
    """
    ∇N_i = Σ_k C[q, i, k] ∇λ_k となる係数 C

    Returns:
        np.ndarray: (Q, 6, 3)
    """
    q = bary.shape[0]
    coeff = np.zeros((q, 6, 3))
    for k in range(3):
        coeff[:, k, k] = 4.0 * bary[:, k] - 1.0
    for local, (a, b) in enumerate(LOCAL_EDGES, start=3):
        coeff[:, local, a] = 4.0 * bary[:, b]
        coeff[:, local, b] = 4.0 * bary[:, a]
    return coeff


def p2_edge_basis(s: np.ndarray) -> np.ndarray:
    """
    辺上の 2 次基底（始点・中点・終点の順）

    Args:
        s: 辺パラメータ ∈ [0, 1]

    Returns:
        np.ndarray: (len(s), 3)
    """
    return np.column_stack([
        (1.0 - s) * (1.0 - 2.0 * s),
        4.0 * s * (1.0 - s),
        s * (2.0 * s - 1.0),
    ])


def barycentric_gradients(vertices: np.ndarray, triangles: np.ndarray):
    """
    重心座標の勾配（要素内で一定）と面積

    Returns:
        tuple: ((Nt, 3, 2) 勾配, (Nt,) 面積)
    """
    p0 = vertices[triangles[:, 0]]
    p1 = vertices[triangles[:, 1]]
    p2 = vertices[triangles[:, 2]]
    det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
    grads = np.empty((triangles.shape[0], 3, 2))
    grads[:, 0, 0] = p1[:, 1] - p2[:, 1]
    grads[:, 0, 1] = p2[:, 0] - p1[:, 0]
    grads[:, 1, 0] = p2[:, 1] - p0[:, 1]
    grads[:, 1, 1] = p0[:, 0] - p2[:, 0]
    grads[:, 2, 0] = p0[:, 1] - p1[:, 1]
    grads[:, 2, 1] = p1[:, 0] - p0[:, 0]
    grads /= det[:, None, None]
    return grads, 0.5 * det
