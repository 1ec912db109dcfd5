"""
疎直接ソルバー

scipy の SuperLU 分解を行列のハッシュでキャッシュし、同じ行列に対する
複数の右辺（状態方程式と随伴方程式）で分解を再利用する。
"""

import hashlib
import logging
from collections import OrderedDict
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..interfaces.data_models import (
    ResidualToleranceError,
    SingularMatrixError,
    SolverError,
    check_finite,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-10
MAX_REFINEMENT_STEPS = 2


def hash_csr_matrix(matrix: sp.csr_matrix) -> str:
    """CSR 行列の内容ハッシュ"""
    return (
        hashlib.sha1(np.ascontiguousarray(matrix.indices)).hexdigest()
        + hashlib.sha1(np.ascontiguousarray(matrix.indptr)).hexdigest()
        + hashlib.sha1(np.ascontiguousarray(matrix.data)).hexdigest()
    )


class SparseLUSolver:
    """
    LU 分解キャッシュ付きの直接ソルバー

    残差 ‖Ax − b‖ ≤ tol·max(1, ‖b‖) を満たさない場合は反復改良を行い、
    それでも満たさなければ ResidualToleranceError。
    """

    def __init__(self, cache_size: int = 4, tolerance: float = RESIDUAL_TOLERANCE):
        self.cache_size = cache_size
        self.tolerance = tolerance
        self._factors: "OrderedDict[str, object]" = OrderedDict()

    def _check_system(self, matrix, rhs: np.ndarray) -> sp.csr_matrix:
        if not sp.issparse(matrix):
            raise SolverError("疎行列が必要です", details={"type": type(matrix).__name__})
        matrix = sp.csr_matrix(matrix)
        rows, cols = matrix.shape
        if rows != cols:
            raise SolverError("正方行列が必要です", details={"shape": [rows, cols]})
        if rhs.ndim != 1 or rhs.shape[0] != rows:
            raise SolverError(
                "右辺の長さが行列と一致しません", details={"rows": rows, "rhs": list(rhs.shape)}
            )
        check_finite(matrix.data, "matrix", SolverError)
        check_finite(rhs, "rhs", SolverError)
        return matrix

    def factorize(self, matrix: sp.csr_matrix):
        """分解を取得（キャッシュになければ計算）"""
        key = hash_csr_matrix(matrix)
        factor = self._factors.get(key)
        if factor is not None:
            self._factors.move_to_end(key)
            return factor

        try:
            factor = splu(matrix.tocsc())
        except RuntimeError as e:
            raise SingularMatrixError(
                f"行列が特異です: {e}", details={"size": matrix.shape[0]}
            ) from e

        self._factors[key] = factor
        if len(self._factors) > self.cache_size:
            self._factors.popitem(last=False)
        logger.debug(f"LU 分解: 次数 {matrix.shape[0]}, 非零 {matrix.nnz}")
        return factor

    def solve(self, matrix, rhs) -> np.ndarray:
        """
        Ax = b を解く

        Raises:
            SingularMatrixError: 分解で特異性を検出
            ResidualToleranceError: 残差が許容値を超える
        """
        rhs = np.asarray(rhs, dtype=float)
        matrix = self._check_system(matrix, rhs)
        factor = self.factorize(matrix)

        x = factor.solve(rhs)
        bound = self.tolerance * max(1.0, float(np.linalg.norm(rhs)))
        residual = rhs - matrix @ x
        norm = float(np.linalg.norm(residual))
        steps = 0
        while not norm <= bound and steps < MAX_REFINEMENT_STEPS:
            x = x + factor.solve(residual)
            residual = rhs - matrix @ x
            norm = float(np.linalg.norm(residual))
            steps += 1

        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("解に非有限値が含まれています（特異行列）")
        if not norm <= bound:
            raise ResidualToleranceError(
                f"残差が許容値を超えました: {norm:.3e} > {bound:.3e}",
                details={"residual": norm, "bound": bound, "refinement_steps": steps},
            )
        if steps:
            logger.debug(f"反復改良 {steps} 回で残差 {norm:.3e}")
        return x


_solver: Optional[SparseLUSolver] = None


def get_solver() -> SparseLUSolver:
    """ソルバーインスタンスを取得（シングルトン）"""
    global _solver
    if _solver is None:
        _solver = SparseLUSolver()
    return _solver


def solve(matrix, rhs) -> np.ndarray:
    """共有ソルバーで Ax = b を解く"""
    return get_solver().solve(matrix, rhs)
