"""
共通データモデル定義

このモジュールは、最適化ループ・デフレーション・入出力の各層で共有される
記録型と例外型を定義します。

実装方針：
- 全てのフィールドは型ヒント付き
- 記録型は dataclass でシリアライズ（to_dict）に対応
- 例外は error_code と details を持ち、CLI で機械可読な 1 行に変換される
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np


# ========================================
# Optimization Records
# ========================================

class OptimizationStatus(Enum):
    """最適化の終了状態"""
    CONVERGED = "converged"          # θ < eps_theta
    STATIONARY = "stationary"        # 一般化トポロジー微分が恒等的に 0
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class IterationRecord:
    """
    1 反復分の履歴

    kappa は当該反復で採用したステップ幅（収束判定で停止した反復では 0）。
    forced_step は直線探索が kappa_min に達して減少なしで採用した場合に True。
    """
    iteration: int
    objective: float
    penalty: float
    theta: float
    volume: float
    fulfillment: float
    kappa: float
    forced_step: bool = False

    def to_dict(self) -> Dict[str, Any]:
        """辞書形式に変換"""
        return {
            "iter": self.iteration,
            "J": self.objective,
            "P": self.penalty,
            "theta": self.theta,
            "volume": self.volume,
            "fulfillment": self.fulfillment,
            "kappa": self.kappa,
        }


@dataclass
class PhaseSummary:
    """デフレーション 1 ラウンド内の 1 フェーズ（deflated / restart）の要約"""
    iterations: int
    status: OptimizationStatus
    history: List[IterationRecord] = field(default_factory=list)
    forced_steps: int = 0  # kappa_min で減少なしに採用したステップ数

    @property
    def converged(self) -> bool:
        return self.status in (OptimizationStatus.CONVERGED, OptimizationStatus.STATIONARY)


# ========================================
# Error Models
# ========================================

class PlateOptError(Exception):
    """plate-topopt 基底例外"""
    default_code = "plate_opt_error"

    def __init__(self, message: str, error_code: str = None, details: Dict[str, Any] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.default_code
        self.details = details or {}


class MeshError(PlateOptError):
    """メッシュ生成・メッシュ整合性のエラー"""
    default_code = "mesh_invalid"


class AssemblyError(PlateOptError):
    """有限要素組み立ての入力エラー"""
    default_code = "assembly_invalid"


class SolverError(PlateOptError):
    """線形ソルバーのエラー"""
    default_code = "solver_failed"


class SingularMatrixError(SolverError):
    """分解時に特異性を検出"""
    default_code = "solver_singular"


class ResidualToleranceError(SolverError):
    """残差が許容値を満たさない"""
    default_code = "solver_residual"


class ConsistencyError(PlateOptError):
    """流入・流出フラックス不均衡などの内部整合性エラー"""
    default_code = "consistency_failed"


class ProjectionError(PlateOptError):
    """体積制約への射影が失敗"""
    default_code = "projection_failed"


class StationaryFieldError(PlateOptError):
    """一般化トポロジー微分が恒等的に 0（停留点）"""
    default_code = "stationary_field"


class ConfigError(PlateOptError):
    """設定値の型・キー・不変条件のエラー"""
    default_code = "config_invalid"


class OutputError(PlateOptError):
    """ファイル出力の I/O エラー"""
    default_code = "output_failed"


class ShapeFileError(PlateOptError):
    """形状ファイルの読み込み・整合性エラー"""
    default_code = "shape_file_invalid"


def format_error_line(error: PlateOptError) -> str:
    """
    CLI 用の機械可読エラー行を生成

    Returns:
        str: ``error code=<code> message=<json文字列> details=<json>``
    """
    details = json.dumps(error.details, sort_keys=True, default=str)
    message = json.dumps(error.message, ensure_ascii=False)
    return f"error code={error.error_code} message={message} details={details}"


def check_finite(values, name: str, error_cls=PlateOptError) -> None:
    """配列が有限値のみからなることを確認"""
    if not np.all(np.isfinite(values)):
        raise error_cls(f"{name} に非有限値が含まれています", details={"field": name})


def summarize_details(details: Optional[Dict[str, Any]]) -> str:
    """ログ出力用の details 要約"""
    if not details:
        return ""
    return ", ".join(f"{k}={v}" for k, v in sorted(details.items()))
