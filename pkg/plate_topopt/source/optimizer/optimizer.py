"""
レベルセット法によるトポロジー最適化ループ

各反復: 体積射影済みの ψ → 流れ → 平滑化 → J (+P) → 随伴 → 一般化トポロジー微分
→ 角度判定 → κ を半減させる直線探索 → 球面補間更新。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from ..fem import ElementwiseField
from ..interfaces.data_models import (
    AssemblyError,
    ConfigError,
    IterationRecord,
    OptimizationStatus,
    PhaseSummary,
    StationaryFieldError,
)
from ..mesh import TriMesh
from ..objective import (
    PenaltyParams,
    ShapeArchive,
    deflated_objective,
    evaluate_objective,
    fulfillment_fraction,
    total_penalty,
)
from ..physics import FlowState, InflowProfile, SmoothedVelocity, solve_adjoint, solve_flow, solve_smoothing
from ..topderiv import (
    PENALTY_VARIANTS,
    TDField,
    generalized_td_flow,
    generalized_td_penalty,
    total_generalized_td,
)
from .levelset import (
    LevelSet,
    alpha_from_characteristic,
    angle,
    characteristic_from_levelset,
    fluid_volume,
    initial_levelset,
    update_levelset,
    volume_project,
)

logger = logging.getLogger(__name__)

HistorySink = Callable[[IterationRecord], None]


@dataclass(frozen=True)
class OptimizerSettings:
    """停止角・反復上限・直線探索幅・体積制約"""
    eps_theta: float = 0.035
    max_iterations: int = 500
    kappa_initial: float = 1.0
    kappa_min: float = 2.0 ** -10
    V_L: float = 0.5
    V_U: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.eps_theta <= math.pi:
            raise ConfigError(f"eps_theta は (0, π] の範囲が必要です: {self.eps_theta}", details={"key": "eps_theta"})
        if self.eps_theta >= 0.5 * math.pi:
            logger.warning(f"eps_theta = {self.eps_theta} は π/2 以上です。初回の反復で停止します")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations は 1 以上が必要です", details={"key": "max_iterations"})
        if not 0.0 < self.kappa_min <= self.kappa_initial <= 1.0:
            raise ConfigError(
                "0 < kappa_min ≤ kappa_initial ≤ 1 が必要です",
                details={"key": "kappa_min", "kappa_min": self.kappa_min, "kappa_initial": self.kappa_initial},
            )
        if not 0.0 < self.V_L <= self.V_U <= 1.0:
            raise ConfigError("0 < V_L ≤ V_U ≤ 1 が必要です", details={"key": "V_L", "V_L": self.V_L, "V_U": self.V_U})


@dataclass(frozen=True)
class FlowParameters:
    """状態方程式と目的関数の物理パラメータ"""
    alpha_L: float = 2.5 / 100.0 ** 2
    alpha_U: float = 2.5 / 0.0025 ** 2
    u_t: float = 0.1
    dt: float = 1e-3
    norm_eps: float = 1e-12
    profile: InflowProfile = field(default_factory=InflowProfile)

    def __post_init__(self):
        if not 0.0 < self.alpha_L < self.alpha_U:
            raise ConfigError("0 < alpha_L < alpha_U が必要です", details={"key": "alpha_L"})
        for key in ("u_t", "dt", "norm_eps"):
            if not getattr(self, key) > 0.0:
                raise ConfigError(f"{key} は正の値が必要です", details={"key": key})


@dataclass(frozen=True, eq=False)
class PenaltyContext:
    """デフレーション時のアーカイブとペナルティ設定"""
    archive: ShapeArchive
    params: PenaltyParams = field(default_factory=PenaltyParams)
    variant: str = "paper"

    def __post_init__(self):
        if self.variant not in PENALTY_VARIANTS:
            raise ConfigError(
                f"penalty_td_variant が不正です: {self.variant}", details={"key": "penalty_td_variant"}
            )


@dataclass(frozen=True, eq=False)
class ShapeEvaluation:
    """1 つの形状に対する状態と目的関数値"""
    levelset: Optional[LevelSet]
    chi: ElementwiseField
    alpha: ElementwiseField
    flow: FlowState
    smoothed: SmoothedVelocity
    objective: float
    penalty: float
    fulfillment: float
    volume: float

    @property
    def merit(self) -> float:
        return deflated_objective(self.objective, self.penalty)


def evaluate_shape(
    mesh: TriMesh,
    chi: ElementwiseField,
    flow_params: FlowParameters,
    penalty_context: Optional[PenaltyContext] = None,
    levelset: Optional[LevelSet] = None,
) -> ShapeEvaluation:
    """
    特性関数 χ の形状について状態方程式を解き J, P, 充足率, 体積を計算

    penalty_context がない場合 P = 0。
    """
    p = flow_params
    if len(chi) != mesh.num_triangles:
        raise AssemblyError("特性関数の長さが三角形数と一致しません")
    alpha = alpha_from_characteristic(chi, p.alpha_L, p.alpha_U)
    flow = solve_flow(mesh, alpha, p.profile)
    smoothed = solve_smoothing(mesh, flow.velocity, p.dt)
    penalty = 0.0
    if penalty_context is not None:
        penalty = total_penalty(mesh, chi, penalty_context.archive, penalty_context.params)
    return ShapeEvaluation(
        levelset=levelset,
        chi=chi,
        alpha=alpha,
        flow=flow,
        smoothed=smoothed,
        objective=evaluate_objective(mesh, smoothed, p.u_t),
        penalty=penalty,
        fulfillment=fulfillment_fraction(mesh, smoothed, p.u_t),
        volume=fluid_volume(mesh, chi),
    )


@dataclass
class OptimizationResult:
    levelset: LevelSet
    status: OptimizationStatus
    history: List[IterationRecord]
    evaluation: ShapeEvaluation

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def forced_steps(self) -> int:
        return sum(1 for record in self.history if record.forced_step)

    @property
    def converged(self) -> bool:
        return self.status in (OptimizationStatus.CONVERGED, OptimizationStatus.STATIONARY)

    def phase_summary(self) -> PhaseSummary:
        return PhaseSummary(
            iterations=self.iterations,
            status=self.status,
            history=list(self.history),
            forced_steps=self.forced_steps,
        )


class LevelSetOptimizer:
    """体積制約付きレベルセット最適化（デフレーションペナルティ対応）"""

    def __init__(
        self,
        mesh: TriMesh,
        settings: Optional[OptimizerSettings] = None,
        flow_params: Optional[FlowParameters] = None,
        penalty_context: Optional[PenaltyContext] = None,
        history_sink: Optional[HistorySink] = None,
    ):
        self.mesh = mesh
        self.settings = settings or OptimizerSettings()
        self.flow_params = flow_params or FlowParameters()
        self.penalty_context = penalty_context
        self.history_sink = history_sink

    @property
    def deflated(self) -> bool:
        return self.penalty_context is not None and len(self.penalty_context.archive) > 0

    def evaluate(self, psi: LevelSet) -> ShapeEvaluation:
        """レベルセットが表す形状を評価"""
        chi = characteristic_from_levelset(psi, self.mesh)
        context = self.penalty_context if self.deflated else None
        return evaluate_shape(self.mesh, chi, self.flow_params, context, levelset=psi)

    def topological_derivative(self, evaluation: ShapeEvaluation) -> TDField:
        """随伴を解いて一般化トポロジー微分を組み立てる"""
        p = self.flow_params
        adjoint = solve_adjoint(self.mesh, evaluation.flow, evaluation.smoothed, p.u_t, p.dt, p.norm_eps)
        g = generalized_td_flow(evaluation.flow.velocity, adjoint.velocity, p.alpha_L, p.alpha_U)
        if self.deflated:
            ctx = self.penalty_context
            g = total_generalized_td(
                g, generalized_td_penalty(self.mesh, evaluation.chi, ctx.archive, ctx.params, ctx.variant)
            )
        return g

    def _project(self, psi: LevelSet) -> LevelSet:
        return volume_project(psi, self.mesh, self.settings.V_L, self.settings.V_U)

    def _line_search(self, current: ShapeEvaluation, g: TDField):
        """
        κ を kappa_initial から半減させ、merit が減少した最初の試行を採用

        Returns:
            tuple: (ShapeEvaluation, κ, 強制採用かどうか)
        """
        kappa = self.settings.kappa_initial
        while True:
            trial_psi = self._project(update_levelset(current.levelset, g, kappa, self.mesh))
            trial = self.evaluate(trial_psi)
            if trial.merit < current.merit:
                return trial, kappa, False
            if 0.5 * kappa < self.settings.kappa_min:
                logger.warning(
                    f"直線探索が κ = {kappa:.3e} に達しました。減少なしでステップを採用します"
                    f"（merit {current.merit:.6e} → {trial.merit:.6e}）"
                )
                return trial, kappa, True
            kappa *= 0.5

    def _record(self, iteration: int, evaluation: ShapeEvaluation, theta: float, kappa: float, forced: bool = False):
        record = IterationRecord(
            iteration=iteration,
            objective=evaluation.objective,
            penalty=evaluation.penalty,
            theta=theta,
            volume=evaluation.volume,
            fulfillment=evaluation.fulfillment,
            kappa=kappa,
            forced_step=forced,
        )
        logger.info(
            f"反復 {iteration}: J={record.objective:.6e} P={record.penalty:.3e} "
            f"θ={theta:.4f} |Ω|={record.volume:.4f} 充足率={record.fulfillment:.4f} κ={kappa:.4g}"
        )
        if self.history_sink is not None:
            self.history_sink(record)
        return record

    def run(self, initial: Optional[LevelSet] = None) -> OptimizationResult:
        """
        最適化を実行

        Args:
            initial: 初期レベルセット（None の場合は全流体の初期形状）

        Returns:
            OptimizationResult: 最終形状・終了状態・反復履歴
        """
        mode = "デフレーション付き" if self.deflated else "通常"
        logger.info(f"{mode}最適化を開始します（メッシュ n={self.mesh.n}）")

        psi = self._project(initial if initial is not None else initial_levelset(self.mesh))
        current = self.evaluate(psi)
        history: List[IterationRecord] = []
        status = OptimizationStatus.MAX_ITERATIONS

        for iteration in range(self.settings.max_iterations):
            g = self.topological_derivative(current)
            try:
                theta = angle(current.levelset, g, self.mesh)
            except StationaryFieldError:
                history.append(self._record(iteration, current, 0.0, 0.0))
                status = OptimizationStatus.STATIONARY
                break

            if theta < self.settings.eps_theta:
                history.append(self._record(iteration, current, theta, 0.0))
                status = OptimizationStatus.CONVERGED
                break

            trial, kappa, forced = self._line_search(current, g)
            history.append(self._record(iteration, current, theta, kappa, forced))
            current = trial

        result = OptimizationResult(
            levelset=current.levelset, status=status, history=history, evaluation=current
        )
        if status is OptimizationStatus.MAX_ITERATIONS:
            logger.warning(f"反復上限 {self.settings.max_iterations} に達しました（未収束）")
        else:
            logger.info(
                f"最適化終了（{status.value}）: 反復 {len(history)}, J={current.objective:.6e}, "
                f"充足率={current.fulfillment:.4f}"
            )
        if result.forced_steps:
            logger.warning(
                f"{mode}最適化で減少なしの強制ステップが {result.forced_steps} 回ありました（反復 {len(history)} 回中）"
            )
        return result


def optimize(
    mesh: TriMesh,
    settings: Optional[OptimizerSettings] = None,
    flow_params: Optional[FlowParameters] = None,
    penalty_context: Optional[PenaltyContext] = None,
    initial: Optional[LevelSet] = None,
    history_sink: Optional[HistorySink] = None,
) -> OptimizationResult:
    """LevelSetOptimizer の簡易呼び出し"""
    optimizer = LevelSetOptimizer(mesh, settings, flow_params, penalty_context, history_sink)
    return optimizer.run(initial)
