"""
デフレーションによる複数の局所最小解の探索

ラウンド 0 で通常の最適化を行い、以降の各ラウンドでは
(1) 直前の最小解から出発したペナルティ付き最適化、
(2) その結果から出発した通常の最適化（再開）
を行って新しい最小解をアーカイブに追加する。
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence

import numpy as np

from ..fem import ElementwiseField
from ..interfaces.data_models import ConfigError, PhaseSummary
from ..mesh import TriMesh
from ..objective import PenaltyParams, ShapeArchive, shape_distance
from ..optimizer import (
    FlowParameters,
    LevelSet,
    OptimizationResult,
    OptimizerSettings,
    PenaltyContext,
    ShapeEvaluation,
    initial_levelset,
    optimize,
)

logger = logging.getLogger(__name__)

DUPLICATE_DISTANCE = 1e-12


@dataclass(eq=False)
class MinimizerRecord:
    """アーカイブした 1 つの最小解"""
    round_index: int
    levelset: LevelSet
    chi: ElementwiseField
    objective: float
    fulfillment: float
    volume: float
    deflated_phase: Optional[PhaseSummary] = None
    restart_phase: Optional[PhaseSummary] = None
    evaluation: Optional[ShapeEvaluation] = None

    @property
    def deflated_iterations(self) -> Optional[int]:
        return None if self.deflated_phase is None else self.deflated_phase.iterations

    @property
    def restart_iterations(self) -> Optional[int]:
        return None if self.restart_phase is None else self.restart_phase.iterations


@dataclass(eq=False)
class DeflationResult:
    solutions: List[MinimizerRecord]
    archive: ShapeArchive
    penalty_params: PenaltyParams = field(default_factory=PenaltyParams)

    def distance_matrix(self, mesh: TriMesh) -> np.ndarray:
        """最小解間の L² 距離（対称・対角 0）"""
        k = len(self.solutions)
        distances = np.zeros((k, k))
        for i in range(k):
            for j in range(i):
                d = shape_distance(mesh, self.solutions[i].chi, self.solutions[j].chi)
                distances[i, j] = distances[j, i] = d
        return distances


class CampaignWriter(Protocol):
    def write_round(self, record: MinimizerRecord, result: DeflationResult) -> None:
        ...


class DeflationCampaign:
    """最小解を n 個追加で探索するキャンペーン"""

    def __init__(
        self,
        mesh: TriMesh,
        settings: Optional[OptimizerSettings] = None,
        flow_params: Optional[FlowParameters] = None,
        penalty_params: Optional[PenaltyParams] = None,
        variant: str = "paper",
        writer: Optional[CampaignWriter] = None,
    ):
        self.mesh = mesh
        self.settings = settings or OptimizerSettings()
        self.flow_params = flow_params or FlowParameters()
        self.penalty_params = penalty_params or PenaltyParams()
        self.variant = variant
        self.writer = writer

    def _solve(self, initial: LevelSet, context: Optional[PenaltyContext] = None) -> OptimizationResult:
        return optimize(self.mesh, self.settings, self.flow_params, context, initial)

    def _archive(self, record: MinimizerRecord, result: DeflationResult) -> None:
        for earlier in result.solutions:
            distance = shape_distance(self.mesh, record.chi, earlier.chi)
            if distance <= DUPLICATE_DISTANCE:
                logger.warning(
                    f"ラウンド {record.round_index} の最小解はラウンド {earlier.round_index} と同一です"
                )
        result.archive.append(
            record.chi,
            round_index=record.round_index,
            objective=record.objective,
            fulfillment=record.fulfillment,
        )
        result.solutions.append(record)
        logger.info(
            f"ラウンド {record.round_index} の最小解を保存: J={record.objective:.6e}, "
            f"充足率={record.fulfillment:.4f}, |Ω|={record.volume:.4f}"
        )
        if self.writer is not None:
            self.writer.write_round(record, result)

    @staticmethod
    def _record(round_index: int, result: OptimizationResult, deflated: Optional[OptimizationResult]):
        evaluation = result.evaluation
        return MinimizerRecord(
            round_index=round_index,
            levelset=result.levelset,
            chi=evaluation.chi,
            objective=evaluation.objective,
            fulfillment=evaluation.fulfillment,
            volume=evaluation.volume,
            deflated_phase=None if deflated is None else deflated.phase_summary(),
            restart_phase=result.phase_summary(),
            evaluation=evaluation,
        )

    def run(self, n: int, resumed: Sequence[MinimizerRecord] = ()) -> DeflationResult:
        """
        キャンペーンを実行

        Args:
            n: 追加で探索する最小解の数（n ≥ 0）
            resumed: 保存済みの最小解（ラウンド順）。続きのラウンドから再開する

        Returns:
            DeflationResult: n+1 個の最小解
        """
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ConfigError(f"deflation_rounds は 0 以上の整数が必要です: {n}", details={"key": "deflation_rounds"})

        result = DeflationResult(
            solutions=[], archive=ShapeArchive.for_mesh(self.mesh), penalty_params=self.penalty_params
        )
        for record in resumed:
            result.archive.append(
                record.chi, round_index=record.round_index,
                objective=record.objective, fulfillment=record.fulfillment,
            )
            result.solutions.append(record)
        if resumed:
            logger.info(f"保存済みの {len(resumed)} 個の最小解から再開します")

        if not result.solutions:
            logger.info("ラウンド 0: 通常の最適化")
            first = self._solve(initial_levelset(self.mesh))
            self._archive(self._record(0, first, None), result)

        for i in range(len(result.solutions) - 1, n):
            round_index = i + 1
            logger.info(f"ラウンド {round_index}: アーカイブ {len(result.archive)} 個でデフレーション付き最適化")
            context = PenaltyContext(result.archive, self.penalty_params, self.variant)
            deflated = self._solve(result.solutions[i].levelset, context)
            if not deflated.converged:
                logger.warning(f"ラウンド {round_index} のデフレーション付き最適化は未収束です。再開に進みます")

            logger.info(f"ラウンド {round_index}: ペナルティなしで再開")
            restart = self._solve(deflated.levelset)
            if not restart.converged:
                logger.warning(f"ラウンド {round_index} の再開最適化は未収束です")
            self._archive(self._record(round_index, restart, deflated), result)

        return result


def deflate(
    mesh: TriMesh,
    settings: Optional[OptimizerSettings] = None,
    penalty_params: Optional[PenaltyParams] = None,
    n: int = 2,
    flow_params: Optional[FlowParameters] = None,
    variant: str = "paper",
    writer: Optional[CampaignWriter] = None,
    resumed: Sequence[MinimizerRecord] = (),
) -> DeflationResult:
    """DeflationCampaign の簡易呼び出し"""
    campaign = DeflationCampaign(mesh, settings, flow_params, penalty_params, variant, writer)
    return campaign.run(n, resumed)
