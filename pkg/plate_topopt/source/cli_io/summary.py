"""
キャンペーン要約 (summary.json) の入出力と、ラウンドごとの永続化

出力ディレクトリの構成:
    minimizer_XX.vtk                  最小解の ψ, χ, α, 速度
    history_round_XX_deflated.csv     デフレーション付きフェーズの履歴
    history_round_XX_restart.csv      通常（再開）フェーズの履歴
    summary.json                      最小解ごとの要約と距離行列
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from ..deflation import DeflationResult, MinimizerRecord
from ..interfaces.data_models import OptimizationStatus, PhaseSummary, ShapeFileError
from ..mesh import TriMesh
from ..objective import shape_distance
from .files import PathLike, atomic_write_text
from .history import write_history_csv
from .vtk_io import evaluation_fields, load_shape, write_field_vtk

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
# 公表値（ラウンドごとの比較用、検証には使わない）。キーは minimizers の各要素に揃える
REFERENCE_ROUNDS: List[Dict[str, Any]] = [
    {"round": 0, "fulfillment": 0.764, "deflated_iterations": None, "restart_iterations": 53, "channels": 4},
    {"round": 1, "fulfillment": 0.9068, "deflated_iterations": 46, "restart_iterations": 51, "channels": 6},
    {"round": 2, "fulfillment": 0.9888, "deflated_iterations": 38, "restart_iterations": 60, "channels": 8},
]


def minimizer_file(round_index: int) -> str:
    return f"minimizer_{round_index:02d}.vtk"


def history_file(round_index: int, phase: str) -> str:
    return f"history_round_{round_index:02d}_{phase}.csv"


def _phase_dict(prefix: str, phase) -> Dict[str, Any]:
    return {
        f"{prefix}_iterations": None if phase is None else phase.iterations,
        f"{prefix}_status": None if phase is None else phase.status.value,
        f"{prefix}_forced_steps": None if phase is None else phase.forced_steps,
    }


def summary_dict(result: DeflationResult, mesh: TriMesh) -> Dict[str, Any]:
    """DeflationResult を JSON 化できる辞書に変換"""
    records: List[Dict[str, Any]] = []
    for i, solution in enumerate(result.solutions):
        entry = {
            "round": solution.round_index,
            "J": solution.objective,
            "fulfillment": solution.fulfillment,
            "volume": solution.volume,
        }
        entry.update(_phase_dict("deflated", solution.deflated_phase))
        entry.update(_phase_dict("restart", solution.restart_phase))
        entry["distances_to_earlier"] = [
            shape_distance(mesh, solution.chi, earlier.chi) for earlier in result.solutions[:i]
        ]
        entry["shape_file"] = minimizer_file(solution.round_index)
        records.append(entry)

    params = result.penalty_params
    return {
        "mesh_n": mesh.n,
        "penalty": {
            "gamma": params.gamma,
            "delta": params.delta,
            "r_min": params.r_min,
            "exponent_min": params.exponent_min,
            "exponent_max": params.exponent_max,
        },
        "reference": [dict(entry) for entry in REFERENCE_ROUNDS],
        "minimizers": records,
        "distance_matrix": result.distance_matrix(mesh).tolist(),
    }


def write_summary_json(result: DeflationResult, path: PathLike, mesh: TriMesh) -> Path:
    """summary.json を書き込む"""
    text = json.dumps(summary_dict(result, mesh), indent=2, ensure_ascii=False) + "\n"
    path = atomic_write_text(path, text)
    logger.info(f"要約を書き込みました: {path}（最小解 {len(result.solutions)} 個）")
    return path


class FileCampaignWriter:
    """ラウンドごとに最小解・履歴・要約を出力ディレクトリへ書き込む"""

    def __init__(self, output_dir: PathLike, mesh: TriMesh):
        self.output_dir = Path(output_dir)
        self.mesh = mesh

    def write_record(self, record: MinimizerRecord) -> None:
        if record.evaluation is not None:
            write_field_vtk(self.mesh, evaluation_fields(record.evaluation), self.output_dir / minimizer_file(record.round_index))
        if record.deflated_phase is not None:
            write_history_csv(
                record.deflated_phase.history, self.output_dir / history_file(record.round_index, "deflated")
            )
        if record.restart_phase is not None:
            write_history_csv(
                record.restart_phase.history, self.output_dir / history_file(record.round_index, "restart")
            )

    def write_round(self, record: MinimizerRecord, result: DeflationResult) -> None:
        self.write_record(record)
        write_summary_json(result, self.output_dir / SUMMARY_FILE, self.mesh)


def _phase(entry: Dict[str, Any], prefix: str):
    iterations = entry.get(f"{prefix}_iterations")
    if iterations is None:
        return None
    return PhaseSummary(
        iterations=int(iterations),
        status=OptimizationStatus(entry[f"{prefix}_status"]),
        forced_steps=int(entry.get(f"{prefix}_forced_steps") or 0),
    )


def load_campaign(output_dir: PathLike, mesh: TriMesh) -> List[MinimizerRecord]:
    """
    保存済みのキャンペーンを読み込む（summary.json がなければ空）

    Raises:
        ShapeFileError: 要約や最小解ファイルが壊れている・メッシュが一致しない
    """
    output_dir = Path(output_dir)
    summary_path = output_dir / SUMMARY_FILE
    if not summary_path.exists():
        return []
    try:
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        entries = summary["minimizers"]
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ShapeFileError(f"要約ファイルを読めません: {summary_path}: {e}", details={"path": str(summary_path)}) from e
    if summary.get("mesh_n") != mesh.n:
        raise ShapeFileError(
            "保存済みキャンペーンのメッシュが一致しません",
            details={"path": str(summary_path), "saved": summary.get("mesh_n"), "mesh_n": mesh.n},
        )

    records = []
    for entry in entries:
        try:
            round_index = int(entry["round"])
            psi, chi = load_shape(output_dir / minimizer_file(round_index), mesh)
            if psi is None:
                raise ShapeFileError("最小解ファイルに psi がありません", details={"round": round_index})
            records.append(MinimizerRecord(
                round_index=round_index,
                levelset=psi,
                chi=chi,
                objective=float(entry["J"]),
                fulfillment=float(entry["fulfillment"]),
                volume=float(entry["volume"]),
                deflated_phase=_phase(entry, "deflated"),
                restart_phase=_phase(entry, "restart"),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise ShapeFileError(f"要約のエントリが不正です: {e}", details={"path": str(summary_path)}) from e
    logger.info(f"保存済みの最小解 {len(records)} 個を読み込みました: {output_dir}")
    return records
