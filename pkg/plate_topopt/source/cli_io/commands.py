"""
コマンドラインインターフェース

サブコマンド:
    solve     形状ファイルの流れ場を計算（順問題のみ）
    optimize  最小解を 1 つ求める
    deflate   デフレーションで複数の最小解を求める
    eval      形状ファイルの目的関数と充足率を評価

全サブコマンドで RunConfig の各キーを --key value で上書きできる。
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from tools.config import validate_environment

from ..deflation import DeflationCampaign, DeflationResult, MinimizerRecord
from ..interfaces.data_models import (
    ConfigError,
    PlateOptError,
    ShapeFileError,
    format_error_line,
    summarize_details,
)
from ..mesh import TriMesh, build_unit_square_mesh
from ..objective import ShapeArchive
from ..optimizer import LevelSetOptimizer, evaluate_shape
from .config_manager import RunConfig, init_config_manager
from .files import atomic_write_text
from .history import write_history_csv
from .summary import FileCampaignWriter, load_campaign, write_summary_json
from .vtk_io import evaluation_fields, load_shape, write_field_vtk

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("solve", "optimize", "deflate", "eval")
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plate-topopt",
        description="バイポーラ板流路のトポロジー最適化（トポロジー微分とデフレーション）",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "形状ファイルの流れ場を計算"),
        ("optimize", "最小解を 1 つ求める"),
        ("deflate", "デフレーションで複数の最小解を求める"),
        ("eval", "形状ファイルの目的関数と充足率を評価"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", help="key = value 形式の設定ファイル")
        for key in RunConfig.model_fields:
            sub.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")
        if name in ("solve", "eval"):
            sub.add_argument("--shape", required=True, help="形状ファイル（VTK、cell data 'chi'）")
        if name == "deflate":
            sub.add_argument("--resume", action="store_true", help="出力ディレクトリの保存済みラウンドから再開")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, key) for key in RunConfig.model_fields if getattr(args, key) is not None}


def _write_json(path: Path, payload: Dict[str, Any]) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    logger.info(f"JSON を書き込みました: {path}")


def run_solve(config: RunConfig, mesh: TriMesh, shape_path: str) -> None:
    """順問題を解き、場と流量を出力"""
    psi, chi = load_shape(shape_path, mesh)
    evaluation = evaluate_shape(mesh, chi, config.flow_parameters(), levelset=psi)
    flow = evaluation.flow
    output_dir = Path(config.output_dir)
    write_field_vtk(mesh, evaluation_fields(evaluation), output_dir / "solve.vtk")
    _write_json(output_dir / "solve.json", {
        "inlet_flux": flow.inlet_flux,
        "outlet_flux": flow.outlet_flux,
        "pressure_multiplier": flow.multiplier,
        "volume": evaluation.volume,
    })
    logger.info(f"流入フラックス {flow.inlet_flux:.6e}, 流出フラックス {flow.outlet_flux:.6e}")


def run_eval(config: RunConfig, mesh: TriMesh, shape_path: str) -> None:
    """形状の J・充足率・体積を評価"""
    psi, chi = load_shape(shape_path, mesh)
    evaluation = evaluate_shape(mesh, chi, config.flow_parameters(), levelset=psi)
    _write_json(Path(config.output_dir) / "evaluation.json", {
        "J": evaluation.objective,
        "fulfillment": evaluation.fulfillment,
        "volume": evaluation.volume,
        "inlet_flux": evaluation.flow.inlet_flux,
        "outlet_flux": evaluation.flow.outlet_flux,
    })
    logger.info(
        f"評価結果: J={evaluation.objective:.6e}, 充足率={evaluation.fulfillment:.4f}, "
        f"|Ω|={evaluation.volume:.4f}"
    )


def run_optimize(config: RunConfig, mesh: TriMesh) -> None:
    """最小解を 1 つ求め、形状・履歴・要約を出力"""
    optimizer = LevelSetOptimizer(mesh, config.optimizer_settings(), config.flow_parameters())
    result = optimizer.run()
    output_dir = Path(config.output_dir)
    write_field_vtk(mesh, evaluation_fields(result.evaluation), output_dir / "optimum.vtk")
    write_history_csv(result.history, output_dir / "history.csv")

    archive = ShapeArchive.for_mesh(mesh)
    record = MinimizerRecord(
        round_index=0,
        levelset=result.levelset,
        chi=result.evaluation.chi,
        objective=result.evaluation.objective,
        fulfillment=result.evaluation.fulfillment,
        volume=result.evaluation.volume,
        restart_phase=result.phase_summary(),
    )
    archive.append(record.chi, round_index=0, objective=record.objective, fulfillment=record.fulfillment)
    summary = DeflationResult(solutions=[record], archive=archive, penalty_params=config.penalty_params())
    write_summary_json(summary, output_dir / "summary.json", mesh)


def run_deflate(config: RunConfig, mesh: TriMesh, resume: bool) -> None:
    """デフレーションキャンペーンを実行（ラウンドごとに出力）"""
    output_dir = Path(config.output_dir)
    resumed: List[MinimizerRecord] = load_campaign(output_dir, mesh) if resume else []
    campaign = DeflationCampaign(
        mesh,
        config.optimizer_settings(),
        config.flow_parameters(),
        config.penalty_params(),
        config.penalty_td_variant,
        writer=FileCampaignWriter(output_dir, mesh),
    )
    result = campaign.run(config.deflation_rounds, resumed)
    for solution in result.solutions:
        logger.info(
            f"最小解 {solution.round_index}: J={solution.objective:.6e}, 充足率={solution.fulfillment:.4f}"
        )


def run(argv: Optional[List[str]] = None) -> None:
    """引数を解析してサブコマンドを実行（例外はそのまま送出）"""
    args = build_parser().parse_args(argv)
    try:
        validate_environment()
    except ValueError as e:
        raise ConfigError(str(e), error_code="environment_invalid") from e

    manager = init_config_manager(args.config, _overrides(args))
    config = manager.load_config()
    if args.command in ("solve", "eval") and not Path(args.shape).is_file():
        raise ShapeFileError(f"形状ファイルがありません: {args.shape}", details={"path": args.shape})
    mesh = build_unit_square_mesh(config.mesh_n)
    manager.save_config_to_file()

    if args.command == "solve":
        run_solve(config, mesh, args.shape)
    elif args.command == "eval":
        run_eval(config, mesh, args.shape)
    elif args.command == "optimize":
        run_optimize(config, mesh)
    else:
        run_deflate(config, mesh, args.resume)


def main(argv: Optional[List[str]] = None) -> int:
    """
    CLI エントリポイント

    Returns:
        int: 0 成功、1 入力・計算エラー、2 内部エラー
    """
    try:
        run(argv)
    except PlateOptError as e:
        logger.error(f"エラー: {e.message} [{e.error_code}] {summarize_details(e.details)}")
        print(format_error_line(e), file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception as e:  # noqa: BLE001
        logger.exception("内部エラーが発生しました")
        internal = PlateOptError(str(e), error_code="internal", details={"type": type(e).__name__})
        print(format_error_line(internal), file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    return 0
