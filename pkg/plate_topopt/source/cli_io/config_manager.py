"""
実行設定の管理

設定の優先順位: 既定値 < 設定ファイル（key = value 行、# 以降はコメント）
< コマンドライン上書き。解決済みの設定は出力ディレクトリへ
resolved_config.txt として書き出す。

設定例:
```
mesh_n = 70
u_t = 0.1        # 目標流速
deflation_rounds = 2
penalty_td_variant = paper
```
"""

import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from tools.config import OUTPUT_DIR, CELL_DEFAULTS

from ..interfaces.data_models import ConfigError
from ..objective import PenaltyParams
from ..optimizer import FlowParameters, OptimizerSettings
from .files import PathLike, atomic_write_text, format_float

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_FILE = "resolved_config.txt"
_KEY_PATTERN = re.compile(r"\[(\w+)\]")


class RunConfig(BaseModel):
    """1 回の実行の全パラメータ"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    mesh_n: int = Field(70, ge=1)
    alpha_L: float = Field(CELL_DEFAULTS["alpha_L"], gt=0)
    alpha_U: float = Field(CELL_DEFAULTS["alpha_U"], gt=0)
    u_t: float = Field(CELL_DEFAULTS["u_t"], gt=0)
    dt: float = Field(CELL_DEFAULTS["dt"], gt=0)
    V_L: float = Field(CELL_DEFAULTS["V_L"], gt=0, le=1)
    V_U: float = Field(CELL_DEFAULTS["V_U"], gt=0, le=1)
    gamma: float = Field(CELL_DEFAULTS["gamma"], gt=0)
    delta: float = Field(CELL_DEFAULTS["delta"], gt=0)
    eps_theta: float = Field(CELL_DEFAULTS["eps_theta"], gt=0, le=math.pi)
    max_iterations: int = Field(500, ge=1)
    deflation_rounds: int = Field(2, ge=0)
    penalty_td_variant: Literal["paper", "derived"] = "paper"
    output_dir: str = str(OUTPUT_DIR)
    r_min: float = Field(1e-3, gt=0)
    exponent_min: float = -745.0
    exponent_max: float = 500.0
    kappa_initial: float = Field(1.0, gt=0, le=1)
    kappa_min: float = Field(2.0 ** -10, gt=0, le=1)
    norm_eps: float = Field(1e-12, gt=0)

    @model_validator(mode="after")
    def _check_ordering(self) -> "RunConfig":
        if not self.V_L <= self.V_U:
            raise ValueError("[V_U] V_L ≤ V_U が必要です")
        if not self.alpha_L < self.alpha_U:
            raise ValueError("[alpha_U] alpha_L < alpha_U が必要です")
        if not self.kappa_min <= self.kappa_initial:
            raise ValueError("[kappa_min] kappa_min ≤ kappa_initial が必要です")
        if not self.exponent_min < self.exponent_max:
            raise ValueError("[exponent_max] exponent_min < exponent_max が必要です")
        return self

    def optimizer_settings(self) -> OptimizerSettings:
        return OptimizerSettings(
            eps_theta=self.eps_theta,
            max_iterations=self.max_iterations,
            kappa_initial=self.kappa_initial,
            kappa_min=self.kappa_min,
            V_L=self.V_L,
            V_U=self.V_U,
        )

    def flow_parameters(self) -> FlowParameters:
        return FlowParameters(
            alpha_L=self.alpha_L, alpha_U=self.alpha_U, u_t=self.u_t, dt=self.dt, norm_eps=self.norm_eps
        )

    def penalty_params(self) -> PenaltyParams:
        return PenaltyParams(
            gamma=self.gamma,
            delta=self.delta,
            r_min=self.r_min,
            exponent_min=self.exponent_min,
            exponent_max=self.exponent_max,
        )

    def to_text(self) -> str:
        """key = value 形式（フィールド順、浮動小数は 17 有効桁）"""
        lines = []
        for key in type(self).model_fields:
            value = getattr(self, key)
            text = format_float(value) if isinstance(value, float) else str(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def _config_error(message: str, key: Optional[str], line: Optional[int], source: str) -> ConfigError:
    where = f"{source} 行 {line}" if line is not None else source
    return ConfigError(f"{message}（{where}）", details={"key": key, "line": line, "source": source})


def parse_config(
    text: str,
    overrides: Optional[Mapping[str, Any]] = None,
    source: str = "<config>",
) -> RunConfig:
    """
    設定テキストとコマンドライン上書きから RunConfig を構築

    Args:
        text: key = value 行
        overrides: コマンドラインの値（None の値は無視）
        source: エラーメッセージに使う設定の出所

    Raises:
        ConfigError: 形式不正・未知のキー・重複・型不一致・不変条件違反
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, Optional[int]] = {}
    known = RunConfig.model_fields

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise _config_error(f"key = value 形式ではありません: {raw.strip()!r}", None, lineno, source)
        if key not in known:
            raise _config_error(f"未知の設定キーです: {key}", key, lineno, source)
        if key in values:
            raise _config_error(f"設定キーが重複しています: {key}", key, lineno, source)
        values[key] = value
        lines[key] = lineno

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise _config_error(f"未知の設定キーです: {key}", key, None, "コマンドライン")
        values[key] = value
        lines[key] = None

    try:
        return RunConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        if error["loc"]:
            key = str(error["loc"][0])
        else:
            match = _KEY_PATTERN.search(error["msg"])
            key = match.group(1) if match else None
        origin = "コマンドライン" if key in lines and lines[key] is None else source
        raise _config_error(f"{key}: {error['msg']}", key, lines.get(key), origin) from e


class RunConfigManager:
    """
    実行設定の統合管理クラス

    役割:
    1. 設定ファイルとコマンドライン上書きの統合
    2. 検証済み設定のキャッシュ
    3. 解決済み設定の出力ディレクトリへの書き出し
    """

    def __init__(self, config_file_path: Optional[PathLike] = None, overrides: Optional[Mapping[str, Any]] = None):
        self.config_file_path = Path(config_file_path) if config_file_path else None
        self.overrides = dict(overrides or {})
        self._config: Optional[RunConfig] = None

    def load_config(self) -> RunConfig:
        """設定を読み込み・検証（2 回目以降はキャッシュ）"""
        if self._config is None:
            text, source = "", "<defaults>"
            if self.config_file_path is not None:
                try:
                    text = self.config_file_path.read_text(encoding="utf-8")
                except OSError as e:
                    raise ConfigError(
                        f"設定ファイルを読めません: {self.config_file_path}: {e}",
                        details={"path": str(self.config_file_path)},
                    ) from e
                source = str(self.config_file_path)
            self._config = parse_config(text, self.overrides, source)
            logger.info(f"設定を読み込みました: {self._get_config_summary(self._config)}")
        return self._config

    def _get_config_summary(self, config: RunConfig) -> str:
        return (
            f"n={config.mesh_n}, u_t={config.u_t}, V=[{config.V_L}, {config.V_U}], "
            f"γ={config.gamma}, δ={config.delta}, 出力先={config.output_dir}"
        )

    def save_config_to_file(self, file_path: Optional[PathLike] = None) -> Path:
        """解決済み設定を書き出す（既定は出力ディレクトリの resolved_config.txt）"""
        config = self.load_config()
        path = Path(file_path) if file_path else Path(config.output_dir) / RESOLVED_CONFIG_FILE
        atomic_write_text(path, config.to_text())
        logger.info(f"解決済み設定を保存しました: {path}")
        return path


_config_manager: Optional[RunConfigManager] = None


def get_config_manager() -> RunConfigManager:
    """設定マネージャーを取得（シングルトン）"""
    global _config_manager
    if _config_manager is None:
        _config_manager = RunConfigManager()
    return _config_manager


def init_config_manager(
    config_file_path: Optional[PathLike] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfigManager:
    """設定マネージャーを初期化"""
    global _config_manager
    _config_manager = RunConfigManager(config_file_path, overrides)
    return _config_manager
