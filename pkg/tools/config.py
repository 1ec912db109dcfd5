import os
import logging
import warnings
from pathlib import Path
from dotenv import load_dotenv

# .envファイルから環境変数を読み込む
load_dotenv()

# 基本パス
BASE_DIR = Path(__file__).parent.parent  # プロジェクトルートに移動
OUTPUT_DIR = BASE_DIR / os.getenv("OUTPUT_DIR_PATH", "output")

# アプリケーション設定
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# バイポーラ板セル設定の既定パラメータ（RunConfig の既定値）
CELL_DEFAULTS = {
    "alpha_L": 2.5 / 100**2,
    "alpha_U": 2.5 / 0.0025**2,
    "u_t": 0.1,
    "dt": 1e-3,
    "V_L": 0.5,
    "V_U": 0.7,
    "gamma": 0.4,
    "delta": 50.0,
    "eps_theta": 0.035,
}

# ログ設定
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)

# scipy.sparse の効率警告を抑制
try:
    from scipy.sparse import SparseEfficiencyWarning
    warnings.simplefilter("ignore", SparseEfficiencyWarning)
except ImportError:
    pass


def validate_environment():
    """環境設定の妥当性を検証"""
    errors = []

    if not hasattr(logging, LOG_LEVEL.upper()):
        errors.append(f"LOG_LEVEL が不正です: {LOG_LEVEL}")

    if OUTPUT_DIR.exists() and not OUTPUT_DIR.is_dir():
        errors.append(f"出力先がディレクトリではありません: {OUTPUT_DIR}")

    if errors:
        for error in errors:
            logging.error(error)
        raise ValueError("環境設定エラーがあります。.envファイルを確認してください。")

    logging.debug("環境設定の検証が完了しました")
