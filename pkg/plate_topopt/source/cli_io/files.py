"""
アトミックなファイル書き込み

一時ファイルに書いてから os.replace で置き換える。
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Union

from ..interfaces.data_models import OutputError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """17 桁の 10 進表記（binary64 を可逆に表現）"""
    return format(float(value), ".17g")


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    テキストをアトミックに書き込む

    Raises:
        OutputError: ディレクトリ作成・書き込み・置換に失敗
    """
    path = Path(path)
    tmp_path = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path is not None and os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise OutputError(
            f"ファイルの書き込みに失敗しました: {path}: {e}", details={"path": str(path)}
        ) from e
    logger.debug(f"書き込み完了: {path}")
    return path
