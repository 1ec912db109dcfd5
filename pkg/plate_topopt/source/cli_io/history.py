"""反復履歴の CSV 出力"""

import csv
import io
import logging
from pathlib import Path
from typing import Iterable

from ..interfaces.data_models import IterationRecord
from .files import PathLike, atomic_write_text, format_float

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["iter", "J", "P", "theta", "volume", "fulfillment", "kappa"]


def format_history_csv(history: Iterable[IterationRecord]) -> str:
    """ヘッダー付き CSV 文字列（小数点は常に '.'）"""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(HISTORY_COLUMNS)
    for record in history:
        row = record.to_dict()
        writer.writerow([row["iter"]] + [format_float(row[key]) for key in HISTORY_COLUMNS[1:]])
    return output.getvalue()


def write_history_csv(history: Iterable[IterationRecord], path: PathLike) -> Path:
    """履歴を CSV に書き込む（空の履歴ではヘッダーのみ）"""
    history = list(history)
    path = atomic_write_text(path, format_history_csv(history))
    logger.info(f"履歴を書き込みました: {path}（{len(history)} 行）")
    return path
