"""
プロファイリングユーティリティ

計算ステップの実行時間を測定し、必要ならレポート用の辞書に記録する
"""

import logging
import time
from typing import Dict, Optional

logger = logging.getLogger(__name__)


class Timer:
    """
    実行時間を測定するコンテキストマネージャー

    Usage:
        timings: Dict[str, float] = {}
        with Timer("tightness", record=timings):
            check_tight(spec)
        # timings == {"tightness": 12.3}
    """

    def __init__(
        self,
        name: str = "Timer",
        level: int = logging.INFO,
        record: Optional[Dict[str, float]] = None,
    ):
        self.name = name
        self.level = level
        self.record = record
        self.start_time: Optional[float] = None
        self.elapsed_time: Optional[float] = None

    def __enter__(self) -> "Timer":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.elapsed_time = time.perf_counter() - self.start_time
        if exc_type is None:
            logger.log(self.level, f"{self.name} 実行時間: {self.elapsed_time:.6f}秒")
            if self.record is not None:
                # 同名の段階は合算
                self.record[self.name] = self.record.get(self.name, 0.0) + self.elapsed_time
        else:
            logger.log(self.level, f"{self.name} 失敗（{self.elapsed_time:.6f}秒）: {exc_type.__name__}")
        return False

    def get_elapsed(self) -> float:
        """経過時間を取得（測定中なら現時点までの時間）"""
        if self.elapsed_time is None:
            return time.perf_counter() - self.start_time
        return self.elapsed_time
