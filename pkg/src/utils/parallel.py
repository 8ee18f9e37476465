"""
並列処理ユーティリティ

複数のタスクをスレッドプールで並列実行する
"""

import logging
import os
from typing import List, Callable, TypeVar, Optional
from concurrent.futures import ThreadPoolExecutor, as_completed

logger = logging.getLogger(__name__)

T = TypeVar('T')


def worker_count(n_tasks: Optional[int] = None, max_workers: Optional[int] = None) -> int:
    """
    使用するワーカー数を決定

    AMOL_THREADS が設定されていればそれを上限とする。

    Args:
        n_tasks: タスク数（Noneなら制限なし）
        max_workers: 明示的な上限

    Returns:
        1以上のワーカー数
    """
    if max_workers is None:
        from src.config.settings import get_settings
        max_workers = get_settings().AMOL_THREADS or (os.cpu_count() or 1)
    if n_tasks is not None:
        max_workers = min(max_workers, n_tasks)
    return max(1, max_workers)


def run_parallel(
    tasks: List[Callable[[], T]],
    max_workers: Optional[int] = None
) -> List[T]:
    """
    同期タスクを並列実行（スレッドプール使用）

    numpy / scipy.fft の重い処理はGILを解放するため、スレッドで十分に並列化できる。

    Args:
        tasks: 実行するタスクのリスト
        max_workers: 最大ワーカー数（NoneならAMOL_THREADSまたはCPU数）

    Returns:
        結果のリスト（タスクの順序）

    Raises:
        タスク内で最初に発生した例外
    """
    if not tasks:
        return []

    workers = worker_count(len(tasks), max_workers)
    if workers == 1:
        return [task() for task in tasks]

    results = []
    with ThreadPoolExecutor(max_workers=workers) as executor:
        # すべてのタスクを送信
        future_to_task = {executor.submit(task): i for i, task in enumerate(tasks)}

        # 完了したタスクから結果を取得
        for future in as_completed(future_to_task):
            task_index = future_to_task[future]
            try:
                results.append((task_index, future.result()))
            except Exception as e:
                logger.error(f"並列タスク {task_index} でエラーが発生: {e}")
                for pending in future_to_task:
                    pending.cancel()
                raise

    # インデックス順にソート
    results.sort(key=lambda x: x[0])
    return [result for _, result in results]


def chunked(items: List[T], size: int) -> List[List[T]]:
    """リストを長さsizeのチャンクに分割"""
    size = max(1, size)
    return [items[i:i + size] for i in range(0, len(items), size)]
