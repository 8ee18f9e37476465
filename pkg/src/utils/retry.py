"""
リトライロジック

結果ファイル書き込み用のリトライ（一時的なファイルシステムエラーのみ対象）
"""

import logging
from pathlib import Path
from typing import Callable, Any, Union

from tenacity import (
    retry,
    stop_after_attempt,
    wait_exponential,
    retry_if_exception_type,
    RetryError,
)

from src.utils.errors import StorageError

logger = logging.getLogger(__name__)

# 再試行しても結果が変わらないエラー（権限、存在しないディレクトリなど）は対象外
TRANSIENT_ERRORS = (BlockingIOError, InterruptedError, TimeoutError)


def write_with_retry(write_func: Callable, *args, attempts: int = 3, **kwargs) -> Any:
    """
    書き込み処理（リトライ付き）

    Args:
        write_func: 書き込み関数
        *args: 位置引数
        attempts: 最大試行回数
        **kwargs: キーワード引数

    Returns:
        書き込み関数の戻り値

    Raises:
        StorageError: 書き込みに失敗した場合
    """

    @retry(
        stop=stop_after_attempt(attempts),
        wait=wait_exponential(multiplier=0.1, min=0.1, max=2),
        retry=retry_if_exception_type(TRANSIENT_ERRORS),
        reraise=True,
    )
    def _retry_wrapper():
        return write_func(*args, **kwargs)

    try:
        return _retry_wrapper()
    except (OSError, RetryError) as e:
        raise StorageError(f"書き込みに失敗しました: {e}") from e


def write_text_with_retry(path: Union[str, Path], text: str, attempts: int = 3) -> Path:
    """テキストをUTF-8・LF改行で書き込む"""
    path = Path(path)

    def _write():
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    write_with_retry(_write, attempts=attempts)
    return path


def write_bytes_with_retry(path: Union[str, Path], payload: bytes, attempts: int = 3) -> Path:
    """バイト列を書き込む"""
    path = Path(path)
    write_with_retry(path.write_bytes, payload, attempts=attempts)
    return path
