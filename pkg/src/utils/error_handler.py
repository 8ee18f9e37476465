"""
エラーハンドリングデコレータ

CLIコマンド実行時のエラーを終了コードに変換する
"""

from functools import wraps
import logging
from typing import Callable

from pydantic import ValidationError

from src.utils.errors import (
    AcceptanceError,
    DomainError,
    InsufficientDataError,
    StorageError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    """コマンドライン引数が不正"""


def exit_code_for(error: BaseException) -> int:
    """
    例外を終了コードに対応付ける

    Args:
        error: 発生した例外

    Returns:
        終了コード（1: 受け入れ失敗, 2: 使用法, 3: I/O）
    """
    if isinstance(error, StorageError):
        return EXIT_IO
    if isinstance(error, (UsageError, DomainError, InsufficientDataError, ValidationError)):
        return EXIT_USAGE
    if isinstance(error, AcceptanceError):
        return EXIT_ACCEPTANCE
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_ACCEPTANCE


def handle_command_errors(command_func: Callable[..., int]) -> Callable[..., int]:
    """
    コマンド実行時のエラーをハンドルするデコレータ

    エラーが発生した場合:
    1. エラーログを記録
    2. 例外の種類に応じた終了コードを返す

    Args:
        command_func: コマンド関数（終了コードを返す）

    Returns:
        デコレータ関数
    """

    @wraps(command_func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return command_func(*args, **kwargs)
        except Exception as e:
            code = exit_code_for(e)
            if code == EXIT_USAGE:
                logger.error(f"{command_func.__name__}: 引数エラー: {e}")
            else:
                logger.error(
                    f"Error in {command_func.__name__}: {e}",
                    exc_info=True
                )
            return code

    return wrapper
