"""
入力検証ユーティリティ

CLI引数を計算前に検証する
"""

import logging
import os
import re
from pathlib import Path
from typing import List, Tuple, Union

logger = logging.getLogger(__name__)

_INT_LIST_PATTERN = re.compile(r'^\s*-?\d+(\s*,\s*-?\d+)*\s*$')


def validate_power_of_two(value: int, minimum: int = 1) -> Tuple[bool, str]:
    """
    2の冪であることを検証

    Args:
        value: 検証する整数
        minimum: 許容する最小値

    Returns:
        (有効かどうか, エラーメッセージ)
    """
    if value < minimum:
        return False, f"{value} は {minimum} 以上である必要があります"
    if value & (value - 1) != 0:
        return False, f"{value} は2の冪ではありません"
    return True, ""


def parse_int_list(text: str) -> List[int]:
    """
    カンマ区切りの整数リストを解析

    Args:
        text: "100,1000,10000" 形式の文字列

    Returns:
        整数のリスト

    Raises:
        ValueError: 形式が不正な場合
    """
    if not isinstance(text, str) or not _INT_LIST_PATTERN.match(text):
        raise ValueError(f"カンマ区切りの整数ではありません: {text!r}")
    return [int(part) for part in text.split(",")]


def validate_output_dir(path: Union[str, Path]) -> Tuple[bool, str]:
    """
    出力ディレクトリが作成・書き込み可能かを検証

    Args:
        path: 出力ディレクトリ

    Returns:
        (有効かどうか, エラーメッセージ)
    """
    path = Path(path)
    if path.exists() and not path.is_dir():
        return False, f"出力先がディレクトリではありません: {path}"
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        return False, f"出力ディレクトリを作成できません: {path} ({e})"
    if not os.access(path, os.W_OK):
        return False, f"出力ディレクトリに書き込めません: {path}"
    return True, ""
