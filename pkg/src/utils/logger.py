"""
ロギング機能

CLIの1回の実行ごとに、コンソールとファイルへハンドラを設定する。
各レコードには実行中のサブコマンド名が付く。
"""

import logging
from pathlib import Path
from typing import Optional, Union

from src.config.settings import Settings

# プロジェクトルート（src/utils の2階層上）
_PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent
_DEFAULT_LOG_FILE = _PROJECT_ROOT / "logs" / "amol.log"

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - [%(command)s] %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class CommandFilter(logging.Filter):
    """レコードにサブコマンド名（command 属性）を付与するフィルタ"""

    def __init__(self, command: str = "-"):
        super().__init__()
        self.command = command

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "command"):
            record.command = self.command
        return True


def _is_own_handler(handler: logging.Handler) -> bool:
    return getattr(handler, "_amol_handler", False)


def _resolve_log_file(log_file: Optional[Union[str, Path]]) -> Path:
    if log_file is not None:
        return Path(log_file)
    # キャッシュ済みの get_settings() ではなく、その時点の環境変数を読む
    configured = Settings().LOG_FILE
    return Path(configured) if configured else _DEFAULT_LOG_FILE


def setup_logger(
    name: str = "amol",
    level: int = logging.INFO,
    command: str = "-",
    log_file: Optional[Union[str, Path]] = None,
) -> logging.Logger:
    """
    ルートロガーにコンソールとファイルのハンドラを設定する。

    以前の呼び出しで追加したハンドラは置き換えるので、同じプロセスで
    複数回コマンドを実行してもハンドラは重複しない。Pythonの警告
    （numpy の RuntimeWarning など）もログに流す。

    Args:
        name: 返すロガーの名前
        level: ログレベル
        command: レコードに付けるサブコマンド名
        log_file: ログファイル（Noneなら LOG_FILE、未設定なら logs/amol.log）

    Returns:
        設定済みロガー
    """
    root = logging.getLogger()
    for handler in [h for h in root.handlers if _is_own_handler(h)]:
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    command_filter = CommandFilter(command)
    handlers: list[logging.Handler] = [logging.StreamHandler()]

    path = _resolve_log_file(log_file)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(path, encoding="utf-8"))
    except OSError as e:
        # ファイルに書けなくてもコンソールだけで続行
        logging.getLogger(__name__).warning(f"ログファイルを開けません: {path}, {e}")

    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        handler.addFilter(command_filter)
        handler._amol_handler = True  # type: ignore[attr-defined]
        root.addHandler(handler)

    root.setLevel(level)
    logging.captureWarnings(True)

    logger = logging.getLogger(name)
    logger.setLevel(level)
    return logger


def level_from_name(level_name: str) -> int:
    """ログレベル名（"INFO"など）を数値に変換。不明な名前はINFO扱い"""
    value = logging.getLevelName(level_name.upper())
    return value if isinstance(value, int) else logging.INFO
