"""
設定管理（Pydantic Settings）

環境変数から設定を読み込む
"""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings

# プロジェクトルートを取得（このファイルから3階層上）
_project_root = Path(__file__).parent.parent.parent
_env_file = _project_root / ".env"


class Settings(BaseSettings):
    """アプリケーション設定"""

    # 並列処理設定
    AMOL_THREADS: Optional[int] = Field(default=None, ge=1)  # ワーカー数の上限（未設定ならCPU数）

    # ロギング設定
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None  # 未設定なら logs/amol.log

    # 乱数・出力設定
    DEFAULT_SEED: int = 0  # すべての乱数はこの1つのシードから派生する
    OUTPUT_DIR: str = "results"

    # 数値計算設定
    WINDOW_CACHE_SIZE: int = Field(default=64, ge=0)  # メモ化するデジタル窓の最大数
    QUADRATURE_REFINEMENT: int = Field(default=2, ge=1)  # 内積求積格子の細分化率
    CONSISTENCY_PROBE_SCALES: int = Field(default=1, ge=0)  # 整合性和のプローブに使うスケール上限

    # 永続化設定
    WRITE_RETRY_ATTEMPTS: int = Field(default=3, ge=1)

    model_config = {
        "env_file": str(_env_file) if _env_file.exists() else None,
        "env_file_encoding": "utf-8",
        "case_sensitive": True,
        "extra": "ignore"  # 追加のフィールドを無視
    }

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """ログレベル名を大文字に正規化（未知の名前は拒否）"""
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"不明なログレベルです: {v}")
        return level

    def __init__(self, **kwargs):
        # .envファイルを明示的に読み込む（python-dotenvを使用）
        try:
            from dotenv import load_dotenv
            if _env_file.exists():
                load_dotenv(_env_file, override=False)
        except ImportError:
            pass  # python-dotenvがインストールされていない場合はスキップ

        super().__init__(**kwargs)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """プロセス共通の設定インスタンスを取得"""
    return Settings()
