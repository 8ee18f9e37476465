"""設定管理"""

from src.config.settings import Settings

__all__ = ["Settings"]










