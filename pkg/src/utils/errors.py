"""
例外クラス定義

ライブラリ全体で使用する例外階層
"""


class AmolError(Exception):
    """amolの基底例外"""


class DomainError(AmolError, ValueError):
    """数値的な定義域外の入力（s ≤ 0、次元不一致など）"""


class InvalidIndexError(DomainError):
    """インデックスが Λ や ℒ_{ε,j} に属さない"""


class FrameSpecError(DomainError):
    """フレーム仕様が不正（2の冪でない格子、帯域あふれ）"""


class GridResolutionError(DomainError):
    """要求された微分階数に対して格子が粗すぎる"""


class InfeasiblePhantomError(DomainError):
    """曲率上限 ν が小さすぎて楕円体が単位立方体に収まらない"""


class InsufficientDataError(AmolError):
    """行数・点数・打ち切りレベル数が不足している"""


class StorageError(AmolError, OSError):
    """ファイルの読み書きに失敗した"""


class AcceptanceError(AmolError):
    """コマンドの受け入れ閾値を満たさなかった"""
