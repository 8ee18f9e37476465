"""
amol: 多変量α-分子と3次元帯域制限シアレットフレームの数値検証ツール
"""

__version__ = "0.1.0"
