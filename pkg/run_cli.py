"""
amol CLI起動スクリプト

インストールせずにプロジェクトルートから実行する場合に使う。
.env は Settings が読み込む。

Usage:
    python run_cli.py frame check --n 64 --scales 2
"""

import sys
from pathlib import Path

project_root = Path(__file__).resolve().parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

if __name__ == "__main__":
    from src.cli.main import main

    sys.exit(main())
