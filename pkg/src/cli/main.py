"""
amol コマンドラインインターフェース

Usage:
    amol frame check --n 64 --scales 2
    amol gramian --n 64 --scales 2 --pairs 1200
    amol consistency --alpha 0.5 --k 4 --jmax 5
    amol phantom --dim 3 --nu 10
    amol approx --nterms 100,1000,10000
    amol molecule --jmax 3
"""

import argparse
import sys
from typing import List, Optional

from src.cli import commands
from src.config.settings import get_settings
from src.utils.error_handler import EXIT_USAGE
from src.utils.logger import level_from_name, setup_logger


def build_parser() -> argparse.ArgumentParser:
    """引数パーサーを構築"""
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="amol", description="多変量 α分子ツールキット")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="ログレベル")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser, seed: bool = True) -> None:
        sub.add_argument("--out", default=settings.OUTPUT_DIR, help="出力ディレクトリ")
        if seed:
            sub.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)

    # frame check / frame analyze
    frame = subparsers.add_parser("frame", help="デジタル3次元シアレットフレーム")
    frame_sub = frame.add_subparsers(dest="frame_command", required=True)

    check = frame_sub.add_parser("check", help="タイトネスと窓の連続性を検査")
    check.add_argument("--n", type=int, default=64)
    check.add_argument("--scales", type=int, default=2)
    check.add_argument("--threshold", type=float, default=1e-8)
    add_common(check)
    check.set_defaults(func=commands.cmd_frame_check)

    analyze = frame_sub.add_parser("analyze", help="ボリュームの係数をCSVに書き出す")
    analyze.add_argument("--input", required=True, help="ボリュームのサイドカー（.json）")
    analyze.add_argument("--scales", type=int, default=2)
    analyze.add_argument("--keep", type=int, default=None, help="保持する上位係数の数")
    add_common(analyze, seed=False)
    analyze.set_defaults(func=commands.cmd_frame_analyze)

    gramian = subparsers.add_parser("gramian", help="相互グラム行列の減衰")
    gramian.add_argument("--n", type=int, default=64)
    gramian.add_argument("--scales", type=int, default=2)
    gramian.add_argument("--pairs", type=int, default=1200)
    gramian.add_argument("--omega-min", type=float, default=4.0)
    gramian.add_argument("--omega-max", type=float, default=200.0)
    gramian.add_argument("--max-slope", type=float, default=-3.0)
    gramian.add_argument("--min-r2", type=float, default=0.8)
    add_common(gramian)
    gramian.set_defaults(func=commands.cmd_gramian)

    consistency = subparsers.add_parser("consistency", help="(α, k) 整合性和")
    consistency.add_argument("--alpha", type=float, default=0.5)
    consistency.add_argument("--k", type=float, default=4.0)
    consistency.add_argument("--jmax", type=int, default=5)
    consistency.add_argument("--kmax", type=int, default=16)
    consistency.add_argument("--tau-a", type=float, default=1.0)
    consistency.add_argument("--tau-b", type=float, default=0.25)
    add_common(consistency, seed=False)
    consistency.set_defaults(func=commands.cmd_consistency)

    phantom = subparsers.add_parser("phantom", help="カートゥーン様関数の生成")
    phantom.add_argument("--nu", type=float, default=10.0)
    phantom.add_argument("--dim", type=int, default=3)
    phantom.add_argument("--n", type=int, default=64)
    add_common(phantom)
    phantom.set_defaults(func=commands.cmd_phantom)

    approx = subparsers.add_parser("approx", help="N項近似とレートフィット")
    approx.add_argument("--nterms", default="100,200,500,1000,2000,5000,10000")
    approx.add_argument("--nu", type=float, default=10.0)
    approx.add_argument("--n", type=int, default=64)
    approx.add_argument("--scales", type=int, default=2)
    approx.add_argument("--lattice", choices=["decimated", "full"], default="decimated", help="平行移動の格子")
    add_common(approx)
    approx.set_defaults(func=commands.cmd_approx)

    molecule = subparsers.add_parser("molecule", help="SH生成関数の位数検査と変換行列")
    molecule.add_argument("--order", default="2,3,4,4", help="代理位数 L,M,N1,N2")
    molecule.add_argument("--jmax", type=int, default=3)
    molecule.add_argument("--transfer-jmax", type=int, default=6)
    molecule.add_argument("--spacing", type=float, default=1.0 / 128.0)
    molecule.add_argument("--max-drift", type=float, default=10.0)
    add_common(molecule, seed=False)
    molecule.set_defaults(func=commands.cmd_molecule)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    エントリポイント

    Returns:
        終了コード（0: 成功, 1: 受け入れ失敗, 2: 使用法, 3: I/O）
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse の使用法エラーは2、--help は0
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    command = " ".join(filter(None, [args.command, getattr(args, "frame_command", None)]))
    setup_logger("amol", level_from_name(args.log_level), command=command)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
