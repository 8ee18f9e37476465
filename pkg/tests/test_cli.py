"""
CLIのテスト

小さな格子でサブコマンドを実行し、終了コードと出力ファイルを確認
"""

import json

import numpy as np
import pytest

from src.cli import commands
from src.cli.main import build_parser, main
from src.schemas.data_models import SampledVolume
from src.schemas.reports import GridReport, TightnessReport
from src.storage.files import read_csv_rows, save_volume
from src.utils.error_handler import EXIT_ACCEPTANCE, EXIT_IO, EXIT_OK, EXIT_USAGE


@pytest.fixture(autouse=True)
def log_file(tmp_path, monkeypatch):
    """ログはテスト用の一時ファイルへ"""
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "amol.log"))


@pytest.fixture
def out(tmp_path):
    return tmp_path / "results"


def _report(path):
    return json.loads(path.read_text(encoding="utf-8"))


class TestParser:
    """引数パーサーのテスト"""

    def test_defaults(self):
        """既定値"""
        args = build_parser().parse_args(["frame", "check"])
        assert args.n == 64
        assert args.scales == 2
        assert args.threshold == 1e-8

    def test_unknown_command(self):
        """不明なサブコマンドは使用法エラー"""
        assert main(["unknown"]) == EXIT_USAGE

    def test_missing_required(self):
        """必須引数が無ければ使用法エラー"""
        assert main(["frame", "analyze"]) == EXIT_USAGE


class TestFrameCommands:
    """frame check / frame analyze のテスト"""

    def test_frame_check(self, out):
        """小さな格子で検査が通り、レポートを書き出す"""
        assert main(["frame", "check", "--n", "16", "--scales", "1", "--out", str(out)]) == EXIT_OK
        payload = _report(out / "frame_check.json")
        assert payload["command"] == "frame check"
        assert payload["config"]["n"] == 16
        assert payload["result"]["passed"] is True
        assert payload["result"]["tightness"]["max_dev"] <= 1e-10
        assert set(payload["result"]["timings"]) == {"tightness", "continuity"}

    @pytest.mark.parametrize("argv", [
        ["--n", "63", "--scales", "1"],
        ["--n", "16", "--scales", "9"],
        ["--n", "16", "--scales", "-1"],
    ])
    def test_invalid_grid(self, out, argv):
        """2の冪でない n、大きすぎる J は使用法エラー"""
        assert main(["frame", "check", *argv, "--out", str(out)]) == EXIT_USAGE

    def test_acceptance_failure(self, out, mocker):
        """max_dev が閾値を超えると終了コード1"""
        report = TightnessReport(
            max_dev=0.5,
            grid_report=GridReport(
                n=16, J=1, freq_scale=0.125, points=4096, n_windows=63,
                argmax_xi=(0.25, 0.25, 0.0), min_total=0.5, max_total=1.0,
            ),
        )
        mocker.patch.object(commands, "check_tight", return_value=report)
        assert main(["frame", "check", "--n", "16", "--scales", "1", "--out", str(out)]) == EXIT_ACCEPTANCE
        assert _report(out / "frame_check.json")["result"]["passed"] is False

    def test_unwritable_output(self, tmp_path):
        """出力先がファイルなら I/O エラー"""
        blocker = tmp_path / "blocker"
        blocker.write_text("x", encoding="utf-8")
        assert main(["frame", "check", "--n", "16", "--scales", "1", "--out", str(blocker)]) == EXIT_IO

    def test_frame_analyze(self, tmp_path, out):
        """保存したボリュームの上位係数をCSVに書き出す"""
        volume = SampledVolume(data=np.random.default_rng(0).standard_normal((16, 16, 16)))
        sidecar = save_volume(volume, tmp_path / "input")
        argv = ["frame", "analyze", "--input", str(sidecar), "--scales", "1", "--keep", "20", "--out", str(out)]
        assert main(argv) == EXIT_OK
        assert len(read_csv_rows(out / "coefficients.csv")) == 20

    def test_frame_analyze_missing_input(self, tmp_path, out):
        """入力が無ければ I/O エラー"""
        argv = ["frame", "analyze", "--input", str(tmp_path / "missing.json"), "--out", str(out)]
        assert main(argv) == EXIT_IO


class TestOtherCommands:
    """gramian / consistency / phantom / approx / molecule のテスト"""

    def test_gramian_without_pairs(self, out):
        assert main(["gramian", "--n", "16", "--scales", "1", "--pairs", "0", "--out", str(out)]) == EXIT_USAGE

    def test_gramian_too_few_rows(self, out):
        """フィットに必要な行数が無ければ使用法エラー"""
        argv = ["gramian", "--n", "16", "--scales", "1", "--pairs", "3", "--out", str(out)]
        assert main(argv) == EXIT_USAGE
        assert len(read_csv_rows(out / "gramian.csv")) == 3

    def test_consistency(self, out):
        """整合性和は常に終了コード0"""
        argv = ["consistency", "--k", "4", "--jmax", "2", "--kmax", "4", "--out", str(out)]
        assert main(argv) == EXIT_OK
        result = _report(out / "consistency.json")["result"]
        assert result["sup_estimate"] > 0

    def test_phantom(self, out):
        """ファントムのレポートとボリューム"""
        assert main(["phantom", "--n", "16", "--seed", "3", "--out", str(out)]) == EXIT_OK
        result = _report(out / "phantom.json")["result"]
        assert result["curvature_bound"] <= 10.0 * (1 + 1e-12)
        assert (out / "phantom_volume.json").exists()
        assert (out / "phantom_volume.bin").stat().st_size == 16 ** 3 * 8

    @pytest.mark.parametrize("argv", [["--nu", "1"], ["--dim", "4"]])
    def test_phantom_invalid(self, out, argv):
        assert main(["phantom", "--n", "16", *argv, "--out", str(out)]) == EXIT_USAGE

    def test_approx(self, out, mocker):
        """N項近似の表とフィット"""
        mocker.patch.object(commands, "is_monotone", return_value=True)
        argv = ["approx", "--n", "16", "--scales", "1", "--nterms", "10,20,50,100", "--out", str(out)]
        assert main(argv) == EXIT_OK
        rows = read_csv_rows(out / "rates.csv")
        assert [int(row["N"]) for row in rows] == [10, 20, 50, 100]
        assert _report(out / "approx.json")["result"]["fit"] is not None
        assert _report(out / "approx.json")["result"]["table"]["lattice"] == "decimated"

    def test_approx_full_lattice(self, out, mocker):
        """--lattice full は全格子で数える"""
        mocker.patch.object(commands, "is_monotone", return_value=True)
        argv = [
            "approx", "--n", "16", "--scales", "1", "--nterms", "10,20,50,100",
            "--lattice", "full", "--out", str(out),
        ]
        assert main(argv) == EXIT_OK
        table = _report(out / "approx.json")["result"]["table"]
        assert table["lattice"] == "full"
        assert table["coefficient_count"] == 63 * 16 ** 3

    def test_approx_bad_nterms(self, out):
        assert main(["approx", "--n", "16", "--scales", "1", "--nterms", "10,x", "--out", str(out)]) == EXIT_USAGE

    def test_molecule(self, out):
        """j = 0 だけなら定数の比は1"""
        argv = ["molecule", "--jmax", "0", "--transfer-jmax", "2", "--out", str(out)]
        assert main(argv) == EXIT_OK
        result = _report(out / "molecule.json")["result"]
        assert result["drift"] == pytest.approx(1.0)
        assert result["transfer_axis_residual"] <= 1e-12

    def test_molecule_bad_order(self, out):
        assert main(["molecule", "--order", "1,2,3", "--out", str(out)]) == EXIT_USAGE
