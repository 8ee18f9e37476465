"""
ユーティリティのユニットテスト

キャッシュ、リトライ、並列実行、入力検証、エラーハンドリング、設定
"""


import logging
import pytest
from pydantic import ValidationError

from src.config.settings import Settings
from src.utils.cache import ArrayCache, cached_array, generate_cache_key
from src.utils.error_handler import (
    EXIT_ACCEPTANCE,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    UsageError,
    exit_code_for,
    handle_command_errors,
)
from src.utils.errors import (
    AcceptanceError,
    DomainError,
    InsufficientDataError,
    InvalidIndexError,
    StorageError,
)
from src.utils.logger import level_from_name, setup_logger
from src.utils.parallel import chunked, run_parallel, worker_count
from src.utils.profiler import Timer
from src.utils.retry import write_text_with_retry, write_with_retry
from src.utils.validation import (
    parse_int_list,
    validate_output_dir,
    validate_power_of_two,
)


class TestCache:
    """キャッシュのテスト"""

    def test_key_is_stable(self):
        """同じ引数なら同じキー"""
        assert generate_cache_key("window", 16, (1, 0)) == generate_cache_key("window", 16, (1, 0))
        assert generate_cache_key("window", 16, (1, 0)) != generate_cache_key("window", 32, (1, 0))

    def test_lru_eviction(self):
        """上限を超えると最も古いものを破棄"""
        cache = ArrayCache(max_entries=2)
        cache.set("a", 1)
        cache.set("b", 2)
        assert cache.get("a") == 1
        cache.set("c", 3)
        assert cache.get("b") is None
        assert cache.get("a") == 1
        assert cache.size() == 2

    def test_disabled_cache(self):
        """上限0ならキャッシュしない"""
        cache = ArrayCache(max_entries=0)
        cache.set("a", 1)
        assert cache.get("a") is None

    def test_decorator(self):
        """同じキーでは関数を1回だけ呼ぶ"""
        cache = ArrayCache(max_entries=8)
        calls = []

        @cached_array(cache, "square", lambda x: (x,))
        def square(x):
            calls.append(x)
            return x * x

        assert square(3) == 9
        assert square(3) == 9
        assert square(4) == 16
        assert calls == [3, 4]
        assert cache.hits == 1


class TestRetry:
    """書き込みリトライのテスト"""

    def test_transient_error_retried(self, mocker):
        """一時的なエラーは再試行"""
        mocker.patch("time.sleep")
        write = mocker.Mock(side_effect=[BlockingIOError("busy"), "ok"])
        assert write_with_retry(write, attempts=3) == "ok"
        assert write.call_count == 2

    def test_permanent_error_not_retried(self, mocker):
        """権限エラーは再試行せず StorageError"""
        write = mocker.Mock(side_effect=PermissionError("denied"))
        with pytest.raises(StorageError):
            write_with_retry(write, attempts=3)
        assert write.call_count == 1

    def test_attempts_exhausted(self, mocker):
        """試行回数を使い切ると StorageError"""
        mocker.patch("time.sleep")
        write = mocker.Mock(side_effect=TimeoutError("slow"))
        with pytest.raises(StorageError):
            write_with_retry(write, attempts=2)
        assert write.call_count == 2

    def test_text_uses_lf(self, tmp_path):
        """UTF-8・LF改行で書き込む"""
        path = write_text_with_retry(tmp_path / "out.txt", "a\nb\n")
        assert path.read_bytes() == b"a\nb\n"


class TestParallel:
    """並列実行のテスト"""

    def test_order_preserved(self):
        """結果はタスクの順序"""
        tasks = [lambda i=i: i * i for i in range(20)]
        assert run_parallel(tasks, max_workers=4) == [i * i for i in range(20)]

    def test_empty(self):
        assert run_parallel([]) == []

    def test_error_propagates(self):
        """タスクの例外はそのまま送出"""
        def fail():
            raise DomainError("bad")

        with pytest.raises(DomainError):
            run_parallel([lambda: 1, fail], max_workers=2)

    def test_worker_count(self):
        """タスク数と上限で制限され、1以上"""
        assert worker_count(3, max_workers=8) == 3
        assert worker_count(10, max_workers=2) == 2
        assert worker_count(0, max_workers=4) == 1

    def test_chunked(self):
        assert chunked([1, 2, 3, 4, 5], 2) == [[1, 2], [3, 4], [5]]
        assert chunked([1, 2], 0) == [[1], [2]]


class TestValidation:
    """入力検証のテスト"""

    @pytest.mark.parametrize("value, expected", [(64, True), (16, True), (63, False), (0, False)])
    def test_power_of_two(self, value, expected):
        assert validate_power_of_two(value, minimum=2)[0] is expected

    def test_parse_int_list(self):
        assert parse_int_list("100, 1000,10000") == [100, 1000, 10000]
        with pytest.raises(ValueError):
            parse_int_list("100,abc")
        with pytest.raises(ValueError):
            parse_int_list("")

    def test_output_dir(self, tmp_path):
        """ディレクトリを作成し、ファイルは拒否"""
        assert validate_output_dir(tmp_path / "new" / "dir")[0]
        assert (tmp_path / "new" / "dir").is_dir()
        file_path = tmp_path / "file.txt"
        file_path.write_text("x", encoding="utf-8")
        assert not validate_output_dir(file_path)[0]


class TestErrorHandler:
    """終了コードへの対応付けのテスト"""

    @pytest.mark.parametrize("error, code", [
        (UsageError("x"), EXIT_USAGE),
        (DomainError("x"), EXIT_USAGE),
        (InvalidIndexError("x"), EXIT_USAGE),
        (InsufficientDataError("x"), EXIT_USAGE),
        (StorageError("x"), EXIT_IO),
        (PermissionError("x"), EXIT_IO),
        (AcceptanceError("x"), EXIT_ACCEPTANCE),
        (RuntimeError("x"), EXIT_ACCEPTANCE),
    ])
    def test_exit_codes(self, error, code):
        assert exit_code_for(error) == code

    def test_validation_error_is_usage(self):
        """pydantic の検証エラーは使用法エラー"""
        with pytest.raises(ValidationError) as exc_info:
            Settings(WRITE_RETRY_ATTEMPTS=0)
        assert exit_code_for(exc_info.value) == EXIT_USAGE

    def test_decorator(self):
        """例外を終了コードに変換し、正常時はそのまま返す"""
        @handle_command_errors
        def ok():
            return EXIT_OK

        @handle_command_errors
        def broken():
            raise StorageError("disk full")

        assert ok() == EXIT_OK
        assert broken() == EXIT_IO


class TestSettingsAndLogging:
    """設定とロギングのテスト"""

    def test_defaults(self, monkeypatch):
        """既定値"""
        monkeypatch.delenv("AMOL_THREADS", raising=False)
        monkeypatch.delenv("DEFAULT_SEED", raising=False)
        settings = Settings()
        assert settings.DEFAULT_SEED == 0
        assert settings.QUADRATURE_REFINEMENT >= 1

    def test_environment_override(self, monkeypatch):
        """環境変数で上書き"""
        monkeypatch.setenv("AMOL_THREADS", "2")
        assert Settings().AMOL_THREADS == 2

    def test_log_level_normalized(self, monkeypatch):
        """ログレベルは大文字に正規化し、未知の名前は拒否"""
        monkeypatch.setenv("LOG_LEVEL", "debug")
        assert Settings().LOG_LEVEL == "DEBUG"
        monkeypatch.setenv("LOG_LEVEL", "verbose")
        with pytest.raises(ValidationError):
            Settings()

    def test_level_from_name(self):
        assert level_from_name("debug") == logging.DEBUG
        assert level_from_name("unknown") == logging.INFO

    def test_setup_logger_replaces_handlers(self, tmp_path):
        """再設定してもハンドラは重複せず、レコードにコマンド名が付く"""
        log_file = tmp_path / "run.log"
        setup_logger("amol", logging.INFO, command="gramian", log_file=log_file)
        setup_logger("amol", logging.INFO, command="gramian", log_file=log_file)
        own = [h for h in logging.getLogger().handlers if getattr(h, "_amol_handler", False)]
        assert len(own) == 2

        logging.getLogger("amol.test").info("記録")
        for handler in own:
            handler.flush()
        assert "[gramian] 記録" in log_file.read_text(encoding="utf-8")

    def test_timer(self):
        with Timer("test") as timer:
            pass
        assert timer.get_elapsed() >= 0.0

    def test_timer_record(self):
        """同名の段階は合算され、失敗した段階は記録しない"""
        timings = {}
        with Timer("stage", record=timings):
            pass
        with Timer("stage", record=timings):
            pass
        with pytest.raises(RuntimeError):
            with Timer("failed", record=timings):
                raise RuntimeError("x")
        assert set(timings) == {"stage"}
        assert timings["stage"] >= 0.0
