"""
キャッシュ機能

デジタル窓や支持ボックスなど、再計算コストの高い配列をメモ化する
"""

import hashlib
import json
import logging
import threading
from collections import OrderedDict
from typing import Optional, Any, Callable, TypeVar
from functools import wraps

logger = logging.getLogger(__name__)

T = TypeVar('T')


class ArrayCache:
    """件数上限付きのインメモリLRUキャッシュ（スレッドセーフ）"""

    def __init__(self, max_entries: int = 64):
        """
        初期化

        Args:
            max_entries: 保持する最大件数（0ならキャッシュしない）
        """
        self._cache: "OrderedDict[str, Any]" = OrderedDict()
        self._lock = threading.Lock()
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[Any]:
        """
        キャッシュから値を取得

        Args:
            key: キャッシュキー

        Returns:
            キャッシュされた値、またはNone
        """
        with self._lock:
            if key not in self._cache:
                self.misses += 1
                return None
            self._cache.move_to_end(key)
            self.hits += 1
            return self._cache[key]

    def set(self, key: str, value: Any) -> None:
        """
        キャッシュに値を設定（上限を超えたら最も古いものを破棄）

        Args:
            key: キャッシュキー
            value: キャッシュする値
        """
        if self.max_entries <= 0:
            return
        with self._lock:
            self._cache[key] = value
            self._cache.move_to_end(key)
            while len(self._cache) > self.max_entries:
                evicted, _ = self._cache.popitem(last=False)
                logger.debug(f"キャッシュから破棄: {evicted[:12]}")

    def clear(self) -> None:
        """キャッシュをクリア"""
        with self._lock:
            self._cache.clear()
            self.hits = 0
            self.misses = 0

    def size(self) -> int:
        """キャッシュサイズを取得"""
        return len(self._cache)


def generate_cache_key(prefix: str, *args, **kwargs) -> str:
    """
    キャッシュキーを生成

    Args:
        prefix: プレフィックス
        *args: 位置引数（JSON化可能であること）
        **kwargs: キーワード引数

    Returns:
        キャッシュキー（ハッシュ）
    """
    key_data = {
        "prefix": prefix,
        "args": args,
        "kwargs": kwargs
    }
    key_string = json.dumps(key_data, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(key_string.encode()).hexdigest()


def cached_array(cache: ArrayCache, prefix: str, key_func: Callable[..., tuple]):
    """
    計算結果をキャッシュするデコレータ

    Usage:
        @cached_array(_window_cache, "window", lambda spec, w: (spec.cache_token(), w))
        def digital_window(spec, w):
            ...

    Args:
        cache: 保存先キャッシュ
        prefix: キーのプレフィックス
        key_func: 引数からJSON化可能なキー要素を作る関数
    """
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        def wrapper(*args, **kwargs):
            cache_key = generate_cache_key(prefix, *key_func(*args, **kwargs))
            cached_result = cache.get(cache_key)
            if cached_result is not None:
                return cached_result
            result = func(*args, **kwargs)
            cache.set(cache_key, result)
            return result

        return wrapper

    return decorator
