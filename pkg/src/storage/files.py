"""
ファイル入出力

ボリューム（JSONサイドカー + 生バイナリ）、係数・グラム行列・レートのCSV、JSONレポート
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from src.config.settings import get_settings
from src.schemas.data_models import CoefficientSet, GramianTable, SampledVolume
from src.schemas.reports import CommandEnvelope, NTermTable
from src.utils.errors import StorageError
from src.utils.retry import write_bytes_with_retry, write_text_with_retry

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

COEFFICIENT_HEADER = ["epsilon", "j", "l1", "l2", "k1", "k2", "k3", "re", "im"]
GRAMIAN_HEADER = (
    [f"a_{name}" for name in ("eps", "j", "l1", "l2", "k1", "k2", "k3")]
    + [f"b_{name}" for name in ("eps", "j", "l1", "l2", "k1", "k2", "k3")]
    + ["re", "im", "omega"]
)
RATE_HEADER = ["N", "err2", "tail2", "c_star"]

_DTYPES = {"float64": "<f8", "complex128": "<c16"}


def _attempts() -> int:
    return get_settings().WRITE_RETRY_ATTEMPTS


def _format(value: Any) -> str:
    """再実行でバイト単位一致するよう repr 精度で書く"""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_text(header: List[str], rows: Iterable[Iterable[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(v) for v in row])
    return buffer.getvalue()


def _stem(path: PathLike) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".json", ".bin") else path


def save_volume(volume: SampledVolume, path: PathLike, freq_scale: Optional[float] = None) -> Path:
    """
    ボリュームを <stem>.json（メタデータ）と <stem>.bin（リトルエンディアン行優先）に保存

    Returns:
        サイドカーのパス
    """
    stem = _stem(path)
    dtype = "complex128" if np.iscomplexobj(volume.data) else "float64"
    meta: Dict[str, Any] = {
        "dims": list(volume.dims),
        "dtype": dtype,
        "domain": volume.domain,
        "spacing": volume.spacing,
    }
    if volume.origin is not None:
        meta["origin"] = list(volume.origin)
    if freq_scale is not None:
        meta["freq_scale"] = freq_scale
    payload = np.ascontiguousarray(volume.data, dtype=_DTYPES[dtype]).tobytes(order="C")
    write_bytes_with_retry(stem.with_suffix(".bin"), payload, attempts=_attempts())
    sidecar = write_text_with_retry(
        stem.with_suffix(".json"), json.dumps(meta, indent=2) + "\n", attempts=_attempts()
    )
    logger.info(f"ボリュームを保存: {sidecar}")
    return sidecar


def load_volume(path: PathLike) -> SampledVolume:
    """
    save_volume の形式のボリュームを読み込む

    Raises:
        StorageError: ファイルが読めない、またはサイズが一致しない場合
    """
    stem = _stem(path)
    try:
        meta = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
        raw = stem.with_suffix(".bin").read_bytes()
    except (OSError, ValueError) as e:
        raise StorageError(f"ボリュームを読み込めません: {stem} ({e})") from e

    dtype = meta.get("dtype")
    if dtype not in _DTYPES:
        raise StorageError(f"未対応のデータ型です: {dtype}")
    try:
        dims = tuple(int(c) for c in meta["dims"])
    except (KeyError, TypeError, ValueError) as e:
        raise StorageError(f"dims が不正です: {stem} ({e})") from e
    expected = int(np.prod(dims)) * np.dtype(_DTYPES[dtype]).itemsize
    if len(raw) != expected:
        raise StorageError(f"バイナリのサイズ {len(raw)} バイトが dims {dims} の {expected} バイトと一致しません")
    data = np.frombuffer(raw, dtype=_DTYPES[dtype])
    origin = meta.get("origin")
    return SampledVolume(
        data=data.reshape(dims).astype(dtype),
        domain=meta.get("domain", "spatial"),
        spacing=float(meta.get("spacing", 1.0)),
        origin=tuple(origin) if origin is not None else None,
    )


def write_coefficients_csv(coefficients: CoefficientSet, path: PathLike) -> Path:
    """係数を "epsilon,j,l1,l2,k1,k2,k3,re,im" 形式で書き出す"""
    rows = []
    for idx, value in coefficients.entries():
        rows.append([idx.epsilon, idx.j, *idx.ell, *idx.k, value.real, value.imag])
    return write_text_with_retry(path, _csv_text(COEFFICIENT_HEADER, rows), attempts=_attempts())


def write_gramian_csv(table: GramianTable, path: PathLike) -> Path:
    """グラム行列の標本をCSVに書き出す（(index_a, index_b) 順）"""
    rows = []
    for row in table.sorted().rows:
        a, b = row.index_a, row.index_b
        rows.append([
            a.epsilon, a.j, *a.ell, *a.k,
            b.epsilon, b.j, *b.ell, *b.k,
            row.re, row.im, row.omega,
        ])
    return write_text_with_retry(path, _csv_text(GRAMIAN_HEADER, rows), attempts=_attempts())


def write_rates_csv(table: NTermTable, path: PathLike) -> Path:
    """N項近似の表を "N,err2,tail2,c_star" 形式で書き出す"""
    rows = [[row.N, row.err2, row.tail2, row.c_star] for row in table.rows]
    return write_text_with_retry(path, _csv_text(RATE_HEADER, rows), attempts=_attempts())


def read_csv_rows(path: PathLike) -> List[Dict[str, str]]:
    """CSVを辞書の列として読む"""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as e:
        raise StorageError(f"CSVを読み込めません: {path} ({e})") from e


def write_report(command: str, config: Dict[str, Any], result: BaseModel, path: PathLike) -> Path:
    """CommandEnvelope で包んだJSONレポートを書き出す"""
    envelope = CommandEnvelope(command=command, config=config, result=result.model_dump(mode="json"))
    text = envelope.model_dump_json(indent=2) + "\n"
    written = write_text_with_retry(path, text, attempts=_attempts())
    logger.info(f"レポートを保存: {written}")
    return written
