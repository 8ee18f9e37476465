"""
N項近似

弱 ℓ^p ノルム、上位N個の係数による近似誤差の曲線、log-log のレートフィット
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.schemas.data_models import CoefficientSet, FrameSpec, SampledVolume
from src.schemas.reports import NTermRow, NTermTable, RateFit
from src.shearlets.frame3d import analysis, lattice_size, synthesis
from src.utils.errors import DomainError, InsufficientDataError
from src.utils.profiler import Timer

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4


def _check_p(p: float) -> None:
    if p <= 0:
        raise DomainError(f"p は正である必要があります: {p}")


def _rearranged(c) -> np.ndarray:
    """非増加並べ替え c*"""
    return np.sort(np.abs(np.asarray(c)).ravel())[::-1]


def weak_lp_norm(c, p: float) -> float:
    """弱 ℓ^p ノルム sup_n n^{1/p} c*_n"""
    _check_p(p)
    mags = _rearranged(c)
    if mags.size == 0:
        return 0.0
    n = np.arange(1, mags.size + 1, dtype=float)
    return float(np.max(n ** (1.0 / p) * mags))


def weak_lp_norm_counting(c, p: float) -> float:
    """
    計数形式の弱 ℓ^p ノルム (sup_ε ε^p #{|c| > ε})^{1/p}

    ε を c*_n の直下に取ると #{|c| > ε} は c*_n 以上の個数になる。
    """
    _check_p(p)
    mags = _rearranged(c)
    mags = mags[mags > 0]
    if mags.size == 0:
        return 0.0
    ascending = mags[::-1]
    counts = mags.size - np.searchsorted(ascending, mags, side="left")
    return float(np.max(mags ** p * counts) ** (1.0 / p))


def strong_lp_norm(c, p: float) -> float:
    """ℓ^p ノルム (Σ|c|^p)^{1/p}"""
    _check_p(p)
    mags = np.abs(np.asarray(c)).ravel()
    return float(np.sum(mags ** p) ** (1.0 / p))


def _head(c: CoefficientSet, count: int) -> CoefficientSet:
    """大きさ順に並んだ疎な係数集合の先頭 count 個"""
    return c.model_copy(update={
        "window_ids": c.window_ids[:count],
        "flat_k": c.flat_k[:count],
        "values": c.values[:count],
        "truncated": True,
    })


def nterm_curve(
    f: SampledVolume,
    spec: FrameSpec,
    Ns: Sequence[int],
    lattice: str = "decimated",
) -> NTermTable:
    """
    N項近似の誤差曲線

    各 N について大きさ上位 N 個の係数（同値はインデックス順）を合成し、
    err2 = ‖f − f_N‖²、tail2 = 捨てた係数のエネルギーを求める。
    既定の間引き格子では粗い窓の係数が少数に集まり、N の数え方が
    フレームの冗長度に引きずられない。

    Args:
        f: 空間領域のボリューム
        spec: フレーム仕様
        Ns: 増加列
        lattice: "decimated" または "full"

    Returns:
        NTermTable

    Raises:
        DomainError: Ns が増加列でない、または負の場合
    """
    Ns = [int(N) for N in Ns]
    if not Ns:
        raise InsufficientDataError("N の列が空です")
    if Ns[0] < 0 or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise DomainError(f"N は0以上の狭義増加列である必要があります: {Ns}")

    total = lattice_size(spec, lattice)
    if Ns[-1] > total:
        logger.warning(f"N = {Ns[-1]} が係数の総数 {total} を超えるため切り詰めます")
        Ns = sorted({min(N, total) for N in Ns})

    logger.info(f"N項近似: n={spec.n}, J={spec.J}, 格子={lattice}, N={Ns[0]}..{Ns[-1]}")
    with Timer("nterm_curve"):
        kept = analysis(f, spec, keep=Ns[-1], lattice=lattice)
        mags = np.abs(kept.values)
        cumulative = np.concatenate([[0.0], np.cumsum(mags * mags)])
        norm2 = f.norm2()

        rows = []
        for N in Ns:
            approximation = synthesis(_head(kept, N), spec)
            residual = f.data - approximation.data
            err2 = float(np.vdot(residual, residual).real)
            tail2 = max(0.0, kept.total_energy - float(cumulative[N]))
            c_star = float(mags[N - 1]) if N >= 1 else 0.0
            rows.append(NTermRow(N=N, err2=err2, tail2=tail2, c_star=c_star))
            logger.debug(f"N={N}: err2={err2:.4e}, tail2={tail2:.4e}")

    return NTermTable(
        rows=rows, norm2=norm2, total_energy=kept.total_energy, coefficient_count=total, lattice=lattice,
    )


def _log_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = ly - (slope * lx + intercept)
    spread = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residual ** 2)) / spread if spread > 0 else 1.0
    return float(slope), r2


def reference_rates(Ns: Sequence[float], d: int = 3) -> Dict[str, float]:
    """
    参照レートの傾き

    optimal: N^{−2/(d−1)}、log_corrected: N^{−1} log N を同じ N 上でフィットした傾き
    """
    Ns = np.asarray(Ns, dtype=float)
    rates = {"optimal": -2.0 / (d - 1)}
    usable = Ns[Ns > 1]
    if usable.size >= 2:
        rates["log_corrected"] = _log_fit(usable, np.log(usable) / usable)[0]
    return rates


def rate_fit(table: NTermTable, n_range: Optional[Tuple[float, float]] = None, d: int = 3) -> RateFit:
    """
    log err2 vs log N と log c*_N vs log N の最小二乗の傾き

    Args:
        table: N項近似の表
        n_range: 使用する N の範囲（省略時はすべて）
        d: 参照レートの次元

    Raises:
        InsufficientDataError: 範囲内の点が4未満、または誤差がすべて0の場合
    """
    low, high = n_range if n_range is not None else (1.0, math.inf)
    rows = [row for row in table.rows if low <= row.N <= high and row.N >= 1]
    if len(rows) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"レートフィットには {MIN_FIT_POINTS} 点以上必要です（{len(rows)} 点）")

    errors = [row for row in rows if row.err2 > 0]
    if len(errors) < MIN_FIT_POINTS:
        raise InsufficientDataError("誤差が0の点が多く、レートを推定できません")
    Ns = np.array([row.N for row in errors], dtype=float)
    exponent, r2 = _log_fit(Ns, np.array([row.err2 for row in errors]))

    coefficient_exponent = coefficient_r2 = None
    stars = [row for row in rows if row.c_star > 0]
    if len(stars) >= MIN_FIT_POINTS:
        coefficient_exponent, coefficient_r2 = _log_fit(
            np.array([row.N for row in stars], dtype=float),
            np.array([row.c_star for row in stars]),
        )

    all_Ns = [row.N for row in rows]
    return RateFit(
        exponent=exponent,
        r2=r2,
        coefficient_exponent=coefficient_exponent,
        coefficient_r2=coefficient_r2,
        n_range=(float(min(all_Ns)), float(max(all_Ns))),
        points=len(errors),
        reference=reference_rates(all_Ns, d),
    )


def nterm_rate_from_weak_lp(q: float) -> float:
    """係数が ωℓ^q に属するときの ‖f − f_N‖² の減衰指数 −(2/q − 1)"""
    if q <= 0:
        raise DomainError(f"q は正である必要があります: {q}")
    return -(2.0 / q - 1.0)


def is_monotone(table: NTermTable, tol: float = 1e-12) -> bool:
    """err2 が N について非増加か（‖f‖² に対する相対許容誤差）"""
    slack = tol * max(table.norm2, 1.0)
    return all(b.err2 <= a.err2 + slack for a, b in zip(table.rows, table.rows[1:]))
