"""
α分子の重み関数と位数検査

分子条件・シアレット分子条件の重み、生成関数の位数検査（中心差分）、
SH原子の生成関数、シアレットから分子への変換行列
"""

import functools
import itertools
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.molecules.geometry import angles_from_direction, rotation_phi, rotation_theta
from src.molecules.parametrization import alpha_scale, block_matrices, cyclic_power, shear
from src.schemas.data_models import Direction, MoleculeOrder, SampledVolume, SamplingData, ShearletIndex
from src.schemas.reports import DerivativeBound, OrderCheckReport, ScaleConstant, TransferReport
from src.shearlets.frame3d import is_boundary, validate_window, window_values
from src.shearlets.windows import DEFAULT_PROFILE, TRANSITION_BAND
from src.utils.errors import DomainError, GridResolutionError, InvalidIndexError
from src.utils.parallel import chunked, run_parallel, worker_count

logger = logging.getLogger(__name__)

ORDER_CHECK_MODES = ("molecule", "shearlet")


def _bracket(x: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + x * x)


def _split(xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(|ξ|_{[d−1]}, [ξ]_d)"""
    return np.linalg.norm(xi[..., :-1], axis=-1), xi[..., -1]


def weight_molcon(xi, alpha: float, s: float, order: MoleculeOrder):
    """
    分子条件の重み

    min(1, s^{−1} + |[ξ]_d| + s^{−(1−α)}|ξ|_{[d−1]})^M ⟨|ξ|⟩^{−N_1} ⟨|ξ|_{[d−1]}⟩^{−N_2}

    Args:
        xi: 周波数（末尾の軸が成分）
        alpha: α
        s: スケール (> 0)
        order: 有限の位数

    Returns:
        正の重み（xi が1次元ならfloat）
    """
    if s <= 0:
        raise DomainError(f"s は正である必要があります: {s}")
    xi = np.asarray(xi, dtype=float)
    transverse, axial = _split(xi)
    low = np.minimum(1.0, 1.0 / s + np.abs(axial) + s ** (-(1.0 - alpha)) * transverse)
    value = (
        low ** order.value("M")
        * _bracket(np.linalg.norm(xi, axis=-1)) ** (-order.value("N1"))
        * _bracket(transverse) ** (-order.value("N2"))
    )
    return float(value) if xi.ndim == 1 else value


def weight_shearcon(xi, alpha: float, sigma: float, j: int, eps: int, order: MoleculeOrder):
    """
    シアレット分子条件の重み

    min(1, σ^{−j} + σ^{−(1−α)j}|Z^{−ε}ξ|_{[d−1]} + |[Z^{−ε}ξ]_d|)^M
    / (⟨|ξ|⟩^{N_1} ⟨|Z^{−ε}ξ|_{[d−1]}⟩^{N_2})

    j = math.inf は極限の重み min(1, |[Z^{−ε}ξ]_d|)^M / (…)。
    """
    if sigma <= 1:
        raise DomainError(f"σ は1より大きい必要があります: {sigma}")
    if j < 0:
        raise DomainError(f"j は0以上である必要があります: {j}")
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    rotated = xi @ cyclic_power(-eps, d).T.astype(float)
    transverse, axial = _split(rotated)
    low = np.minimum(1.0, sigma ** (-j) + sigma ** (-(1.0 - alpha) * j) * transverse + np.abs(axial))
    value = (
        low ** order.value("M")
        * _bracket(np.linalg.norm(xi, axis=-1)) ** (-order.value("N1"))
        * _bracket(transverse) ** (-order.value("N2"))
    )
    return float(value) if xi.ndim == 1 else value


def _multi_indices(d: int, max_order: int) -> List[Tuple[int, ...]]:
    indices = [
        rho for rho in itertools.product(range(max_order + 1), repeat=d)
        if sum(rho) <= max_order
    ]
    return sorted(indices, key=lambda rho: (sum(rho), tuple(-r for r in rho)))


def _derivative(values: np.ndarray, rho: Sequence[int], spacing: float) -> np.ndarray:
    result = values
    for axis, count in enumerate(rho):
        for _ in range(count):
            result = np.gradient(result, spacing, axis=axis, edge_order=2)
    return result


def order_check(
    g_hat: SampledVolume,
    alpha: float,
    order: MoleculeOrder,
    mode: str = "molecule",
    s: Optional[float] = None,
    sigma: Optional[float] = None,
    j: Optional[int] = None,
    eps: Optional[int] = None,
) -> OrderCheckReport:
    """
    生成関数の位数検査

    |ρ|_1 ≤ L のすべての微分について sup |∂^ρ ĝ| / 重み を格子上で求める。
    微分は格子間隔での中心差分（O(h²)）。

    Args:
        g_hat: 周波数領域の一様格子上の ĝ
        alpha: α
        order: 有限の代理位数（L ≤ 2）
        mode: "molecule"（s を使用）または "shearlet"（σ, j, ε を使用）
        s: 分子条件のスケール
        sigma, j, eps: シアレット分子条件のパラメータ

    Returns:
        OrderCheckReport

    Raises:
        DomainError: 位数が無限・L > 2、パラメータ不足の場合
        GridResolutionError: L ≥ 1 で格子間隔が遷移帯の1/8を超える場合
    """
    if mode not in ORDER_CHECK_MODES:
        raise DomainError(f"不明なモードです: {mode}")
    if not order.is_finite:
        raise DomainError("order_check には有限の代理位数を指定してください")
    L = int(order.value("L"))
    if L > 2:
        raise DomainError(f"中心差分で扱える微分の位数は2までです: L = {L}")
    if g_hat.domain != "frequency":
        raise DomainError("ĝ は周波数領域のボリュームである必要があります")
    if L >= 1 and g_hat.spacing > TRANSITION_BAND / 8 * (1 + 1e-12):
        raise GridResolutionError(
            f"格子間隔 {g_hat.spacing} が粗すぎます（≤ {TRANSITION_BAND / 8} が必要）"
        )

    if mode == "molecule":
        if s is None:
            raise DomainError("molecule モードには s が必要です")

        def weight(xi):
            return weight_molcon(xi, alpha, s, order)
    else:
        if sigma is None or j is None or eps is None:
            raise DomainError("shearlet モードには sigma, j, eps が必要です")

        def weight(xi):
            return weight_shearcon(xi, alpha, sigma, j, eps, order)

    values = g_hat.data
    d = values.ndim
    axes = g_hat.axis_coordinates()

    # 重みは先頭軸のスラブごとに評価
    def slab_weight(rows: List[int]) -> np.ndarray:
        grids = np.meshgrid(axes[0][rows], *axes[1:], indexing="ij")
        return weight(np.stack(grids, axis=-1))

    rows = list(range(values.shape[0]))
    slabs = chunked(rows, math.ceil(len(rows) / worker_count(len(rows))))
    weights = np.concatenate(run_parallel([functools.partial(slab_weight, slab) for slab in slabs]), axis=0)

    per_derivative = []
    for rho in _multi_indices(d, L):
        derivative = np.abs(_derivative(values, rho, g_hat.spacing))
        # 重みが0の点では微分も0でなければ上限なし
        ratio = np.divide(
            derivative, weights,
            out=np.where(derivative > 0, np.inf, 0.0), where=weights > 0,
        )
        per_derivative.append(DerivativeBound(rho=rho, ratio=float(np.max(ratio))))
    constant = max(bound.ratio for bound in per_derivative)
    logger.debug(f"order_check: mode={mode}, L={L}, 定数={constant:.4g}")
    return OrderCheckReport(order=order, mode=mode, constant=constant, per_derivative=per_derivative)


def generator_transform(eps: int, j: int, ell: Sequence[int]) -> np.ndarray:
    """生成関数の座標変換 Z^ε A^j S^T_ℓ Z^{−ε}（SH: σ = 4, α = ½）"""
    z = cyclic_power(eps, 3).astype(float)
    z_inv = cyclic_power(-eps, 3).astype(float)
    return z @ alpha_scale(0.5, 4.0 ** j, 3) @ shear(np.asarray(ell, dtype=float), transposed=True) @ z_inv


def sh_generator_hat(eps: int, j: int, ell: Sequence[int], xi, profile=DEFAULT_PROFILE):
    """
    SH原子の平行移動に依らない生成関数 γ̂

    γ̂(ξ) = 2^{2j} · 振幅 · 窓(Z^ε A^j S^T_ℓ Z^{−ε} ξ)。内部原子は窓そのもの、
    j ≥ 1 の境界・角原子は 1/8 倍。j = 0 では窓そのもの。
    """
    key = validate_window(eps, j, ell)
    xi = np.asarray(xi, dtype=float)
    if j == 0:
        values = window_values(key, [xi[..., 0], xi[..., 1], xi[..., 2]], profile)
        return float(values) if xi.ndim == 1 else values
    mapped = xi @ generator_transform(eps, j, ell).T
    values = window_values(key, [mapped[..., 0], mapped[..., 1], mapped[..., 2]], profile)
    if is_boundary(key):
        values = values / 8.0
    return float(values) if xi.ndim == 1 else values


def sample_generator(eps: int, j: int, ell: Sequence[int], spacing: float = TRANSITION_BAND / 8, radius: float = 0.5) -> SampledVolume:
    """γ̂ を立方格子 [−radius, radius]³ 上で標本化"""
    count = int(round(2 * radius / spacing)) + 1
    axis = -radius + spacing * np.arange(count)
    grids = np.meshgrid(axis, axis, axis, indexing="ij")
    values = sh_generator_hat(eps, j, ell, np.stack(grids, axis=-1))
    return SampledVolume(data=values, domain="frequency", spacing=spacing, origin=(-radius,) * 3)


# 重みの j → ∞ の極限（すべてのスケールの重み以下）
UNIFORM_SCALE = math.inf


def interior_windows(j: int) -> List[Tuple[int, int, Tuple[int, int]]]:
    """位数検査に使う内部窓（中央と端の内部シア）"""
    windows = [(3, j, (0, 0))]
    if j >= 1:
        edge = 2 ** j - 1
        windows.append((3, j, (edge, -edge)))
        windows.append((1, j, (0, edge)))
    return windows


def scale_constants(j_max: int, order: MoleculeOrder, spacing: float = TRANSITION_BAND / 8) -> List[ScaleConstant]:
    """
    スケールごとの分子定数

    各スケールの内部生成関数について、そのスケールの重みに対する定数と、
    極限の重み min(1, |[Z^{−ε}ξ]_d|)^M / (⟨|ξ|⟩^{N_1}⟨|Z^{−ε}ξ|_{[d−1]}⟩^{N_2}) に対する定数を求める。
    極限の重みは各スケールの重み以下なので、後者がスケールに依らず有界なら
    シアレット分子条件の定数は一様に取れる。

    Args:
        j_max: 最大スケール
        order: 有限の代理位数
        spacing: 生成関数の標本化間隔

    Returns:
        ScaleConstant のリスト（j = 0..j_max）
    """
    if j_max < 0:
        raise DomainError(f"j_max は0以上である必要があります: {j_max}")
    rows = []
    for j in range(j_max + 1):
        own, uniform = [], []
        for eps, jj, ell in interior_windows(j):
            g_hat = sample_generator(eps, jj, ell, spacing=spacing)
            for scale, sink in ((jj, own), (UNIFORM_SCALE, uniform)):
                report = order_check(g_hat, 0.5, order, mode="shearlet", sigma=4.0, j=scale, eps=eps)
                sink.append(report.constant)
        rows.append(ScaleConstant(j=j, constant=max(own), uniform_constant=max(uniform), windows=len(own)))
        logger.info(f"分子定数: j={j}, 定数={rows[-1].constant:.4g}, 一様定数={rows[-1].uniform_constant:.4g}")
    return rows


def constant_drift(rows: Sequence[ScaleConstant]) -> float:
    """一様定数のスケール間の比 max_j / min_j"""
    values = [row.uniform_constant for row in rows]
    if not values:
        raise DomainError("スケールごとの定数が空です")
    low = min(values)
    return max(values) / low if low > 0 else math.inf


def _operator_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, 2))


def transfer_matrices(idx: ShearletIndex, sampling: SamplingData, alpha: float) -> TransferReport:
    """
    シアレット分子から α分子への変換行列

    M = S^{−T}_{ℓη_j} Z^{−ε} R_φ^T R_θ^T（(θ, φ) は方向 e_λ の角度）、M̃ = A^{−j} M A^j。
    M e_d = n_λ e_d, n_λ = (1 + |ℓη_j|²)^{−1/2} を満たす。

    Raises:
        InvalidIndexError: ε が 1..d でない場合
    """
    d = idx.dim
    if not 1 <= idx.epsilon <= d:
        raise InvalidIndexError(f"変換行列には 1 ≤ ε ≤ {d} が必要です: ε = {idx.epsilon}")
    if sampling.dim != d:
        raise DomainError("サンプリングデータとインデックスの次元が一致しません")

    _, direction, _ = block_matrices(idx.epsilon, idx.j, idx.ell, sampling, alpha)
    angles = angles_from_direction(Direction(coords=tuple(float(c) for c in direction / np.linalg.norm(direction))))
    rotation_t = rotation_phi(angles.phi, d).T @ rotation_theta(angles.theta, d).T

    h = sampling.eta(idx.j) * np.asarray(idx.ell, dtype=float)
    m = shear(-h, transposed=True) @ cyclic_power(-idx.epsilon, d).astype(float) @ rotation_t
    a_j = alpha_scale(alpha, sampling.sigma ** idx.j, d)
    a_inv = alpha_scale(alpha, sampling.sigma ** (-idx.j), d)
    m_tilde = a_inv @ m @ a_j

    n_lambda = 1.0 / math.sqrt(1.0 + float(h @ h))
    e_d = np.zeros(d)
    e_d[-1] = 1.0
    residual = float(np.linalg.norm(m @ e_d - n_lambda * e_d))
    norms = {
        "M": _operator_norm(m),
        "M_inv": _operator_norm(np.linalg.inv(m)),
        "M_tilde": _operator_norm(m_tilde),
        "M_tilde_inv": _operator_norm(np.linalg.inv(m_tilde)),
    }
    return TransferReport(
        M=m.tolist(), M_tilde=m_tilde.tolist(), norms=norms,
        n_lambda=n_lambda, axis_residual=residual,
    )


def decay_order_bound(order: MoleculeOrder, alpha: float, d: int) -> Optional[int]:
    """
    位数から保証される減衰指数 N の最大値

    N_1 > d/2, L ≥ 2N, M > 3N − d + (1+α(d−1))/2, N_1 ≥ N + (1+α(d−1))/2, N_2 ≥ 2N + d − 2
    を満たす最大の正整数 N（該当なしは0、すべて無限なら None）。
    """
    if not any(getattr(order, name) != "inf" for name in ("L", "M", "N1", "N2")):
        return None
    L, M, N1, N2 = order.as_tuple()
    if not N1 > d / 2:
        return 0
    shift = (1.0 + alpha * (d - 1)) / 2.0
    candidates = [L / 2.0, N1 - shift, (N2 - d + 2) / 2.0]
    bound = min(candidates)
    best = 0
    limit = int(math.floor(bound)) if math.isfinite(bound) else None
    if limit is None:
        # L, N1, N2 が無限なら M の条件だけが残る
        limit = int(math.ceil((M + d - shift) / 3.0)) if math.isfinite(M) else None
        if limit is None:
            return None
    for N in range(1, limit + 1):
        if M > 3 * N - d + shift:
            best = N
    return best


def sparsity_equivalence_admissible(order: MoleculeOrder, alpha: float, d: int, k: float, p: float) -> bool:
    """
    スパース性同値の条件（N を k/q, q = min(1, p) に置き換えた位数条件と N_1 > d/2）
    """
    if p <= 0:
        raise DomainError(f"p は正である必要があります: {p}")
    q = min(1.0, p)
    N = k / q
    L, M, N1, N2 = order.as_tuple()
    shift = (1.0 + alpha * (d - 1)) / 2.0
    return (
        N1 > d / 2
        and L >= 2 * N
        and M > 3 * N - d + shift
        and N1 >= N + shift
        and N2 >= 2 * N + d - 2
    )


def video_rate_admissible(order: MoleculeOrder, k: float) -> bool:
    """d = 3, α = ½ の近似レート転送の条件"""
    L, M, N1, N2 = order.as_tuple()
    return L >= 2 * k and M >= 3 * k - 2 and N1 >= k + 1 and N1 > 1.5 and N2 >= 2 * k + 1
