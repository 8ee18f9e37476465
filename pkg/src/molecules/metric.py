"""
α スケールのインデックス距離

d_α, ω_α、擬距離性の測定、(α, k) 整合性和、Schur ℓ^p 上限
"""

import logging
import math
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from src.molecules.geometry import project_angle_array
from src.molecules.parametrization import (
    Parametrization,
    ShearletParametrization,
    cyclic_power,
    shear,
    shear_set,
)
from src.schemas.data_models import GramianTable, PhasePoint, ShearletIndex
from src.schemas.reports import ConsistencyReport
from src.utils.errors import DomainError, InsufficientDataError
from src.utils.parallel import run_parallel

logger = logging.getLogger(__name__)

# シア和の枝刈り閾値
PRUNE_TOL = 1e-12

# 正規化刻みがこれより細かい格子は間引いて和を取る
TARGET_SPACING = 0.25

# プローブより細かいスケールの平行移動が届く正規化距離の下限
NORMALIZED_REACH = 8.0

DEFAULT_LEVELS: Tuple[Tuple[int, int], ...] = ((3, 4), (4, 8), (5, 16))


def _check_pair(p: PhasePoint, q: PhasePoint) -> None:
    if p.dim != q.dim:
        raise DomainError(f"次元が一致しません: {p.dim} != {q.dim}")


def d_alpha_arrays(
    s_l: np.ndarray,
    e_l: np.ndarray,
    x_l: np.ndarray,
    s_m: np.ndarray,
    e_m: np.ndarray,
    x_m: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """
    距離核 d_α の配列版（先頭次元でブロードキャスト）

    s: 形状 (N,)、e, x: 形状 (N, d)
    """
    s_l, s_m = np.asarray(s_l, dtype=float), np.asarray(s_m, dtype=float)
    e_l, e_m = np.asarray(e_l, dtype=float), np.asarray(e_m, dtype=float)
    dx = np.asarray(x_l, dtype=float) - np.asarray(x_m, dtype=float)
    s0 = np.minimum(s_l, s_m)
    inner = np.clip(np.sum(e_l * e_m, axis=-1), -1.0, 1.0)
    theta = project_angle_array(np.arccos(inner))
    return (
        s0 ** (2 * alpha) * np.sum(dx * dx, axis=-1)
        + s0 ** (2 * (1 - alpha)) * theta * theta
        + s0 * np.abs(np.sum(e_l * dx, axis=-1))
    )


def omega_alpha_arrays(
    s_l: np.ndarray,
    e_l: np.ndarray,
    x_l: np.ndarray,
    s_m: np.ndarray,
    e_m: np.ndarray,
    x_m: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """ω_α の配列版"""
    s_l, s_m = np.asarray(s_l, dtype=float), np.asarray(s_m, dtype=float)
    ratio = np.maximum(s_l / s_m, s_m / s_l)
    return ratio * (1.0 + d_alpha_arrays(s_l, e_l, x_l, s_m, e_m, x_m, alpha))


def d_alpha(p: PhasePoint, q: PhasePoint, alpha: float) -> float:
    """
    距離核 d_α(λ, μ)

    s_0^{2α}|x_λ−x_μ|² + s_0^{2(1−α)}|{d_𝕊(e_λ,e_μ)}|² + s_0|⟨e_λ, x_λ−x_μ⟩|, s_0 = min(s_λ, s_μ)

    Raises:
        DomainError: 次元が一致しない場合
    """
    _check_pair(p, q)
    value = d_alpha_arrays(
        np.array([p.s]), np.array([p.e]), np.array([p.x]),
        np.array([q.s]), np.array([q.e]), np.array([q.x]),
        alpha,
    )
    return float(value[0])


def omega_alpha(p: PhasePoint, q: PhasePoint, alpha: float) -> float:
    """α スケールのインデックス距離 ω_α(λ, μ) = max(s_λ/s_μ, s_μ/s_λ)(1 + d_α(λ, μ))"""
    _check_pair(p, q)
    if p == q:
        return 1.0
    return max(p.s / q.s, q.s / p.s) * (1.0 + d_alpha(p, q, alpha))


# ---------------------------------------------------------------------------
# 擬距離性の測定
# ---------------------------------------------------------------------------

def random_phase_arrays(
    rng: np.random.Generator,
    count: int,
    d: int,
    max_log_scale: float = math.log(64.0),
    spread: float = 1.0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ランダムな位相空間の点 (s, e, x) を配列で生成"""
    s = np.exp(rng.uniform(0.0, max_log_scale, size=count))
    e = rng.standard_normal((count, d))
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    x = rng.uniform(-spread, spread, size=(count, d))
    return s, e, x


def measure_quasi_symmetry(alpha: float, d: int = 3, pairs: int = 100_000, seed: int = 0) -> float:
    """
    擬対称性の定数 max ω_α(μ,λ) / ω_α(λ,μ) をランダムな組で測定

    Returns:
        測定された最大比
    """
    rng = np.random.default_rng(seed)
    lam = random_phase_arrays(rng, pairs, d)
    mu = random_phase_arrays(rng, pairs, d)
    forward = omega_alpha_arrays(*lam, *mu, alpha)
    backward = omega_alpha_arrays(*mu, *lam, alpha)
    ratio = float(np.max(backward / forward))
    logger.info(f"擬対称性の測定: α={alpha}, 組数={pairs}, 最大比={ratio:.4f}")
    return ratio


def measure_pseudo_triangle(alpha: float, d: int = 3, triples: int = 10_000, seed: int = 0) -> float:
    """
    擬三角不等式の定数 max ω(λ,λ') / (ω(λ,λ'')ω(λ'',λ')) をランダムな三つ組で測定
    """
    rng = np.random.default_rng(seed)
    a = random_phase_arrays(rng, triples, d)
    b = random_phase_arrays(rng, triples, d)
    c = random_phase_arrays(rng, triples, d)
    direct = omega_alpha_arrays(*a, *b, alpha)
    detour = omega_alpha_arrays(*a, *c, alpha) * omega_alpha_arrays(*c, *b, alpha)
    constant = float(np.max(direct / detour))
    logger.info(f"擬三角不等式の測定: α={alpha}, 三つ組数={triples}, 定数={constant:.4f}")
    return constant


# ---------------------------------------------------------------------------
# Schur ℓ^p 上限
# ---------------------------------------------------------------------------

MatrixLike = Union[np.ndarray, sparse.spmatrix, Mapping[Tuple, complex], GramianTable]


def _as_coo(matrix: MatrixLike) -> sparse.coo_matrix:
    if isinstance(matrix, GramianTable):
        matrix = {(row.index_a, row.index_b): row.value for row in matrix.rows}
    if isinstance(matrix, Mapping):
        rows = {key: i for i, key in enumerate(sorted({k[0] for k in matrix}, key=_sort_key))}
        cols = {key: i for i, key in enumerate(sorted({k[1] for k in matrix}, key=_sort_key))}
        r = np.array([rows[k[0]] for k in matrix], dtype=int)
        c = np.array([cols[k[1]] for k in matrix], dtype=int)
        v = np.array([abs(value) for value in matrix.values()], dtype=float)
        return sparse.coo_matrix((v, (r, c)), shape=(max(len(rows), 1), max(len(cols), 1)))
    if sparse.issparse(matrix):
        return sparse.coo_matrix(abs(matrix))
    return sparse.coo_matrix(np.abs(np.atleast_2d(np.asarray(matrix))))


def _sort_key(key):
    return key.sort_key() if isinstance(key, ShearletIndex) else key


def schur_lp_bound(matrix: MatrixLike, p: float) -> float:
    """
    Schur型の ℓ^p 作用素ノルム上限

    max(sup_λ Σ_μ |M|^q, sup_μ Σ_λ |M|^q)^{1/q}, q = min(1, p)

    Args:
        matrix: 行列（ndarray、scipy.sparse、{(λ, μ): 値} の辞書、GramianTable）
        p: p > 0

    Raises:
        DomainError: p ≤ 0 の場合
    """
    if p <= 0:
        raise DomainError(f"p は正である必要があります: {p}")
    q = min(1.0, p)
    coo = _as_coo(matrix)
    powered = sparse.coo_matrix((coo.data ** q, (coo.row, coo.col)), shape=coo.shape).tocsr()
    row_sums = np.asarray(powered.sum(axis=1)).ravel()
    col_sums = np.asarray(powered.sum(axis=0)).ravel()
    peak = max(float(row_sums.max(initial=0.0)), float(col_sums.max(initial=0.0)))
    return peak ** (1.0 / q)


def lp_operator_norm_lower_bound(matrix: np.ndarray, p: float, trials: int = 100, seed: int = 0) -> float:
    """
    ランダムな ℓ^p 単位ベクトルに作用させた ‖Mx‖_p の最大値（作用素ノルムの下界）
    """
    if p <= 0:
        raise DomainError(f"p は正である必要があります: {p}")
    matrix = np.asarray(matrix)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        x = rng.standard_normal(matrix.shape[1])
        # 疎なベクトルも混ぜて単位ベクトル方向を探索
        x[rng.random(x.size) < 0.5] = 0.0
        norm = np.sum(np.abs(x) ** p) ** (1.0 / p)
        if norm == 0:
            continue
        y = matrix @ (x / norm)
        best = max(best, float(np.sum(np.abs(y) ** p) ** (1.0 / p)))
    for column in range(matrix.shape[1]):
        y = matrix[:, column]
        best = max(best, float(np.sum(np.abs(y) ** p) ** (1.0 / p)))
    return best


# ---------------------------------------------------------------------------
# (α, k) 整合性和
# ---------------------------------------------------------------------------

def truncation_schedule(j_max: int, k_max: int, count: int = 3) -> List[Tuple[int, int]]:
    """(J_max, K_max) で終わる入れ子の打ち切りレベル列（スケールを1つずつ、K を半分ずつ戻す）"""
    levels = []
    for back in range(count - 1, -1, -1):
        j = j_max - back
        k = k_max // (2 ** back)
        if j >= 0 and k >= 1:
            levels.append((j, k))
    return levels


def _strided_axis(count: int, stride: int) -> Tuple[np.ndarray, np.ndarray]:
    """0..count−1 を長さ stride の区間に分け、区間中央の位置と区間長を返す"""
    starts = np.arange(0, count, stride)
    sizes = np.minimum(stride, count - starts)
    return starts + (sizes - 1) / 2.0, sizes.astype(float)


def _stride_for(spacing: float) -> int:
    if spacing <= 0:
        return 1
    return max(1, int(math.floor(TARGET_SPACING / spacing)))


def _axis_radius(k_max: int, spacing: float, finer: bool) -> int:
    """
    軸ごとの平行移動の打ち切り半径

    プローブより細かいスケールでは正規化距離で NORMALIZED_REACH まで届くよう広げる。
    """
    if not finer or spacing <= 0:
        return k_max
    return max(k_max, int(math.ceil(NORMALIZED_REACH / spacing)))


def probe_indices(param: Parametrization, probe_scales: int) -> List[ShearletIndex]:
    """
    sup を取るプローブ μ の層別サンプル

    全ピラミッド、スケール 0..probe_scales、シアの両端と0、平行移動 0 と (1, …, 1)
    """
    d = param.dim
    offsets = [(0,) * d, (1,) * d]
    if not isinstance(param, ShearletParametrization):
        return list(param.enumerate(probe_scales, 1))

    probes = []
    for eps, j, ell in param.blocks(probe_scales):
        if eps != 0:
            shears = shear_set(param.sampling, eps, j)
            low, high = min(shears), max(shears)
            zero = (0,) * (d - 1)
            if tuple(ell) not in {low, high, zero}:
                continue
        for k in offsets:
            probes.append(ShearletIndex(epsilon=eps, j=j, ell=tuple(ell), k=k))
    return probes


def _block_sum(
    param: ShearletParametrization,
    probe: PhasePoint,
    alpha: float,
    k: float,
    j_max: int,
    k_max: int,
) -> Tuple[float, float]:
    """
    シアレットパラメータ化に対する Σ_λ ω_α(λ, μ)^{−k}（ブロック単位の高速計算）

    y = A^{−j} Z^{−ε} 𝒯 k の座標で、|Δx|² = |Δy_{<d}|² + (Δy_d − h·Δy_{<d})²、
    ⟨e_λ, Δx⟩ = n_λ Δy_d を用いる。

    Returns:
        (和, 枝刈りした和の上限)
    """
    sampling = param.sampling
    d = param.dim
    sigma = sampling.sigma
    tau = np.asarray(sampling.tau, dtype=float)
    x_mu = np.asarray(probe.x, dtype=float)
    e_mu = np.asarray(probe.e, dtype=float)
    s_mu = probe.s
    total = 0.0
    pruned = 0.0
    for j in range(j_max + 1):
        s_l = sigma ** j
        s0 = min(s_l, s_mu)
        ratio = max(s_l / s_mu, s_mu / s_l)
        eta = sampling.eta(j)
        diag = np.full(d, sigma ** (-j * alpha))
        diag[-1] = sigma ** (-j)

        for eps in ([0] if j == 0 else []) + list(range(1, d + 1)):
            if eps == 0:
                shears = np.zeros((1, d - 1))
            else:
                shears = np.asarray(shear_set(sampling, eps, j), dtype=float)
            z = cyclic_power(eps, d).astype(float)
            z_inv = cyclic_power(-eps, d).astype(float)
            # y 座標の各軸の格子（Z^{−ε} で並べ替えた 𝒯）
            steps = diag * (z_inv @ tau)
            spacings = [(s0 ** alpha if i < d - 1 else s0) * steps[i] for i in range(d)]
            radii = [_axis_radius(k_max, spacing, s_l > s_mu) for spacing in spacings]
            n_k = float(np.prod([2 * r + 1 for r in radii]))
            h_all = shears * (eta if eps else 0.0)
            dirs = np.hstack([h_all, np.ones((len(h_all), 1))])
            norms = np.sqrt(1.0 + np.sum(h_all * h_all, axis=1))
            dirs = (dirs / norms[:, None]) @ z.T
            cosines = np.clip(dirs @ e_mu, -1.0, 1.0)
            angles = project_angle_array(np.arccos(cosines))
            angle_term = s0 ** (2 * (1 - alpha)) * angles * angles

            bound = (ratio * (1.0 + angle_term)) ** (-k) * n_k
            keep = bound >= PRUNE_TOL
            pruned += float(bound[~keep].sum())
            if not np.any(keep):
                continue

            kept = shears[keep]
            weights = np.ones(len(kept))
            if eps != 0:
                stride = _stride_for(s0 ** (1 - alpha) * eta)
                if stride > 1:
                    extent = sampling.shear_extent(j)
                    cells = np.floor((kept + extent) / stride).astype(int)
                    _, inverse, counts = np.unique(cells, axis=0, return_inverse=True, return_counts=True)
                    inverse = inverse.reshape(-1)
                    reps = np.zeros((len(counts), d - 1))
                    np.add.at(reps, inverse, kept)
                    kept = reps / counts[:, None]
                    weights = counts.astype(float)

            axes, axis_weights = [], []
            for i in range(d):
                centers, sizes = _strided_axis(2 * radii[i] + 1, _stride_for(spacings[i]))
                axes.append((centers - radii[i]) * steps[i])
                axis_weights.append(sizes)
            grids = np.meshgrid(*axes, indexing="ij")
            grid_weight = axis_weights[0]
            for w in axis_weights[1:]:
                grid_weight = np.multiply.outer(grid_weight, w)

            x_rot = z_inv @ x_mu
            for rep, w_shear in zip(kept, weights):
                h = rep * (eta if eps else 0.0)
                y_tilde = shear(h) @ x_rot
                dy = [g - y_tilde[i] for i, g in enumerate(grids)]
                transverse = sum(dy[i] * dy[i] for i in range(d - 1))
                sheared = dy[d - 1] - sum(h[i] * dy[i] for i in range(d - 1))
                n_lam = 1.0 / math.sqrt(1.0 + float(h @ h))
                e_l = z @ (np.append(h, 1.0) * n_lam)
                angle = project_angle_array(np.arccos(np.clip(float(e_l @ e_mu), -1.0, 1.0)))
                dist = (
                    s0 ** (2 * alpha) * (transverse + sheared * sheared)
                    + s0 ** (2 * (1 - alpha)) * float(angle) ** 2
                    + s0 * n_lam * np.abs(dy[d - 1])
                )
                total += w_shear * float(np.sum(grid_weight * (ratio * (1.0 + dist)) ** (-k)))
    return total, pruned


def _brute_sum(
    param: Parametrization,
    probe: PhasePoint,
    alpha: float,
    k: float,
    j_max: int,
    k_max: int,
) -> Tuple[float, float]:
    s, e, x = param.phase_arrays(j_max, k_max)
    if s.size == 0:
        return 0.0, 0.0
    n = s.size
    omega = omega_alpha_arrays(
        s, e, x,
        np.full(n, probe.s), np.broadcast_to(probe.e, e.shape), np.broadcast_to(probe.x, x.shape),
        alpha,
    )
    # 同一点は ω = 1 とする
    same = (s == probe.s) & np.all(e == np.asarray(probe.e), axis=1) & np.all(x == np.asarray(probe.x), axis=1)
    omega = np.where(same, 1.0, omega)
    return float(np.sum(omega ** (-k))), 0.0


def consistency_sum(
    A: Parametrization,
    B: Parametrization,
    alpha: float,
    k: float,
    levels: Sequence[Tuple[int, int]] = DEFAULT_LEVELS,
    probe_scales: Optional[int] = None,
) -> ConsistencyReport:
    """
    (α, k) 整合性和 sup_μ Σ_λ ω_α(λ, μ)^{−k} の打ち切り推定

    μ は B の層別プローブ、λ は A の j ≤ J_max, |k|_∞ ≤ K_max のインデックス。
    SH型の A ではプローブより細かいスケールの平行移動を正規化距離 NORMALIZED_REACH まで広げる。
    最後の差の比が ½ 未満なら収束とみなし、幾何級数の残差上限を付ける。

    Args:
        A: 和を取る側のパラメータ化
        B: プローブ側のパラメータ化
        alpha: α
        k: 指数 k > 0
        levels: (J_max, K_max) の入れ子の列
        probe_scales: プローブのスケール上限（省略時は設定値）

    Returns:
        ConsistencyReport

    Raises:
        DomainError: k ≤ 0 の場合
        InsufficientDataError: 列挙が空の場合
    """
    if k <= 0:
        raise DomainError(f"k は正である必要があります: {k}")
    if not levels:
        raise InsufficientDataError("打ち切りレベルが空です")
    if probe_scales is None:
        from src.config.settings import get_settings
        probe_scales = get_settings().CONSISTENCY_PROBE_SCALES

    probes = probe_indices(B, probe_scales)
    if not probes:
        raise InsufficientDataError("プローブの列挙が空です")
    j_top, k_top = levels[-1]
    if next(iter(A.enumerate(j_top, k_top)), None) is None:
        raise InsufficientDataError("和を取るインデックスの列挙が空です")

    summer = _block_sum if isinstance(A, ShearletParametrization) else _brute_sum
    logger.info(f"整合性和を計算: α={alpha}, k={k}, プローブ数={len(probes)}, レベル={list(levels)}")

    def make_task(idx: ShearletIndex):
        point = B.phase(idx)
        return lambda: [summer(A, point, alpha, k, j, kk) for j, kk in levels]

    results = run_parallel([make_task(idx) for idx in probes])
    sums = np.array([[value for value, _ in per_probe] for per_probe in results])
    pruned = float(max(max(p for _, p in per_probe) for per_probe in results))

    sups = [float(v) for v in sums.max(axis=0)]
    increments = [sups[i] - sups[i - 1] for i in range(1, len(sups))]

    converged = False
    tail_bound = None
    relative_change = None
    if increments:
        relative_change = abs(increments[-1]) / sups[-1] if sups[-1] > 0 else 0.0
    if len(increments) >= 2:
        last, previous = abs(increments[-1]), abs(increments[-2])
        if last == 0.0:
            converged = True
            tail_bound = 0.0
        elif previous > 0.0 and last / previous < 0.5:
            r = last / previous
            converged = True
            tail_bound = last * r / (1.0 - r)

    logger.info(f"整合性和: sup={sups[-1]:.6g}, 収束={converged}")
    return ConsistencyReport(
        k=k,
        alpha=alpha,
        sup_estimate=sups[-1],
        sups=sups,
        increments=increments,
        levels=[tuple(level) for level in levels],
        converged=converged,
        relative_change=relative_change,
        tail_bound=tail_bound,
        pruned_mass=pruned,
        probe_count=len(probes),
    )

