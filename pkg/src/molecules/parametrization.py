"""
パラメータ化

位相空間 ℙ_d への写像、スケーリング・シア・巡回置換行列、ピラミッド判定、
シアレットパラメータ化 Φ^s、SHフレームの再ラベル付け F_label
"""

import itertools
import logging
import math
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.schemas.data_models import PhasePoint, SamplingData, ShearletIndex
from src.utils.errors import DomainError, InvalidIndexError

logger = logging.getLogger(__name__)

# 粗スケール箱 ℛ = [−1/8, 1/8]^d
DEFAULT_BOX_C = 1 / 8

WindowKey = Tuple[int, int, Tuple[int, ...]]


def alpha_scale(alpha: float, s: float, d: int) -> np.ndarray:
    """
    α スケーリング行列 A_{α,s} = diag(s^α, …, s^α, s)

    Raises:
        DomainError: s ≤ 0 または α が [0, 1] 外の場合
    """
    if s <= 0:
        raise DomainError(f"スケールは正である必要があります: s = {s}")
    if not (0 <= alpha <= 1):
        raise DomainError(f"α は [0, 1] に含まれる必要があります: {alpha}")
    if d < 2:
        raise DomainError(f"次元は2以上である必要があります: d = {d}")
    diag = np.full(d, s ** alpha, dtype=float)
    diag[-1] = s
    return np.diag(diag)


def shear(h: Sequence[float], transposed: bool = False, d: Optional[int] = None) -> np.ndarray:
    """
    シア行列 S_h（最終行の先頭 d−1 列に h^T）または S_h^T

    Args:
        h: 長さ d−1 のシアベクトル
        transposed: True なら S_h^T を返す
        d: 次元（省略時は len(h) + 1）
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    d = d if d is not None else h.size + 1
    if d < 2 or h.size != d - 1:
        raise DomainError(f"シアベクトルの長さは d−1 = {d - 1} である必要があります")
    s = np.eye(d)
    s[d - 1, : d - 1] = h
    return s.T if transposed else s


def cyclic_perm(d: int) -> np.ndarray:
    """巡回置換行列 Z（e_i ↦ e_{i+1}, e_d ↦ e_1）"""
    if d < 2:
        raise DomainError(f"次元は2以上である必要があります: d = {d}")
    return np.roll(np.eye(d, dtype=int), 1, axis=0)


def cyclic_power(eps: int, d: int) -> np.ndarray:
    """Z^ε（負の ε も可、整数演算）"""
    return np.linalg.matrix_power(cyclic_perm(d), eps % d)


def pyramid_of(xi: Sequence[float], box_c: float = DEFAULT_BOX_C) -> int:
    """
    周波数 ξ が属するピラミッド

    Returns:
        |ξ|_∞ ≤ box_c なら 0、そうでなければ |ξ_ε| が最大となる最小の ε（1始まり）
    """
    xi = np.abs(np.asarray(xi, dtype=float))
    peak = float(xi.max()) if xi.size else 0.0
    if peak <= box_c:
        return 0
    return int(np.argmax(xi >= peak)) + 1


def pyramid_labels(components: Sequence[np.ndarray], box_c: float = DEFAULT_BOX_C) -> np.ndarray:
    """pyramid_of の配列版（各成分はブロードキャスト可能な配列）"""
    mags = np.broadcast_arrays(*[np.abs(c) for c in components])
    peak = np.maximum.reduce(mags)
    labels = np.zeros(peak.shape, dtype=np.int8)
    # 後ろから上書きして最小の ε を優先
    for eps in range(len(mags), 0, -1):
        labels = np.where(mags[eps - 1] >= peak, eps, labels)
    return np.where(peak <= box_c, 0, labels).astype(np.int8)


def shear_set(sampling: SamplingData, eps: int, j: int) -> List[Tuple[int, ...]]:
    """
    シア集合 ℒ_{ε,j}（辞書式順序）

    Args:
        sampling: サンプリングデータ
        eps: ピラミッド（0なら粗スケール）
        j: スケール

    Returns:
        シアベクトルのリスト
    """
    d = sampling.dim
    if eps == 0:
        return [(0,) * (d - 1)] if j == 0 else []
    extent = sampling.shear_extent(j)
    if sampling.shear_rule.kind == "cube":
        axis = range(-extent, extent + 1)
        return list(itertools.product(*([axis] * (d - 1))))

    ranges = [range(-extent, extent + 1)] + [range(-extent + 1, extent)] * (d - 2)
    shears = set(itertools.product(*ranges))
    if eps == 1 and d >= 3:
        shears.update(itertools.product(*([(-extent, extent)] * (d - 1))))
    return sorted(shears)


def validate_index(idx: ShearletIndex, sampling: SamplingData) -> None:
    """
    インデックスがサンプリングデータの Λ に属するか検証

    Raises:
        InvalidIndexError: 属さない場合
    """
    if idx.dim != sampling.dim:
        raise InvalidIndexError(f"インデックスの次元 {idx.dim} がサンプリングデータの次元 {sampling.dim} と一致しません")
    if idx.epsilon == 0:
        return
    if sampling.shear_rule.kind == "cube":
        ok = max(abs(c) for c in idx.ell) <= sampling.shear_extent(idx.j) if idx.ell else True
    else:
        ok = idx.ell in set(shear_set(sampling, idx.epsilon, idx.j))
    if not ok:
        raise InvalidIndexError(f"ℓ = {idx.ell} は ℒ_(ε={idx.epsilon}, j={idx.j}) に含まれません")


def block_matrices(
    eps: int,
    j: int,
    ell: Sequence[int],
    sampling: SamplingData,
    alpha: float,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    (ε, j, ℓ) ブロックの幾何

    Returns:
        (スケール s, 方向 e, 位置行列 B)。平行移動 k の位置は x = B k
    """
    d = sampling.dim
    tau = np.diag(np.asarray(sampling.tau, dtype=float))
    if eps == 0:
        e = np.zeros(d)
        e[-1] = 1.0
        return 1.0, e, tau

    eta = sampling.eta(j)
    h = eta * np.asarray(ell, dtype=float)
    z = cyclic_power(eps, d).astype(float)
    z_inv = cyclic_power(-eps, d).astype(float)

    direction = np.append(h, 1.0)
    direction = z @ direction / math.sqrt(1.0 + float(h @ h))

    a_inv = alpha_scale(alpha, sampling.sigma ** (-j), d)
    s_inv = shear(-h)
    location = z @ s_inv @ a_inv @ z_inv @ tau
    return float(sampling.sigma ** j), direction, location


def shearlet_phase(
    idx: ShearletIndex,
    sampling: SamplingData,
    alpha: Optional[float] = None,
) -> PhasePoint:
    """
    シアレットパラメータ化 Φ^s

    s = σ^j, e = n_λ Z^ε (η_j ℓ, 1)^T, x = Z^ε S^{-1}_{ℓη_j} A^{-j}_{α,σ} Z^{-ε} 𝒯 k。
    ε = 0 では (1, e_d, 𝒯k)。

    Args:
        idx: シアレットインデックス
        sampling: サンプリングデータ
        alpha: α（省略時はサンプリングデータの α）

    Returns:
        位相空間の点

    Raises:
        InvalidIndexError: インデックスが Λ に属さない場合
    """
    validate_index(idx, sampling)
    alpha = sampling.alpha if alpha is None else alpha
    s, e, location = block_matrices(idx.epsilon, idx.j, idx.ell, sampling, alpha)
    x = location @ np.asarray(idx.k, dtype=float)
    e = e / np.linalg.norm(e)
    return PhasePoint(s=s, e=tuple(float(c) for c in e), x=tuple(float(c) for c in x))


# ---------------------------------------------------------------------------
# SHフレームの再ラベル付け
# ---------------------------------------------------------------------------

def gamma_set() -> List[WindowKey]:
    """再ラベル付けされる j = 0 の窓の集合 Γ（辞書式順序, #Γ = 11）"""
    gamma: List[WindowKey] = [(0, 0, (0, 0))]
    for eps in (1, 2, 3):
        shears = [(-1, 0), (1, 0)]
        if eps == 1:
            shears += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        gamma.extend((eps, 0, ell) for ell in shears)
    return sorted(gamma)


_GAMMA_ORDER: Dict[WindowKey, int] = {key: n for n, key in enumerate(gamma_set())}
GAMMA_SIZE = len(_GAMMA_ORDER)


def gamma_number(key: WindowKey) -> Optional[int]:
    """Γ の番号 𝒩(ε, j, ℓ)（Γ に属さなければ None）"""
    return _GAMMA_ORDER.get((key[0], key[1], tuple(key[2])))


def sh_sampling(tau: float = 1.0) -> SamplingData:
    """SHフレーム用のサンプリングデータ"""
    return SamplingData.sh_default(tau=tau)


def is_boundary_window(eps: int, j: int, ell: Sequence[int]) -> bool:
    """境界・角の窓（|ℓ_1| = 2^j または角）か"""
    if eps == 0:
        return False
    return abs(ell[0]) == 2 ** j


def relabel_SH(idx: ShearletIndex) -> ShearletIndex:
    """
    F_label: Δ = Γ × ℤ³ の要素を粗スケールへ再ラベル付け

    (ε, j, ℓ, k) ∈ Δ ↦ (0, 0, 0, (k_1, k_2, 11 k_3 + 𝒩(ε, j, ℓ)))、それ以外は不変。

    Raises:
        InvalidIndexError: インデックスが Λ_SH に属さない場合
    """
    if idx.dim != 3:
        raise InvalidIndexError("F_label は d = 3 のみ定義されています")
    validate_index(idx, sh_sampling())
    number = gamma_number(idx.window_key())
    if number is None:
        return idx
    k1, k2, k3 = idx.k
    return ShearletIndex(epsilon=0, j=0, ell=(0, 0), k=(k1, k2, GAMMA_SIZE * k3 + number))


def unrelabel_SH(idx: ShearletIndex) -> ShearletIndex:
    """F_label の逆写像（粗スケールのインデックスを Γ の要素に戻す）"""
    if idx.epsilon != 0:
        return idx
    k1, k2, k3 = idx.k
    block, number = divmod(k3, GAMMA_SIZE)
    eps, j, ell = gamma_set()[number]
    return ShearletIndex(epsilon=eps, j=j, ell=ell, k=(k1, k2, block))


def sh_translation_step(idx: ShearletIndex) -> Tuple[float, float, float]:
    """SH原子の平行移動刻み 𝒯（対角成分）"""
    if gamma_number(idx.window_key()) is not None:
        return (1.0, 1.0, 1.0 / GAMMA_SIZE)
    if idx.j >= 1 and is_boundary_window(idx.epsilon, idx.j, idx.ell):
        return (0.25, 0.25, 0.25)
    return (1.0, 1.0, 1.0)


def sh_phase_point(idx: ShearletIndex) -> PhasePoint:
    """
    SH原子の位相空間の点

    Δ の要素は再ラベル付け後に 𝒯 = diag(1, 1, 1/11)、内部原子は 𝒯 = I、
    j ≥ 1 の境界・角原子は 𝒯 = ¼I でパラメータ化する（σ = 4, α = ½, η_j = 2^{−j}）。
    """
    tau = sh_translation_step(idx)
    sampling = SamplingData.sh_default().with_tau(tau)
    validate_index(idx, SamplingData.sh_default())
    target = relabel_SH(idx)
    return shearlet_phase(target, sampling, alpha=0.5)


# ---------------------------------------------------------------------------
# パラメータ化クラス
# ---------------------------------------------------------------------------

class Parametrization:
    """パラメータ化 (Λ, Φ_Λ) の基底クラス"""

    alpha: float
    dim: int

    def phase(self, idx: ShearletIndex) -> PhasePoint:
        raise NotImplementedError

    def enumerate(self, j_max: int, k_max: int) -> Iterator[ShearletIndex]:
        """j ≤ j_max, |k|_∞ ≤ k_max のインデックスを列挙"""
        raise NotImplementedError

    def phase_arrays(self, j_max: int, k_max: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """列挙したインデックスの (s, e, x) 配列"""
        points = [self.phase(idx) for idx in self.enumerate(j_max, k_max)]
        if not points:
            d = self.dim
            return np.zeros(0), np.zeros((0, d)), np.zeros((0, d))
        s = np.array([p.s for p in points])
        e = np.array([p.e for p in points])
        x = np.array([p.x for p in points])
        return s, e, x


class ExplicitParametrization(Parametrization):
    """インデックスと位相空間の点の組を明示的に与えるパラメータ化"""

    def __init__(self, pairs: Sequence[Tuple[ShearletIndex, PhasePoint]], alpha: float):
        if not pairs:
            self.dim = 0
        else:
            self.dim = pairs[0][1].dim
        self.alpha = alpha
        self._pairs = list(pairs)
        self._lookup = {idx: point for idx, point in self._pairs}

    def phase(self, idx: ShearletIndex) -> PhasePoint:
        try:
            return self._lookup[idx]
        except KeyError as e:
            raise InvalidIndexError(f"未登録のインデックスです: {idx}") from e

    def enumerate(self, j_max: int, k_max: int) -> Iterator[ShearletIndex]:
        for idx, _ in self._pairs:
            if idx.j <= j_max and max(abs(c) for c in idx.k) <= k_max:
                yield idx


class ShearletParametrization(Parametrization):
    """
    シアレットパラメータ化 Φ^s

    ブロック (ε, j, ℓ) ごとに s, e と位置行列 B（x = Bk）を返す高速経路を持つ。
    """

    def __init__(self, sampling: SamplingData, alpha: Optional[float] = None):
        self.sampling = sampling
        self.alpha = sampling.alpha if alpha is None else alpha
        self.dim = sampling.dim

    def phase(self, idx: ShearletIndex) -> PhasePoint:
        return shearlet_phase(idx, self.sampling, self.alpha)

    def blocks(self, j_max: int) -> Iterator[WindowKey]:
        """j ≤ j_max の (ε, j, ℓ) を辞書式順序で列挙"""
        d = self.dim
        yield (0, 0, (0,) * (d - 1))
        for eps in range(1, d + 1):
            for j in range(j_max + 1):
                for ell in shear_set(self.sampling, eps, j):
                    yield (eps, j, ell)

    def block(self, eps: int, j: int, ell: Sequence[int]) -> Tuple[float, np.ndarray, np.ndarray]:
        return block_matrices(eps, j, ell, self.sampling, self.alpha)

    def enumerate(self, j_max: int, k_max: int) -> Iterator[ShearletIndex]:
        axis = range(-k_max, k_max + 1)
        for eps, j, ell in self.blocks(j_max):
            for k in itertools.product(*([axis] * self.dim)):
                yield ShearletIndex(epsilon=eps, j=j, ell=tuple(ell), k=tuple(k))

    def phase_arrays(self, j_max: int, k_max: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        axis = np.arange(-k_max, k_max + 1, dtype=float)
        grid = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        s_parts, e_parts, x_parts = [], [], []
        for eps, j, ell in self.blocks(j_max):
            s, e, location = self.block(eps, j, ell)
            s_parts.append(np.full(len(grid), s))
            e_parts.append(np.broadcast_to(e, grid.shape))
            x_parts.append(grid @ location.T)
        return np.concatenate(s_parts), np.concatenate(e_parts), np.concatenate(x_parts)
