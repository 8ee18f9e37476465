"""
帯域制限3次元シアレットParsevalフレーム SH

インデックス集合、窓の評価（粗スケール・内部・境界・角）、タイトネス検査、
解析・合成変換（上位N個のストリーミング保持を含む）、原子間の内積
"""

import functools
import itertools
import logging
import math
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft

from src.config.settings import get_settings
from src.molecules.parametrization import (
    alpha_scale,
    cyclic_power,
    pyramid_labels,
    sh_sampling,
    shear,
    shear_set,
)
from src.schemas.data_models import (
    CoefficientSet,
    FrameSpec,
    ProfileParams,
    SampledVolume,
    ShearletIndex,
)
from src.schemas.reports import ContinuityReport, GridReport, TightnessReport
from src.shearlets.windows import (
    COARSE_HALF_WIDTH,
    CORONA_INNER,
    CORONA_OUTER,
    DEFAULT_PROFILE,
    bump_v,
    corona_from_components,
    phi_hat_product,
    telescoped_target,
)
from src.utils.cache import ArrayCache, cached_array
from src.utils.errors import DomainError, InvalidIndexError
from src.utils.parallel import chunked, run_parallel, worker_count
from src.utils.profiler import Timer

logger = logging.getLogger(__name__)

WindowKey = Tuple[int, int, Tuple[int, int]]

COARSE_KEY: WindowKey = (0, 0, (0, 0))

# ピラミッド p の局所比 (ξ_a/ξ_den, ξ_b/ξ_den) の軸（0始まり）
RATIO_AXES: Dict[int, Tuple[int, int, int]] = {1: (1, 2, 0), 2: (2, 0, 1), 3: (0, 1, 2)}

# 境界原子が貼り合わされる隣のピラミッド
NEXT_PYRAMID: Dict[int, int] = {1: 2, 2: 3, 3: 1}

# 台の箱を求める粗い格子の分割数
SUPPORT_GRID = 64

# 内積の求積で一度に評価する面の数
QUADRATURE_SLAB = 32

# 原子の空間的な広がり（台の幅 E の軸で約 QUADRATURE_SPREAD / E）
QUADRATURE_SPREAD = 32.0

# 1/h が |平行移動差| + 広がり の何倍以上か
QUADRATURE_OVERSAMPLE = 2.0

_window_cache = ArrayCache(get_settings().WINDOW_CACHE_SIZE)
_support_cache = ArrayCache(512)


# ---------------------------------------------------------------------------
# インデックス集合と窓
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=64)
def _shear_lookup(eps: int, j: int) -> FrozenSet[Tuple[int, ...]]:
    return frozenset(shear_set(sh_sampling(), eps, j))


def index_set(J: int, include_boundary: bool = True) -> List[WindowKey]:
    """
    Λ_SH の窓 (ε, j, ℓ) を辞書式順序で列挙

    Args:
        J: 最大スケール
        include_boundary: False なら境界・角の窓（|ℓ_1| = 2^j）を除く

    Returns:
        窓キーのリスト（先頭は粗スケール (0, 0, (0, 0))）
    """
    if J < 0:
        raise DomainError(f"J は0以上である必要があります: {J}")
    keys: List[WindowKey] = [COARSE_KEY]
    sampling = sh_sampling()
    for eps in (1, 2, 3):
        for j in range(J + 1):
            for ell in shear_set(sampling, eps, j):
                if not include_boundary and abs(ell[0]) == 2 ** j:
                    continue
                keys.append((eps, j, (int(ell[0]), int(ell[1]))))
    return keys


def validate_window(eps: int, j: int, ell: Sequence[int]) -> WindowKey:
    """
    窓キーの検証

    Raises:
        InvalidIndexError: (ε, j, ℓ) が Λ_SH に属さない場合
    """
    ell = tuple(int(c) for c in ell)
    if len(ell) != 2 or j < 0 or eps not in (0, 1, 2, 3):
        raise InvalidIndexError(f"不正な窓キーです: ({eps}, {j}, {ell})")
    if eps == 0:
        if j != 0 or ell != (0, 0):
            raise InvalidIndexError("粗スケールの窓は (0, 0, (0, 0)) のみです")
        return COARSE_KEY
    if ell not in _shear_lookup(eps, j):
        raise InvalidIndexError(f"ℓ = {ell} は ℒ_(ε={eps}, j={j}) に含まれません")
    return (eps, j, ell)


def is_boundary(key: WindowKey) -> bool:
    """境界または角の窓か"""
    eps, j, ell = key
    return eps != 0 and abs(ell[0]) == 2 ** j


def window_pieces(eps: int, j: int, ell: Sequence[int]) -> List[Tuple[int, Tuple[int, int]]]:
    """
    窓を構成する区分 (ピラミッド, シフト m)

    区分の値は v(2^j r_1 − m_1) v(2^j r_2 − m_2)（r はピラミッドの局所比）。
    |ℓ_1| = 2^j の窓は隣のピラミッドの区分 (ε_1 ℓ_2, ℓ_1) を、
    ε = 1 の角はさらに第3ピラミッドの区分 (ℓ_2, ε_2 ℓ_1) を持つ。
    """
    if eps == 0:
        return []
    l1, l2 = int(ell[0]), int(ell[1])
    extent = 2 ** j
    pieces = [(eps, (l1, l2))]
    if abs(l1) == extent:
        e1 = 1 if l1 > 0 else -1
        pieces.append((NEXT_PYRAMID[eps], (e1 * l2, l1)))
    if eps == 1 and abs(l2) == extent:
        e2 = 1 if l2 > 0 else -1
        pieces.append((3, (l2, e2 * l1)))
    return pieces


def _piece_value(
    j: int,
    shift: Tuple[int, int],
    num_a: np.ndarray,
    num_b: np.ndarray,
    den: np.ndarray,
    profile: ProfileParams,
) -> np.ndarray:
    scale = float(2 ** j)
    u1 = scale * num_a / den - shift[0]
    u2 = scale * num_b / den - shift[1]
    return np.asarray(bump_v(u1, profile)) * np.asarray(bump_v(u2, profile))


def window_values(key: WindowKey, components: Sequence[np.ndarray], profile: ProfileParams = DEFAULT_PROFILE) -> np.ndarray:
    """窓の値を成分配列（ブロードキャスト可能）上で評価"""
    components = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in components])
    eps, j, ell = key
    if eps == 0:
        return phi_hat_product(components, profile)

    scale = 4.0 ** j
    corona = corona_from_components([c / scale for c in components], profile)
    labels = pyramid_labels(components, box_c=0.0)
    total = np.zeros(corona.shape)
    for pyramid, shift in window_pieces(eps, j, ell):
        a, b, d = RATIO_AXES[pyramid]
        mask = labels == pyramid
        if not mask.any():
            continue
        den = np.where(mask, components[d], 1.0)
        piece = _piece_value(j, shift, components[a], components[b], den, profile)
        total = total + np.where(mask, piece, 0.0)
    return corona * total


def window_eval(eps: int, j: int, ell: Sequence[int], xi, profile: ProfileParams = DEFAULT_PROFILE):
    """
    窓（振動しない大きさの因子）の評価

    粗スケールは Φ̂(ξ)、それ以外は W(2^{−2j}ξ) × ピラミッドごとの v の積。
    振幅 2^{−2j}, 2^{−2j−3} と変調は含まない。

    Args:
        eps, j, ell: 窓キー
        xi: 連続周波数（末尾の軸が3成分）
        profile: 窓プロファイル

    Returns:
        値（xi が1次元ならfloat）

    Raises:
        InvalidIndexError: 窓キーが不正な場合
    """
    key = validate_window(eps, j, ell)
    xi = np.asarray(xi, dtype=float)
    values = window_values(key, [xi[..., 0], xi[..., 1], xi[..., 2]], profile)
    return float(values) if xi.ndim == 1 else values


def window_piece(eps: int, j: int, ell: Sequence[int], xi, pyramid: int, profile: ProfileParams = DEFAULT_PROFILE):
    """
    指定したピラミッド側の区分式をピラミッド判定なしで評価（境界での両側評価用）

    そのピラミッドに区分を持たない窓では0を返す。
    """
    key = validate_window(eps, j, ell)
    xi = np.asarray(xi, dtype=float)
    components = [xi[..., 0], xi[..., 1], xi[..., 2]]
    corona = corona_from_components([c / 4.0 ** j for c in components], profile)
    value = np.zeros(np.shape(corona))
    for p, shift in window_pieces(*key):
        if p != pyramid:
            continue
        a, b, d = RATIO_AXES[p]
        value = value + _piece_value(j, shift, components[a], components[b], components[d], profile)
    result = corona * value
    return float(result) if xi.ndim == 1 else result


# ---------------------------------------------------------------------------
# デジタル周波数格子
# ---------------------------------------------------------------------------

class FrequencyGrid:
    """
    フレーム仕様の整数周波数格子 ξ = m · freq_scale

    ピラミッドラベル、スケールごとのコロナ窓、(j, p) ごとの台を前計算して保持する。
    """

    def __init__(self, spec: FrameSpec):
        self.spec = spec
        n = spec.n
        m = sp_fft.fftfreq(n, 1.0 / n)
        axis = m * spec.xi_step
        self.components = np.meshgrid(axis, axis, axis, indexing="ij")
        self.flat = [c.ravel() for c in self.components]
        self.labels = pyramid_labels(self.flat, box_c=0.0)
        self._corona: Dict[int, np.ndarray] = {}
        self._support: Dict[Tuple[int, int], np.ndarray] = {}

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.spec.shape

    def coarse(self) -> np.ndarray:
        return phi_hat_product(self.components, self.spec.profile)

    def corona(self, j: int) -> np.ndarray:
        """W(2^{−2j}ξ)（平坦配列）"""
        if j not in self._corona:
            scale = 4.0 ** j
            self._corona[j] = corona_from_components([c / scale for c in self.flat], self.spec.profile)
        return self._corona[j]

    def support(self, j: int, pyramid: int) -> np.ndarray:
        """ピラミッド p かつ W(2^{−2j}ξ) > 0 となる平坦インデックス"""
        key = (j, pyramid)
        if key not in self._support:
            self._support[key] = np.flatnonzero((self.labels == pyramid) & (self.corona(j) > 0))
        return self._support[key]

    def window(self, key: WindowKey) -> np.ndarray:
        """窓を格子上で評価（形状 (n, n, n)）"""
        eps, j, ell = key
        if eps == 0:
            return self.coarse()
        corona = self.corona(j)
        out = np.zeros(corona.size)
        for pyramid, shift in window_pieces(eps, j, ell):
            idx = self.support(j, pyramid)
            if idx.size == 0:
                continue
            a, b, d = RATIO_AXES[pyramid]
            piece = _piece_value(j, shift, self.flat[a][idx], self.flat[b][idx], self.flat[d][idx], self.spec.profile)
            out[idx] += corona[idx] * piece
        return symmetrize_nyquist(out.reshape(self.shape))


def symmetrize_nyquist(w: np.ndarray) -> np.ndarray:
    """
    デジタル窓を m ↦ −m (mod n) で対称化

    ナイキスト面（成分 −n/2）では −m が同じ面に折り返すため、シアの入った窓は
    w(m) ≠ w(−m) となる。w ← sqrt((w(m)² + w(−m)²)/2) とすると Σ w² は保たれ、
    実数入力の係数が実数になる。それ以外の点では値は変わらない。
    """
    reflected = np.roll(np.flip(w), 1, axis=tuple(range(w.ndim)))
    return np.where(w == reflected, w, np.sqrt(0.5 * (w * w + reflected * reflected)))


@functools.lru_cache(maxsize=4)
def frequency_grid(spec: FrameSpec) -> FrequencyGrid:
    """フレーム仕様ごとの周波数格子（プロセス内で共有）"""
    return FrequencyGrid(spec)


@cached_array(_window_cache, "window", lambda spec, key: (spec.cache_token(), key))
def digital_window(spec: FrameSpec, key: WindowKey) -> np.ndarray:
    """デジタル窓（キャッシュ付き、呼び出し側で書き換えないこと）"""
    return frequency_grid(spec).window(key)


# ---------------------------------------------------------------------------
# タイトネスと連続性
# ---------------------------------------------------------------------------

def _squared_sum(spec: FrameSpec, keys: Sequence[WindowKey]) -> np.ndarray:
    total = np.zeros(spec.shape)
    for key in keys:
        w = digital_window(spec, key)
        total += w * w
    return total


def check_tight(spec: FrameSpec, include_boundary: bool = True) -> TightnessReport:
    """
    タイトネス検査

    T(ξ) = Φ̂²(ξ) + Σ 窓² を全格子点で計算し、max |T(ξ) − Φ̂²(2^{−2(J+1)}ξ)| を返す。

    Args:
        spec: フレーム仕様
        include_boundary: False なら境界・角の原子を除いて検査

    Returns:
        TightnessReport
    """
    keys = index_set(spec.J, include_boundary)
    grid = frequency_grid(spec)
    logger.info(f"タイトネス検査: n={spec.n}, J={spec.J}, 窓数={len(keys)}")

    with Timer("check_tight"):
        workers = worker_count(len(keys))
        chunks = chunked(keys, math.ceil(len(keys) / workers))
        partials = run_parallel([functools.partial(_squared_sum, spec, chunk) for chunk in chunks])
        total = np.zeros(spec.shape)
        for partial in partials:
            total += partial

    target = telescoped_target(grid.components, spec.J, spec.profile)
    deviation = np.abs(total - target)
    peak = int(np.argmax(deviation))
    argmax = tuple(float(c.ravel()[peak]) for c in grid.components)
    max_dev = float(deviation.ravel()[peak])
    logger.info(f"タイトネス検査完了: max_dev={max_dev:.3e}")

    return TightnessReport(
        max_dev=max_dev,
        grid_report=GridReport(
            n=spec.n,
            J=spec.J,
            freq_scale=spec.xi_step,
            points=int(total.size),
            n_windows=len(keys),
            argmax_xi=argmax,
            min_total=float(total.min()),
            max_total=float(total.max()),
        ),
    )


def check_continuity(J: int, profile: ProfileParams = DEFAULT_PROFILE, points: int = 64, seed: int = 0) -> ContinuityReport:
    """
    ピラミッド境界 |ξ_p| = |ξ_q| での区分式の両側評価の差

    Args:
        J: 最大スケール
        profile: 窓プロファイル
        points: 境界面ごとの標本点数
        seed: 乱数シード

    Returns:
        ContinuityReport
    """
    rng = np.random.default_rng(seed)
    max_gap = 0.0
    total_points = 0
    keys = [key for key in index_set(J) if key[0] != 0]
    for key in keys:
        eps, j, ell = key
        pyramids = {p for p, _ in window_pieces(*key)}
        for p, q in itertools.combinations((1, 2, 3), 2):
            if p not in pyramids and q not in pyramids:
                continue
            other = 6 - p - q
            radius = rng.uniform(4.0 ** j * CORONA_INNER, 4.0 ** j * CORONA_OUTER, size=points)
            xi = np.zeros((points, 3))
            xi[:, p - 1] = radius * rng.choice((-1.0, 1.0), size=points)
            xi[:, q - 1] = radius * rng.choice((-1.0, 1.0), size=points)
            xi[:, other - 1] = rng.uniform(-1.0, 1.0, size=points) * radius
            gap = np.abs(window_piece(eps, j, ell, xi, p, profile) - window_piece(eps, j, ell, xi, q, profile))
            max_gap = max(max_gap, float(gap.max()))
            total_points += points
    return ContinuityReport(max_gap=max_gap, points=total_points, windows_checked=len(keys))


# ---------------------------------------------------------------------------
# 解析・合成
# ---------------------------------------------------------------------------

def _check_volume(f: SampledVolume, spec: FrameSpec) -> None:
    if f.domain != "spatial":
        raise DomainError("解析には空間領域のボリュームが必要です")
    if f.dims != spec.shape:
        raise DomainError(f"ボリュームの形状 {f.dims} がフレーム仕様 {spec.shape} と一致しません")


def _top_candidates(mags: np.ndarray, keep: int) -> np.ndarray:
    """大きさが上位 keep 個に入りうる候補（同値を含む）"""
    if keep >= mags.size:
        return np.arange(mags.size)
    threshold = np.partition(mags, mags.size - keep)[mags.size - keep]
    return np.flatnonzero(mags >= threshold)


LATTICES = ("full", "decimated")


def _cyclic_arc(occupied: np.ndarray, n: int) -> int:
    """法 n の占有剰余を覆う最短の弧の長さ"""
    if occupied.size == 0:
        return 1
    gaps = np.diff(occupied)
    widest = max(int(gaps.max()) if gaps.size else 0, int(occupied[0]) + n - int(occupied[-1]))
    return n - widest + 1


@functools.lru_cache(maxsize=1024)
def lattice_strides(spec: FrameSpec, key: WindowKey) -> Tuple[int, int, int]:
    """
    窓ごとの平行移動の間引き幅 (s_1, s_2, s_3)

    軸 i の周波数の台が長さ n/s_i の弧に収まる最大の2冪 s_i。このとき
    √(s_1 s_2 s_3) 倍した間引き係数も Parseval で、合成は零埋めで厳密に戻る。
    """
    support = digital_window(spec, key) > 0
    strides = []
    for axis in range(3):
        others = tuple(a for a in range(3) if a != axis)
        occupied = np.flatnonzero(support.any(axis=others))
        arc = _cyclic_arc(occupied, spec.n)
        period = 1 << max(0, math.ceil(math.log2(arc)))
        strides.append(max(1, spec.n // period))
    return tuple(strides)


def lattice_size(spec: FrameSpec, lattice: str = "full") -> int:
    """格子上の係数の総数"""
    keys = index_set(spec.J)
    if lattice == "full":
        return len(keys) * spec.n ** 3
    if lattice != "decimated":
        raise DomainError(f"不明な格子です: {lattice}")
    return sum(int(np.prod([spec.n // s for s in lattice_strides(spec, key)])) for key in keys)


def _lattice_positions(spec: FrameSpec, strides: Tuple[int, int, int]) -> np.ndarray:
    """間引き格子の点の平坦インデックス（C順）"""
    axes = [np.arange(0, spec.n, s) for s in strides]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.ravel_multi_index(tuple(g.ravel() for g in grids), spec.shape)


def analysis(
    f: SampledVolume,
    spec: FrameSpec,
    keep: Optional[int] = None,
    lattice: str = "full",
) -> CoefficientSet:
    """
    解析変換 c_w = IFFT(w · FFT(f))

    lattice="full" は全格子の平行移動で係数を読む。"decimated" は窓ごとに
    lattice_strides の間引き格子の点だけを √(s_1 s_2 s_3) 倍して読む。
    keep を指定すると窓を1つずつ処理しながら大きさの上位 keep 個だけを
    保持する（同値はインデックス順）。

    Args:
        f: 空間領域のボリューム（形状 (n, n, n)）
        spec: フレーム仕様
        keep: 保持する係数の数（None ならすべて。全格子では密配列で返す）
        lattice: "full" または "decimated"

    Returns:
        CoefficientSet

    Raises:
        DomainError: 形状や領域が一致しない場合
    """
    _check_volume(f, spec)
    if keep is not None and keep < 0:
        raise DomainError(f"keep は0以上である必要があります: {keep}")
    if lattice not in LATTICES:
        raise DomainError(f"不明な格子です: {lattice}")
    decimated = lattice == "decimated"

    keys = index_set(spec.J)
    real = f.is_real
    n3 = spec.n ** 3
    spectrum = sp_fft.fftn(f.data, norm="ortho", workers=worker_count())
    ordinals = list(range(len(keys)))
    batch_size = worker_count(len(keys))
    logger.info(
        f"解析変換: n={spec.n}, J={spec.J}, 窓数={len(keys)}, 格子={lattice}, "
        f"保持={keep if keep is not None else 'すべて'}"
    )

    def coefficient(ordinal: int) -> np.ndarray:
        c = sp_fft.ifftn(digital_window(spec, keys[ordinal]) * spectrum, norm="ortho", workers=1)
        return c.real if real else c

    def lattice_values(ordinal: int, c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(平坦インデックス, 値)"""
        if not decimated:
            return np.arange(n3), c.ravel()
        strides = lattice_strides(spec, keys[ordinal])
        sub = c[::strides[0], ::strides[1], ::strides[2]].ravel() * math.sqrt(float(np.prod(strides)))
        return _lattice_positions(spec, strides), sub

    dtype = float if real else complex

    with Timer("analysis"):
        if keep is None and not decimated:
            dense = np.empty((len(keys),) + spec.shape, dtype=dtype)
            for batch in chunked(ordinals, batch_size):
                results = run_parallel([functools.partial(coefficient, i) for i in batch])
                for i, c in zip(batch, results):
                    dense[i] = c
            energy = float(np.vdot(dense, dense).real)
            return CoefficientSet(
                spec=spec, windows=keys, dense=dense,
                truncated=False, real_input=real, total_energy=energy,
            )

        best_keys = np.empty(0, dtype=np.int64)
        best_values = np.empty(0, dtype=dtype)
        energy = 0.0
        for batch in chunked(ordinals, batch_size):
            results = run_parallel([functools.partial(coefficient, i) for i in batch])
            for i, c in zip(batch, results):
                positions, flat = lattice_values(i, c)
                mags = np.abs(flat)
                energy += float(np.dot(mags, mags))
                if keep == 0:
                    continue
                candidates = _top_candidates(mags, keep if keep is not None else mags.size)
                merged_keys = np.concatenate([best_keys, i * n3 + positions[candidates].astype(np.int64)])
                merged_values = np.concatenate([best_values, flat[candidates]])
                order = np.lexsort((merged_keys, -np.abs(merged_values)))[:keep]
                best_keys, best_values = merged_keys[order], merged_values[order]

    return CoefficientSet(
        spec=spec,
        windows=keys,
        window_ids=best_keys // n3,
        flat_k=best_keys % n3,
        values=best_values,
        truncated=best_keys.size < lattice_size(spec, lattice),
        real_input=real,
        total_energy=energy,
        lattice=lattice,
    )


def synthesis(c: CoefficientSet, spec: FrameSpec) -> SampledVolume:
    """
    合成変換（解析の随伴） Σ_w IFFT(w · FFT(c_w))

    間引き格子の係数は √(s_1 s_2 s_3) 倍して零埋めしてから同じ随伴を通す。
    空の係数集合ではゼロボリュームを返す。
    """
    if c.spec.shape != spec.shape or c.spec.J != spec.J:
        raise DomainError("係数集合のフレーム仕様が一致しません")
    n3 = spec.n ** 3

    def spectral_term(ordinal: int, volume: np.ndarray) -> np.ndarray:
        return digital_window(spec, c.windows[ordinal]) * sp_fft.fftn(volume, norm="ortho", workers=1)

    tasks = []
    if c.dense is not None:
        for ordinal in range(len(c.windows)):
            tasks.append(functools.partial(spectral_term, ordinal, c.dense[ordinal]))
    else:
        for ordinal in np.unique(c.window_ids):
            sel = c.window_ids == ordinal
            volume = np.zeros(n3, dtype=c.values.dtype)
            scale = 1.0
            if c.lattice == "decimated":
                scale = math.sqrt(float(np.prod(lattice_strides(spec, c.windows[int(ordinal)]))))
            volume[c.flat_k[sel]] = scale * c.values[sel]
            tasks.append(functools.partial(spectral_term, int(ordinal), volume.reshape(spec.shape)))

    accumulated = np.zeros(spec.shape, dtype=complex)
    with Timer("synthesis"):
        for batch in chunked(tasks, max(1, worker_count(len(tasks) or 1))):
            for term in run_parallel(batch):
                accumulated += term
    out = sp_fft.ifftn(accumulated, norm="ortho", workers=worker_count())
    return SampledVolume(data=out.real if c.real_input else out, domain="spatial")


def coefficient_at(c: CoefficientSet, idx: ShearletIndex) -> complex:
    """インデックスの係数（保持されていなければ0）"""
    key = validate_window(idx.epsilon, idx.j, idx.ell)
    ordinal = c.windows.index(key)
    flat = int(np.ravel_multi_index(tuple(int(k) % c.spec.n for k in idx.k), c.spec.shape))
    if c.dense is not None:
        return complex(c.dense[ordinal].ravel()[flat])
    hit = np.flatnonzero((c.window_ids == ordinal) & (c.flat_k == flat))
    return complex(c.values[hit[0]]) if hit.size else 0.0j


def digital_atom(spec: FrameSpec, idx: ShearletIndex) -> SampledVolume:
    """デジタル原子 ψ_{w,k} = IFFT(w · e^{−2πi m·k/n} / n^{3/2})"""
    key = validate_window(idx.epsilon, idx.j, idx.ell)
    grid = frequency_grid(spec)
    m = [np.rint(c / spec.xi_step) for c in grid.components]
    phase = np.exp(-2j * np.pi * sum(mi * ki for mi, ki in zip(m, idx.k)) / spec.n)
    spectrum = digital_window(spec, key) * phase / spec.n ** 1.5
    atom = sp_fft.ifftn(spectrum, norm="ortho", workers=worker_count())
    return SampledVolume(data=atom.real.copy(), domain="spatial")


# ---------------------------------------------------------------------------
# 内積
# ---------------------------------------------------------------------------

def atom_transform(key: WindowKey) -> Tuple[float, np.ndarray]:
    """
    連続原子の振幅と位相行列 P（ψ̂ = 振幅 · 窓 · exp(−2πi⟨Pξ, k⟩)）

    内部 (j ≥ 1): 2^{−2j}, Z^ε S^{−T}_ℓ A^{−j} Z^{−ε}
    境界・角 (j ≥ 1): 2^{−2j−3}, ¼ Z^ε S^{−T}_ℓ A^{−j} Z^{−ε}
    j = 0: 1, I
    """
    eps, j, ell = key
    if j == 0:
        return 1.0, np.eye(3)
    z = cyclic_power(eps, 3).astype(float)
    z_inv = cyclic_power(-eps, 3).astype(float)
    matrix = z @ shear(-np.asarray(ell, dtype=float), transposed=True) @ alpha_scale(0.5, 4.0 ** (-j), 3) @ z_inv
    if is_boundary(key):
        return 2.0 ** (-2 * j - 3), 0.25 * matrix
    return 2.0 ** (-2 * j), matrix


def _radii(key: WindowKey) -> Tuple[float, float]:
    """窓の台の |ξ|_∞ の範囲"""
    if key[0] == 0:
        return 0.0, COARSE_HALF_WIDTH
    scale = 4.0 ** key[1]
    return scale * CORONA_INNER, scale * CORONA_OUTER


@cached_array(_support_cache, "support", lambda key, profile=DEFAULT_PROFILE: (key, profile.steepness, profile.plateau))
def support_boxes(key: WindowKey, profile: ProfileParams = DEFAULT_PROFILE) -> Dict[Tuple[int, int, int], Tuple[np.ndarray, np.ndarray]]:
    """
    窓の台を覆う象限ごとの箱

    粗い格子で窓を評価し、非零点の範囲を1格子分広げて象限に制限する。

    Returns:
        {符号の組: (下端, 上端)}
    """
    _, radius = _radii(key)
    axis = np.linspace(-radius, radius, SUPPORT_GRID + 1)
    step = axis[1] - axis[0]
    components = np.meshgrid(axis, axis, axis, indexing="ij")
    mask = window_values(key, components, profile) > 0
    boxes = {}
    for signs in itertools.product((1, -1), repeat=3):
        sel = mask.copy()
        for i, s in enumerate(signs):
            sel &= (components[i] >= 0) if s > 0 else (components[i] <= 0)
        if not sel.any():
            continue
        lo = np.array([components[i][sel].min() for i in range(3)]) - step
        hi = np.array([components[i][sel].max() for i in range(3)]) + step
        for i, s in enumerate(signs):
            if s > 0:
                lo[i] = max(lo[i], 0.0)
            else:
                hi[i] = min(hi[i], 0.0)
        boxes[signs] = (lo, hi)
    return boxes


def _lattice_range(lo: float, hi: float, h: float, sign: int) -> np.ndarray:
    start = math.ceil(lo / h - 1e-9)
    stop = math.floor(hi / h + 1e-9)
    if sign > 0:
        start = max(start, 0)
    else:
        stop = min(stop, -1)
    return np.arange(start, stop + 1)


def quadrature_steps(
    shift: np.ndarray,
    boxes: Iterable[Tuple[np.ndarray, np.ndarray]],
    spec: FrameSpec,
) -> np.ndarray:
    """
    軸ごとの求積刻み h_i

    格子 h_iℤ 上の台形則は空間側で周期 1/h_i の折り返しを含むので、
    1/h_i ≥ QUADRATURE_OVERSAMPLE · (|shift_i| + 広がり) とする。
    広がりは共通部分の幅 E_i から QUADRATURE_SPREAD / E_i と見積もる。
    刻みは freq_scale / QUADRATURE_REFINEMENT を超えない。

    Args:
        shift: 位相の平行移動差 P_aᵀk_a − P_bᵀk_b
        boxes: 象限ごとの台の共通部分 (下端, 上端)
        spec: フレーム仕様
    """
    boxes = list(boxes)
    lo = np.min([box[0] for box in boxes], axis=0)
    hi = np.max([box[1] for box in boxes], axis=0)
    extent = np.maximum(hi - lo, spec.xi_step)
    reach = np.abs(np.asarray(shift, dtype=float)) + QUADRATURE_SPREAD / extent
    base = spec.xi_step / get_settings().QUADRATURE_REFINEMENT
    return np.minimum(base, 1.0 / (QUADRATURE_OVERSAMPLE * reach))


def inner_product(a: ShearletIndex, b: ShearletIndex, spec: FrameSpec) -> complex:
    """
    連続原子の内積 ⟨ψ_a, ψ_b⟩ = ∫ ψ̂_a conj(ψ̂_b) dξ

    軸ごとの格子 h_iℤ（quadrature_steps）上の台形則で、
    象限ごとの台の箱の共通部分だけを評価する。

    Args:
        a, b: シアレットインデックス（j ≤ spec.J）
        spec: フレーム仕様

    Returns:
        複素数の内積

    Raises:
        InvalidIndexError: インデックスが不正な場合
    """
    key_a = validate_window(a.epsilon, a.j, a.ell)
    key_b = validate_window(b.epsilon, b.j, b.ell)
    if a.dim != 3 or b.dim != 3:
        raise InvalidIndexError("3次元のインデックスが必要です")
    if max(a.j, b.j) > spec.J:
        raise InvalidIndexError(f"スケールがフレーム仕様の J = {spec.J} を超えています")

    inner_a, outer_a = _radii(key_a)
    inner_b, outer_b = _radii(key_b)
    if inner_a >= outer_b or inner_b >= outer_a:
        return 0.0j

    amp_a, p_a = atom_transform(key_a)
    amp_b, p_b = atom_transform(key_b)
    shift = p_a.T @ np.asarray(a.k, dtype=float) - p_b.T @ np.asarray(b.k, dtype=float)
    profile = spec.profile

    boxes_a = support_boxes(key_a, profile)
    boxes_b = support_boxes(key_b, profile)
    overlaps = {}
    for signs in sorted(set(boxes_a) & set(boxes_b)):
        lo = np.maximum(boxes_a[signs][0], boxes_b[signs][0])
        hi = np.minimum(boxes_a[signs][1], boxes_b[signs][1])
        if np.all(lo <= hi):
            overlaps[signs] = (lo, hi)
    if not overlaps:
        return 0.0j

    h = quadrature_steps(shift, overlaps.values(), spec)
    total = 0.0j
    for signs, (lo, hi) in overlaps.items():
        axes = [_lattice_range(lo[i], hi[i], h[i], signs[i]) * h[i] for i in range(3)]
        if any(ax.size == 0 for ax in axes):
            continue
        for start in range(0, axes[0].size, QUADRATURE_SLAB):
            slab = axes[0][start:start + QUADRATURE_SLAB]
            components = (slab[:, None, None], axes[1][None, :, None], axes[2][None, None, :])
            product = window_values(key_a, components, profile) * window_values(key_b, components, profile)
            if not product.any():
                continue
            phase = np.exp(-2j * np.pi * (
                components[0] * shift[0] + components[1] * shift[1] + components[2] * shift[2]
            ))
            total += complex(np.sum(product * phase))
    return complex(amp_a * amp_b * float(np.prod(h)) * total)


def digital_inner_product(a: ShearletIndex, b: ShearletIndex, spec: FrameSpec) -> complex:
    """
    デジタル原子の内積（厳密）

    (1/n³) Σ_m w_a(m) w_b(m) e^{−2πi m·(k_a − k_b)/n}
    """
    key_a = validate_window(a.epsilon, a.j, a.ell)
    key_b = validate_window(b.epsilon, b.j, b.ell)
    product = (digital_window(spec, key_a) * digital_window(spec, key_b)).ravel()
    support = np.flatnonzero(product)
    if support.size == 0:
        return 0.0j
    grid = frequency_grid(spec)
    delta = np.asarray(a.k, dtype=float) - np.asarray(b.k, dtype=float)
    m = [np.rint(grid.flat[i][support] / spec.xi_step) for i in range(3)]
    phase = np.exp(-2j * np.pi * (m[0] * delta[0] + m[1] * delta[1] + m[2] * delta[2]) / spec.n)
    return complex(np.sum(product[support] * phase) / spec.n ** 3)


def digital_correlation(key_a: WindowKey, key_b: WindowKey, spec: FrameSpec) -> np.ndarray:
    """全平行移動差 Δ = k_a − k_b に対する ⟨ψ_{a,k_a}, ψ_{b,k_b}⟩（形状 (n, n, n)、Δ は n を法とする）"""
    product = digital_window(spec, key_a) * digital_window(spec, key_b)
    table = sp_fft.ifftn(product, workers=1)
    # ifftn は e^{+2πi m·x/n} なので Δ ↦ −Δ の並べ替え
    return np.roll(np.flip(table, axis=(0, 1, 2)), 1, axis=(0, 1, 2))
