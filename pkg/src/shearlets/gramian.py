"""
グラム行列の診断

原子対の層別サンプリング、相互グラム行列の組み立て、ω_α に対する減衰包絡線のフィット、
入れ子の打ち切りでのSchur上限の安定性
"""

import functools
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.molecules.metric import MatrixLike, omega_alpha, schur_lp_bound
from src.schemas.data_models import FrameSpec, GramianRow, GramianTable, ShearletIndex
from src.schemas.reports import DecayFitResult, SchurDiagnostic
from src.shearlets.frame3d import WindowKey, digital_correlation, digital_window, index_set
from src.shearlets.systems import AtomSystem
from src.utils.errors import DomainError, InsufficientDataError
from src.utils.parallel import run_parallel
from src.utils.profiler import Timer

logger = logging.getLogger(__name__)

# 包絡線フィットのビン数（ω の1桁あたり）
BINS_PER_DECADE = 8

MIN_FIT_ROWS = 20

# 入れ子の打ち切りで上限の変化がこれ未満なら安定
STABILITY_TOL = 0.05


class PairSampler(BaseModel):
    """原子対の層別サンプラー（スケール差・シア差・平行移動差）"""

    count: int = Field(..., ge=0)
    seed: int = 0
    scale_gaps: Tuple[int, ...] = (0, 1, 2)
    max_translation: int = Field(default=8, ge=0)
    alpha: float = 0.5

    def sample(self, system: AtomSystem) -> List[Tuple[ShearletIndex, ShearletIndex]]:
        """
        原子対を生成（シードに対して決定的）

        スケール差はラウンドロビン、シアは同じピラミッドの近傍か任意の窓を半々、
        平行移動差は対数一様な大きさで各軸の符号をランダムに取る。
        """
        rng = np.random.default_rng(self.seed)
        by_scale: Dict[int, List[WindowKey]] = {}
        for key in system.windows():
            by_scale.setdefault(key[1], []).append(key)
        top = max(by_scale)

        pairs = []
        for i in range(self.count):
            gap = min(self.scale_gaps[i % len(self.scale_gaps)], top)
            j_a = int(rng.integers(0, top - gap + 1))
            j_b = j_a + gap
            if rng.random() < 0.5:
                j_a, j_b = j_b, j_a
            key_a = by_scale[j_a][int(rng.integers(len(by_scale[j_a])))]
            candidates = by_scale[j_b]
            same_pyramid = [key for key in candidates if key[0] == key_a[0]]
            if same_pyramid and rng.random() < 0.5:
                candidates = same_pyramid
            key_b = candidates[int(rng.integers(len(candidates)))]

            k_a = rng.integers(-self.max_translation, self.max_translation + 1, size=3)
            magnitude = int(math.floor(2.0 ** rng.uniform(0.0, math.log2(self.max_translation + 1)))) - 1
            offset = rng.integers(0, magnitude + 1, size=3) * rng.choice((-1, 1), size=3)
            k_b = k_a + offset
            pairs.append((_index(key_a, k_a), _index(key_b, k_b)))
        return pairs


def _index(key: WindowKey, k) -> ShearletIndex:
    eps, j, ell = key
    return ShearletIndex(epsilon=eps, j=j, ell=tuple(ell), k=tuple(int(c) for c in k))


def gramian_row(A: AtomSystem, B: AtomSystem, a: ShearletIndex, b: ShearletIndex, alpha: float = 0.5) -> GramianRow:
    """1要素 ⟨a, b⟩ と ω_α(a, b)"""
    value = A.inner(a, b)
    omega = max(1.0, omega_alpha(A.phase(a), B.phase(b), alpha))
    return GramianRow(index_a=a, index_b=b, re=float(value.real), im=float(value.imag), omega=omega)


def cross_gramian(A: AtomSystem, B: AtomSystem, pair_sampler: PairSampler) -> GramianTable:
    """
    相互グラム行列の標本

    Args:
        A, B: 原子系（同じ周波数格子を共有すること）
        pair_sampler: 原子対のサンプラー

    Returns:
        (index_a, index_b) でソートした GramianTable

    Raises:
        InsufficientDataError: 標本が空の場合
        DomainError: 周波数格子が一致しない場合
    """
    if pair_sampler.count <= 0:
        raise InsufficientDataError("原子対の標本が空です")
    if A.spec.cache_token() != B.spec.cache_token():
        raise DomainError("原子系の周波数格子が一致しません")

    pairs = pair_sampler.sample(A)
    logger.info(f"相互グラム行列を計算: {len(pairs)} 対, seed={pair_sampler.seed}")
    with Timer("cross_gramian"):
        rows = run_parallel([
            functools.partial(gramian_row, A, B, a, b, pair_sampler.alpha) for a, b in pairs
        ])
    return GramianTable(rows=rows).sorted()


def decay_fit(table: GramianTable, omega_min: float, omega_max: float = math.inf) -> DecayFitResult:
    """
    log|値| vs log ω の上側包絡線フィット

    ω の1桁あたり8個の対数ビンごとに |値| の最大を取り、その点列に最小二乗直線を当てる。

    Args:
        table: グラム行列の標本
        omega_min: 使用する ω の下限
        omega_max: 使用する ω の上限

    Returns:
        DecayFitResult（C = exp(切片)、傾き、r²）

    Raises:
        InsufficientDataError: 有効な行が20未満、またはビンが2未満の場合
    """
    values = np.abs(table.values())
    omegas = table.omegas()
    mask = (omegas >= omega_min) & (omegas <= omega_max) & (values > 0)
    if int(mask.sum()) < MIN_FIT_ROWS:
        raise InsufficientDataError(
            f"フィットには ω ≥ {omega_min} かつ値が非零の行が {MIN_FIT_ROWS} 行以上必要です（{int(mask.sum())} 行）"
        )
    values, omegas = values[mask], omegas[mask]

    bins = np.floor(BINS_PER_DECADE * np.log10(omegas)).astype(int)
    envelope = []
    for b in np.unique(bins):
        members = np.flatnonzero(bins == b)
        top = members[np.argmax(values[members])]
        envelope.append((float(omegas[top]), float(values[top])))
    if len(envelope) < 2:
        raise InsufficientDataError("包絡線のビンが2つ未満です")

    x = np.log([w for w, _ in envelope])
    y = np.log([v for _, v in envelope])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residual ** 2)) / spread if spread > 0 else 1.0
    return DecayFitResult(
        C=float(math.exp(intercept)),
        slope=float(slope),
        r2=r2,
        omega_min=omega_min,
        rows_used=int(values.size),
        bins_used=len(envelope),
        envelope=envelope,
    )


def sparsity_equiv_diag(levels: Sequence[MatrixLike], p: float) -> SchurDiagnostic:
    """
    入れ子の打ち切りごとの Schur ℓ^p 上限と、最後の2レベルの安定性

    Raises:
        InsufficientDataError: レベルが2未満の場合
    """
    if len(levels) < 2:
        raise InsufficientDataError("打ち切りレベルは2つ以上必要です")
    bounds = [schur_lp_bound(level, p) for level in levels]
    sizes = [_size(level) for level in levels]
    last, previous = bounds[-1], bounds[-2]
    change = abs(last - previous) / last if last > 0 else 0.0
    logger.info(f"Schur上限: p={p}, {['%.6g' % b for b in bounds]}, 変化率={change:.3%}")
    return SchurDiagnostic(
        p=p, sizes=sizes, bounds=bounds, schur_bound=last,
        relative_change=change, stable=change < STABILITY_TOL,
    )


def _size(level: MatrixLike) -> int:
    if isinstance(level, GramianTable):
        return len({row.index_a for row in level.rows})
    if isinstance(level, dict):
        return len({key[0] for key in level})
    return int(level.shape[0])


def reduced_digital_gramian(spec: FrameSpec, j_max: int, p: float) -> np.ndarray:
    """
    j ≤ j_max の窓に打ち切ったデジタルSH自己グラム行列の窓ごとの縮約

    R_ab = (Σ_Δ |⟨ψ_{a,k+Δ}, ψ_{b,k}⟩|^q)^{1/q}, q = min(1, p)。周期格子上の全平行移動で
    グラム行列は平行移動不変なので、R の Schur 上限は打ち切った行列そのものの上限に等しい。
    """
    if p <= 0:
        raise DomainError(f"p は正である必要があります: {p}")
    q = min(1.0, p)
    keys = [key for key in index_set(spec.J) if key[1] <= j_max]
    supports = [np.packbits(digital_window(spec, key) > 0) for key in keys]
    reduced = np.zeros((len(keys), len(keys)))

    def entry(a: int, b: int) -> Tuple[int, int, float]:
        table = np.abs(digital_correlation(keys[a], keys[b], spec))
        return a, b, float(np.sum(table ** q) ** (1.0 / q))

    tasks = [
        functools.partial(entry, a, b)
        for a in range(len(keys)) for b in range(a, len(keys))
        if np.any(supports[a] & supports[b])
    ]
    logger.info(f"縮約グラム行列: j ≤ {j_max}, 窓数={len(keys)}, 非零ブロック={len(tasks)}")
    for a, b, value in run_parallel(tasks):
        reduced[a, b] = reduced[b, a] = value
    return reduced


def nested_torus_gramians(
    sizes: Sequence[int], J: int, p: float, j_max: Optional[int] = None
) -> List[np.ndarray]:
    """
    格子数 n を増やした入れ子の縮約グラム行列

    J を固定すると空間の刻み 1/2^{2J−1} は変わらず、トーラスの一辺 n/2^{2J−1} だけが伸びる。
    各レベルは同じ窓の原子を、より広い平行移動の集合で並べた打ち切りになる。

    Args:
        sizes: 格子数の狭義増加列
        J: 最大スケール
        p: ℓ^p の指数
        j_max: 窓のスケールの上限（省略時は J）

    Raises:
        DomainError: sizes が狭義増加でない場合
    """
    sizes = [int(n) for n in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DomainError(f"格子数は狭義増加列である必要があります: {sizes}")
    j_max = J if j_max is None else j_max
    levels = []
    for n in sizes:
        with Timer(f"reduced_gramian_n{n}"):
            levels.append(reduced_digital_gramian(FrameSpec(n=n, J=J), j_max, p))
    return levels
