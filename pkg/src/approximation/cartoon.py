"""
カートゥーン様関数（ファントム）

f = f_0 + f_1 χ_B（B は曲率が ν 以下の軸平行楕円体、f_i は C² ノルム ≤ 1 のバンプ）の
生成とセル中心での標本化
"""

import functools
import logging
import math
from typing import List

import numpy as np

from src.schemas.data_models import BUMP_SUP, PhantomSpec, SampledVolume, SmoothPart
from src.utils.errors import DomainError, InfeasiblePhantomError
from src.utils.parallel import chunked, run_parallel, worker_count

logger = logging.getLogger(__name__)

MIN_RASTER_SIZE = 8


def _bump_amplitude_limit(d: int) -> float:
    """C² ノルムが1となるテンソルバンプの振幅"""
    g0, g1, g2 = BUMP_SUP
    return 1.0 / max(g0 ** d, g2 * g0 ** (d - 1), g1 * g1 * g0 ** (d - 2))


def make_phantom(nu: float, d: int = 3, seed: int = 0) -> PhantomSpec:
    """
    ランダムなカートゥーン様関数の仕様を生成（シードに対して決定的）

    a_min ~ U[1/ν, ½], a_max ~ U[a_min, min(½, ν a_min²)] とし、残りの半軸はその間から取る。
    中心は楕円体が [0,1]^d に収まる範囲から一様に取る。

    Args:
        nu: 主曲率の上限 ν
        d: 次元（2 または 3）
        seed: 乱数シード

    Returns:
        PhantomSpec

    Raises:
        DomainError: ν ≤ 0 または d が 2, 3 以外の場合
        InfeasiblePhantomError: 1/ν > ½ で楕円体が単位立方体に収まらない場合
    """
    if nu <= 0:
        raise DomainError(f"ν は正である必要があります: {nu}")
    if d not in (2, 3):
        raise DomainError(f"次元は2か3である必要があります: {d}")
    if 1.0 / nu > 0.5:
        raise InfeasiblePhantomError(
            f"ν = {nu} では半径 ≥ 1/ν = {1.0 / nu:.4g} の楕円体が単位立方体に収まりません"
        )

    rng = np.random.default_rng(seed)
    a_min = float(rng.uniform(1.0 / nu, 0.5))
    a_max = float(rng.uniform(a_min, min(0.5, nu * a_min * a_min)))
    middle = [float(rng.uniform(a_min, a_max)) for _ in range(d - 2)]
    semi_axes = [a_min, a_max] + middle
    semi_axes = [semi_axes[i] for i in rng.permutation(d)]
    center = [float(rng.uniform(a, 1.0 - a)) for a in semi_axes]

    limit = _bump_amplitude_limit(d)
    parts = []
    for _ in range(2):
        amplitude = float(rng.uniform(0.5, 1.0)) * limit * float(rng.choice((-1.0, 1.0)))
        parts.append(SmoothPart(kind="bump", amplitude=amplitude))

    spec = PhantomSpec(
        d=d, nu=nu, center=tuple(center), semi_axes=tuple(semi_axes),
        smooth_parts=tuple(parts), seed=seed,
    )
    logger.debug(f"ファントム生成: seed={seed}, 半軸={spec.semi_axes}, 曲率={spec.max_curvature:.4g}")
    return spec


def _smooth_values(part: SmoothPart, coords: List[np.ndarray]) -> np.ndarray:
    if part.kind == "constant":
        return np.full(np.broadcast(*coords).shape, part.amplitude)
    value = np.asarray(part.amplitude, dtype=float)
    for c in coords:
        value = value * (1.0 - (2.0 * c - 1.0) ** 2) ** 3
    return value


def _membership(spec: PhantomSpec, coords: List[np.ndarray]) -> np.ndarray:
    radius = sum(((c - m) / a) ** 2 for c, m, a in zip(coords, spec.center, spec.semi_axes))
    return radius <= 1.0


def _cell_centers(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def rasterize(spec: PhantomSpec, n: int) -> SampledVolume:
    """
    セル中心 (i + ½)/n で f_0 + f_1 χ_B を標本化

    Raises:
        DomainError: n < 8 の場合
    """
    if n < MIN_RASTER_SIZE:
        raise DomainError(f"n は {MIN_RASTER_SIZE} 以上である必要があります: {n}")
    axis = _cell_centers(n)
    f0, f1 = spec.smooth_parts

    def slab(rows: List[int]) -> np.ndarray:
        coords = np.meshgrid(axis[rows], *([axis] * (spec.d - 1)), indexing="ij")
        inside = _membership(spec, coords)
        return _smooth_values(f0, coords) + _smooth_values(f1, coords) * inside

    rows = list(range(n))
    slabs = chunked(rows, math.ceil(n / worker_count(n)))
    data = np.concatenate(run_parallel([functools.partial(slab, s) for s in slabs]), axis=0)
    return SampledVolume(data=data, domain="spatial", spacing=1.0 / n, origin=(0.5 / n,) * spec.d)


def count_jump_faces(spec: PhantomSpec, n: int) -> int:
    """隣接セルで χ_B が変わる面の数"""
    axis = _cell_centers(n)
    inside = _membership(spec, np.meshgrid(*([axis] * spec.d), indexing="ij"))
    return int(sum(np.count_nonzero(np.diff(inside, axis=k)) for k in range(spec.d)))


def curvature_bound(spec: PhantomSpec) -> float:
    """軸平行楕円体の最大主曲率 a_max / a_min²"""
    return spec.max_curvature
