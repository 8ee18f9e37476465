"""
窓関数

Meyer型スケーリング関数 φ̂、積窓 Φ̂、コロナ窓 W、バンプ v、角度窓 V
"""

from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import comb

from src.schemas.data_models import ProfileParams

DEFAULT_PROFILE = ProfileParams()

ArrayOrFloat = Union[float, np.ndarray]


def _restore(value: np.ndarray, scalar: bool) -> ArrayOrFloat:
    return float(value) if scalar else value


def smooth_step(t: ArrayOrFloat, profile: ProfileParams = DEFAULT_PROFILE) -> ArrayOrFloat:
    """
    滑らかなステップ関数 β

    β(t) = 0 (t ≤ 0), 1 (t ≥ 1)、(0, 1) で狭義単調増加、β(t) + β(1−t) = 1。
    steepness が None なら f(t) = exp(−1/t) による C^∞ ステップ、
    整数 r なら t^{r+1} Σ_{i=0}^{r} C(r+i, i)(1−t)^i の多項式ステップ（C^r）。

    Args:
        t: 実数または配列
        profile: プロファイルパラメータ

    Returns:
        [0, 1] の値
    """
    scalar = np.isscalar(t)
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tc = np.where(inside, t, 0.5)

    if profile.steepness is None:
        f = np.exp(-1.0 / tc)
        g = np.exp(-1.0 / (1.0 - tc))
        core = f / (f + g)
    else:
        r = profile.steepness
        core = np.zeros_like(tc)
        for i in range(r + 1):
            core = core + comb(r + i, i, exact=True) * (1.0 - tc) ** i
        core = tc ** (r + 1) * core

    result = np.where(t >= 1, 1.0, np.where(inside, core, 0.0))
    return _restore(result, scalar)


def bump_v(t: ArrayOrFloat, profile: ProfileParams = DEFAULT_PROFILE) -> ArrayOrFloat:
    """
    バンプ関数 v(t) = cos(π/2 · β(ρ(|t|)))、ρ(u) = (u − δ)/(1 − 2δ)

    [−δ, δ] で v ≡ 1、supp v ⊆ [−1, 1]、|v(t−1)|² + |v(t)|² + |v(t+1)|² = 1。
    """
    scalar = np.isscalar(t)
    delta = profile.plateau
    rho = (np.abs(np.asarray(t, dtype=float)) - delta) / (1.0 - 2.0 * delta)
    beta = np.asarray(smooth_step(rho, profile))
    value = np.where(beta >= 1.0, 0.0, np.cos(0.5 * np.pi * beta))
    return _restore(value, scalar)


def meyer_phi_hat(t: ArrayOrFloat, profile: ProfileParams = DEFAULT_PROFILE) -> ArrayOrFloat:
    """
    Meyer型スケーリング関数 φ̂

    偶関数、[−1/16, 1/16] で 1、[−1/8, 1/8] の外で 0。
    """
    scalar = np.isscalar(t)
    beta = np.asarray(smooth_step(16.0 * np.abs(np.asarray(t, dtype=float)) - 1.0, profile))
    value = np.where(beta >= 1.0, 0.0, np.cos(0.5 * np.pi * beta))
    return _restore(value, scalar)


def _components(xi) -> Tuple[np.ndarray, ...]:
    xi = np.asarray(xi, dtype=float)
    return tuple(xi[..., i] for i in range(xi.shape[-1]))


def phi_hat_product(components: Sequence[np.ndarray], profile: ProfileParams = DEFAULT_PROFILE) -> np.ndarray:
    """Φ̂ = Π φ̂(ξ_i)（成分ごとの配列で指定）"""
    value = np.asarray(meyer_phi_hat(components[0], profile))
    for c in components[1:]:
        value = value * meyer_phi_hat(c, profile)
    return value


def corona_from_components(components: Sequence[np.ndarray], profile: ProfileParams = DEFAULT_PROFILE) -> np.ndarray:
    """W = sqrt(max(0, Φ̂²(ξ/4) − Φ̂²(ξ)))（成分ごとの配列で指定）"""
    outer = phi_hat_product([c / 4.0 for c in components], profile)
    inner = phi_hat_product(components, profile)
    return np.sqrt(np.maximum(0.0, outer * outer - inner * inner))


def Phi_hat(xi, profile: ProfileParams = DEFAULT_PROFILE) -> ArrayOrFloat:
    """積窓 Φ̂(ξ) = φ̂(ξ_1)φ̂(ξ_2)φ̂(ξ_3)（末尾の軸が成分）"""
    xi = np.asarray(xi, dtype=float)
    return _restore(phi_hat_product(_components(xi), profile), xi.ndim == 1)


def W(xi, profile: ProfileParams = DEFAULT_PROFILE) -> ArrayOrFloat:
    """コロナ窓 W(ξ)"""
    xi = np.asarray(xi, dtype=float)
    return _restore(corona_from_components(_components(xi), profile), xi.ndim == 1)


def angular_from_ratios(u1: np.ndarray, u2: np.ndarray, profile: ProfileParams = DEFAULT_PROFILE) -> np.ndarray:
    """v(u_1) v(u_2)"""
    return np.asarray(bump_v(u1, profile)) * np.asarray(bump_v(u2, profile))


def V(xi, profile: ProfileParams = DEFAULT_PROFILE) -> ArrayOrFloat:
    """
    角度窓 V(ξ) = v(ξ_1/ξ_3) v(ξ_2/ξ_3)

    ξ_3 = 0 では 0 とする。
    """
    xi = np.asarray(xi, dtype=float)
    x1, x2, x3 = _components(xi)
    nonzero = x3 != 0
    safe = np.where(nonzero, x3, 1.0)
    value = np.where(nonzero, angular_from_ratios(x1 / safe, x2 / safe, profile), 0.0)
    return _restore(value, xi.ndim == 1)


def telescoped_target(components: Sequence[np.ndarray], J: int, profile: ProfileParams = DEFAULT_PROFILE) -> np.ndarray:
    """Φ̂²(2^{−2(J+1)}ξ)"""
    factor = 4.0 ** (J + 1)
    outer = phi_hat_product([c / factor for c in components], profile)
    return outer * outer


def shift_partition(u: ArrayOrFloat, profile: ProfileParams = DEFAULT_PROFILE) -> ArrayOrFloat:
    """Σ_{ℓ∈ℤ} |v(u − ℓ)|²（supp v ⊆ [−1, 1] なので有限和）"""
    scalar = np.isscalar(u)
    u = np.asarray(u, dtype=float)
    base = np.floor(u)
    total = np.zeros_like(u)
    for offset in (-1.0, 0.0, 1.0, 2.0):
        value = np.asarray(bump_v(u - (base + offset), profile))
        total = total + value * value
    return _restore(total, scalar)


# φ̂ の遷移帯の幅（order_check の格子解像度の基準）
TRANSITION_BAND = 1.0 / 16.0
CORONA_INNER = 1.0 / 16.0
CORONA_OUTER = 0.5
COARSE_HALF_WIDTH = 1.0 / 8.0
