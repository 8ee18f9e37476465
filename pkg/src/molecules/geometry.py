"""
球面幾何

方向ベクトルの角度表現、回転行列、射影角、心射投影
"""

import math
from typing import Sequence, Union

import numpy as np

from src.schemas.data_models import AngleSet, Direction
from src.utils.errors import DomainError

ArrayLike = Union[Sequence[float], np.ndarray]


def _check_dim(d: int) -> None:
    if d < 2:
        raise DomainError(f"次元は2以上である必要があります: d = {d}")


def rotation_theta(theta: ArrayLike, d: int) -> np.ndarray:
    """
    回転行列 R_θ

    θ_i は (e_1, e_{d+1−i}) 平面の回転。R_θ = G_1(θ_1)···G_{d−2}(θ_{d−2})。

    Args:
        theta: 長さ d−2 の角度列
        d: 次元

    Returns:
        d×d 直交行列
    """
    _check_dim(d)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != max(d - 2, 0):
        raise DomainError(f"θ の長さは {d - 2} である必要があります")
    result = np.eye(d)
    for i, t in enumerate(theta, start=1):
        axis = d - i
        g = np.eye(d)
        c, s = math.cos(t), math.sin(t)
        g[0, 0], g[0, axis], g[axis, 0], g[axis, axis] = c, -s, s, c
        result = result @ g
    return result


def rotation_phi(phi: float, d: int) -> np.ndarray:
    """回転行列 R_φ（(e_1, e_2) 平面）"""
    _check_dim(d)
    r = np.eye(d)
    c, s = math.cos(phi), math.sin(phi)
    r[0, 0], r[0, 1], r[1, 0], r[1, 1] = c, s, -s, c
    return r


def direction_vector(theta: ArrayLike, phi: float, d: int) -> np.ndarray:
    """η(θ, φ) = R_φ^T R_θ^T e_d を成分公式で計算"""
    _check_dim(d)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    eta = np.zeros(d)
    if d == 2:
        eta[0], eta[1] = -math.sin(phi), math.cos(phi)
        return eta
    a = math.sin(theta[0])
    eta[d - 1] = math.cos(theta[0])
    for i in range(2, d - 1):
        eta[d - i] = -math.sin(theta[i - 1]) * a
        a *= math.cos(theta[i - 1])
    eta[0] = math.cos(phi) * a
    eta[1] = math.sin(phi) * a
    return eta


def direction_from_angles(angles: AngleSet, d: int) -> Direction:
    """
    角度から方向ベクトルを生成

    Args:
        angles: 角度 (θ_1, …, θ_{d−2}, φ)
        d: 次元（d = 2 のとき θ は空で η = R_φ^T e_2）

    Returns:
        単位ベクトル

    Raises:
        DomainError: d < 2 または θ の長さが不正な場合
    """
    _check_dim(d)
    if len(angles.theta) != d - 2:
        raise DomainError(f"θ の長さは {d - 2} である必要があります: {len(angles.theta)}")
    eta = direction_vector(angles.theta, angles.phi, d)
    # 丸め誤差を除去して単位ノルムを保証
    eta = eta / np.linalg.norm(eta)
    return Direction(coords=tuple(float(c) for c in eta))


def _canonical_phi(phi: float) -> float:
    phi = phi % (2 * math.pi)
    return 0.0 if phi >= 2 * math.pi else phi


def angles_from_direction(e: Direction) -> AngleSet:
    """
    方向ベクトルから角度を復元（direction_from_angles の逆写像）

    極 ±e_d では θ_2 以降と φ を0とする。φ は [0, 2π) に正規化する。
    """
    y = e.as_array()
    d = y.size
    if d == 2:
        return AngleSet(theta=(), phi=_canonical_phi(math.atan2(-y[0], y[1])))

    transverse = float(np.linalg.norm(y[: d - 1]))
    theta1 = math.atan2(transverse, y[d - 1])
    if transverse == 0.0:
        return AngleSet(theta=(theta1,) + (0.0,) * (d - 3), phi=0.0)

    theta = [theta1]
    for i in range(2, d - 1):
        theta.append(math.atan2(-y[d - i], float(np.linalg.norm(y[: d - i]))))
    phi = _canonical_phi(math.atan2(y[1], y[0]))
    return AngleSet(theta=tuple(theta), phi=phi)


def sphere_distance(v: Direction, w: Direction) -> float:
    """
    球面距離 d_𝕊(v, w) = arccos⟨v, w⟩

    Raises:
        DomainError: 次元が一致しない場合
    """
    if v.dim != w.dim:
        raise DomainError(f"次元が一致しません: {v.dim} != {w.dim}")
    inner = float(np.dot(v.as_array(), w.as_array()))
    return math.acos(min(1.0, max(-1.0, inner)))


def project_angle(theta: float) -> float:
    """角度を [−π/2, π/2) に射影（π を法として合同な唯一の値）"""
    half = math.pi / 2
    if -half <= theta < half:
        return theta
    value = (theta + half) % math.pi - half
    # 浮動小数点の剰余で右端に落ちた場合
    return -half if value >= half else value


def project_angle_array(theta: np.ndarray) -> np.ndarray:
    """project_angle の配列版"""
    theta = np.asarray(theta, dtype=float)
    half = np.pi / 2
    inside = (theta >= -half) & (theta < half)
    wrapped = np.mod(theta + half, np.pi) - half
    wrapped = np.where(wrapped >= half, -half, wrapped)
    return np.where(inside, theta, wrapped)


def gnomonic(x: ArrayLike) -> np.ndarray:
    """
    心射投影 x ↦ x / [x]_d

    Raises:
        DomainError: [x]_d = 0 の場合
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("長さ2以上のベクトルが必要です")
    if x[-1] == 0:
        raise DomainError("最終成分が0のベクトルは心射投影できません")
    return x / x[-1]


def push_into_cap(w: ArrayLike, c: float) -> np.ndarray:
    """
    [w]_d < c の単位ベクトルを球冠 {[x]_d ≥ c} へ移す

    返り値 w̃ は [w̃]_d ≥ c を満たし、球冠内のすべての v について |w̃ − v| ≤ |w − v|。

    Args:
        w: 単位ベクトル
        c: 球冠の高さ (0, 1]

    Returns:
        球冠内の単位ベクトル
    """
    if not (0 < c <= 1):
        raise DomainError(f"c は (0, 1] に含まれる必要があります: {c}")
    w = np.asarray(w, dtype=float).copy()
    if w[-1] >= c:
        return w
    if w[-1] <= -c:
        w[-1] = -w[-1]
        return w
    transverse = w[:-1]
    norm = float(np.linalg.norm(transverse))
    result = np.zeros_like(w)
    result[:-1] = math.sqrt(1 - c * c) * transverse / norm
    result[-1] = c
    return result
