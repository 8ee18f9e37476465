"""
球面幾何のユニットテスト

角度表現、回転行列、射影角、心射投影のテスト
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.molecules.geometry import (
    angles_from_direction,
    direction_from_angles,
    gnomonic,
    project_angle,
    project_angle_array,
    push_into_cap,
    rotation_phi,
    rotation_theta,
    sphere_distance,
)
from src.schemas.data_models import AngleSet, Direction
from src.utils.errors import DomainError


def _unit(v) -> Direction:
    v = np.asarray(v, dtype=float)
    return Direction(coords=tuple(float(c) for c in v / np.linalg.norm(v)))


class TestDirectionFromAngles:
    """direction_from_angles のテスト"""

    def test_zero_theta_gives_pole(self):
        """θ = 0 なら φ に関係なく e_d"""
        for d in (3, 4, 5):
            e = direction_from_angles(AngleSet(theta=(0.0,) * (d - 2), phi=1.3), d)
            expected = np.zeros(d)
            expected[-1] = 1.0
            np.testing.assert_allclose(e.as_array(), expected, atol=1e-15)

    def test_equator_phi_zero(self):
        """d=3, θ=(π/2), φ=0 → (1, 0, 0)"""
        e = direction_from_angles(AngleSet(theta=(math.pi / 2,), phi=0.0), 3)
        np.testing.assert_allclose(e.as_array(), [1.0, 0.0, 0.0], atol=1e-15)

    def test_equator_phi_half_pi(self):
        """d=3, θ=(π/2), φ=π/2 → (0, 1, 0)"""
        e = direction_from_angles(AngleSet(theta=(math.pi / 2,), phi=math.pi / 2), 3)
        np.testing.assert_allclose(e.as_array(), [0.0, 1.0, 0.0], atol=1e-15)

    def test_matches_rotation_formula(self):
        """成分公式が R_φ^T R_θ^T e_d と一致"""
        d = 4
        theta, phi = (0.7, -0.4), 2.1
        e = direction_from_angles(AngleSet(theta=theta, phi=phi), d)
        e_d = np.zeros(d)
        e_d[-1] = 1.0
        expected = rotation_phi(phi, d).T @ rotation_theta(theta, d).T @ e_d
        np.testing.assert_allclose(e.as_array(), expected, atol=1e-12)

    def test_planar_case(self):
        """d = 2 では θ は空"""
        e = direction_from_angles(AngleSet(theta=(), phi=0.0), 2)
        np.testing.assert_allclose(e.as_array(), [0.0, 1.0], atol=1e-15)

    def test_invalid_dimension(self):
        """d < 2 でエラー"""
        with pytest.raises(DomainError):
            direction_from_angles(AngleSet(theta=(), phi=0.0), 1)

    def test_theta_length_mismatch(self):
        """θ の長さが d − 2 でなければエラー"""
        with pytest.raises(DomainError):
            direction_from_angles(AngleSet(theta=(0.1, 0.2), phi=0.0), 3)


class TestAnglesFromDirection:
    """angles_from_direction のテスト"""

    def test_pole_convention(self):
        """e_d → θ = 0, φ = 0"""
        angles = angles_from_direction(Direction(coords=(0.0, 0.0, 1.0)))
        assert angles.theta == (0.0,)
        assert angles.phi == 0.0

    def test_first_axis(self):
        """(1, 0, 0) → θ = (π/2), φ = 0"""
        angles = angles_from_direction(Direction(coords=(1.0, 0.0, 0.0)))
        assert angles.theta[0] == pytest.approx(math.pi / 2)
        assert angles.phi == 0.0

    @pytest.mark.parametrize("d", [2, 3, 4, 6])
    def test_round_trip_random(self, d):
        """1000個のランダムな単位ベクトルで往復が恒等"""
        rng = np.random.default_rng(d)
        for v in rng.standard_normal((1000, d)):
            e = _unit(v)
            back = direction_from_angles(angles_from_direction(e), d)
            np.testing.assert_allclose(back.as_array(), e.as_array(), atol=1e-10)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=3, max_size=3))
    def test_round_trip_property(self, coords):
        """任意の方向で往復が恒等"""
        v = np.asarray(coords)
        if np.linalg.norm(v) < 1e-3:
            return
        e = _unit(v)
        back = direction_from_angles(angles_from_direction(e), 3)
        np.testing.assert_allclose(back.as_array(), e.as_array(), atol=1e-10)

    def test_angle_ranges(self):
        """復元した角度は範囲内"""
        rng = np.random.default_rng(1)
        for v in rng.standard_normal((200, 5)):
            angles = angles_from_direction(_unit(v))
            assert 0.0 <= angles.theta[0] <= math.pi
            assert all(-math.pi / 2 <= t <= math.pi / 2 for t in angles.theta[1:])
            assert 0.0 <= angles.phi < 2 * math.pi


class TestSphereDistance:
    """sphere_distance のテスト"""

    def test_same_vector(self):
        """(v, v) → 0"""
        v = _unit([1.0, 2.0, 3.0])
        assert sphere_distance(v, v) == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal(self):
        """(e_1, e_2) → π/2"""
        assert sphere_distance(Direction(coords=(1.0, 0.0)), Direction(coords=(0.0, 1.0))) == pytest.approx(math.pi / 2)

    def test_antipodal(self):
        """対蹠点 → π"""
        assert sphere_distance(Direction(coords=(1.0, 0.0)), Direction(coords=(-1.0, 0.0))) == pytest.approx(math.pi)

    def test_dimension_mismatch(self):
        """次元不一致でエラー"""
        with pytest.raises(DomainError):
            sphere_distance(Direction(coords=(1.0, 0.0)), Direction(coords=(1.0, 0.0, 0.0)))


class TestProjectAngle:
    """project_angle のテスト"""

    @pytest.mark.parametrize("theta, expected", [
        (0.0, 0.0),
        (math.pi / 2, -math.pi / 2),
        (math.pi, 0.0),
        (-math.pi / 2, -math.pi / 2),
        (3 * math.pi / 4, -math.pi / 4),
    ])
    def test_values(self, theta, expected):
        """代表値"""
        assert project_angle(theta) == pytest.approx(expected, abs=1e-12)

    def test_comparable_to_sine(self):
        """(2/π)|{θ}| ≤ |sin θ| ≤ |{θ}|"""
        theta = np.linspace(-10.0, 10.0, 2001)
        projected = project_angle_array(theta)
        sine = np.abs(np.sin(theta))
        assert np.all(2 / np.pi * np.abs(projected) <= sine + 1e-12)
        assert np.all(sine <= np.abs(projected) + 1e-12)

    def test_array_matches_scalar(self):
        """配列版とスカラー版が一致"""
        theta = np.linspace(-7.0, 7.0, 101)
        expected = [project_angle(t) for t in theta]
        np.testing.assert_allclose(project_angle_array(theta), expected, atol=1e-12)


class TestGnomonic:
    """心射投影のテスト"""

    def test_projection(self):
        """x / [x]_d"""
        np.testing.assert_allclose(gnomonic([2.0, 4.0, 2.0]), [1.0, 2.0, 1.0])

    def test_zero_last_component(self):
        """[x]_d = 0 でエラー"""
        with pytest.raises(DomainError):
            gnomonic([1.0, 0.0, 0.0])

    def test_equivalence_on_cap(self):
        """球冠上で心射投影の距離と球面上の距離が同値"""
        rng = np.random.default_rng(0)
        c = 0.5
        ratios = []
        for _ in range(500):
            a, b = rng.standard_normal((2, 3))
            a[-1], b[-1] = abs(a[-1]) + 1.0, abs(b[-1]) + 1.0
            a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
            if a[-1] < c or b[-1] < c:
                continue
            ratios.append(np.linalg.norm(gnomonic(a) - gnomonic(b)) / np.linalg.norm(a - b))
        ratios = np.asarray(ratios)
        assert ratios.min() >= 1.0 - 1e-12
        assert ratios.max() <= (math.pi / 2) / c ** 2


class TestPushIntoCap:
    """push_into_cap のテスト"""

    def test_inside_cap_unchanged(self):
        """球冠内のベクトルは不変"""
        w = np.array([0.0, 0.6, 0.8])
        np.testing.assert_allclose(push_into_cap(w, 0.5), w)

    def test_result_in_cap_and_closer(self):
        """結果は球冠内にあり、球冠内のどの点にも近づく"""
        rng = np.random.default_rng(3)
        c = 0.6
        caps = rng.standard_normal((200, 3))
        caps[:, -1] = np.abs(caps[:, -1]) + 2.0
        caps /= np.linalg.norm(caps, axis=1, keepdims=True)
        caps = caps[caps[:, -1] >= c]
        for w in rng.standard_normal((50, 3)):
            w /= np.linalg.norm(w)
            pushed = push_into_cap(w, c)
            assert pushed[-1] >= c - 1e-12
            assert np.linalg.norm(pushed) == pytest.approx(1.0)
            assert np.all(
                np.linalg.norm(caps - pushed, axis=1) <= np.linalg.norm(caps - w, axis=1) + 1e-12
            )

    def test_invalid_height(self):
        """c が (0, 1] 外ならエラー"""
        with pytest.raises(DomainError):
            push_into_cap([0.0, 0.0, 1.0], 0.0)
