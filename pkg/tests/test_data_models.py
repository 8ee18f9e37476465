"""
データモデルのユニットテスト

PhasePoint, ShearletIndex, SamplingData, FrameSpec, SampledVolume,
CoefficientSet, MoleculeOrder, PhantomSpec のテスト
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.schemas.data_models import (
    CoefficientSet,
    Direction,
    FrameSpec,
    GramianRow,
    GramianTable,
    MoleculeOrder,
    PhantomSpec,
    PhasePoint,
    SampledVolume,
    SamplingData,
    ShearletIndex,
    SmoothPart,
)


class TestPhasePoint:
    """PhasePointモデルのテスト"""

    def test_phase_point_creation(self):
        """有効なPhasePointを作成"""
        point = PhasePoint(s=4.0, e=(0.0, 0.0, 1.0), x=(0.1, 0.2, 0.3))
        assert point.dim == 3

    def test_non_positive_scale(self):
        """s ≤ 0 でバリデーションエラー"""
        with pytest.raises(ValidationError):
            PhasePoint(s=0.0, e=(1.0, 0.0), x=(0.0, 0.0))

    def test_non_unit_direction(self):
        """単位ベクトルでない方向でバリデーションエラー"""
        with pytest.raises(ValidationError):
            PhasePoint(s=1.0, e=(1.0, 1.0), x=(0.0, 0.0))

    def test_dimension_mismatch(self):
        """方向と位置の次元が異なるとバリデーションエラー"""
        with pytest.raises(ValidationError):
            PhasePoint(s=1.0, e=(1.0, 0.0), x=(0.0, 0.0, 0.0))

    def test_direction_tolerance(self):
        """ノルムの許容差 1e-10 以内なら受理"""
        Direction(coords=(1.0 + 1e-12, 0.0, 0.0))


class TestShearletIndex:
    """ShearletIndexモデルのテスト"""

    def test_index_creation(self):
        """有効なインデックスを作成"""
        idx = ShearletIndex(epsilon=1, j=2, ell=(1, -3), k=(0, 1, 2))
        assert idx.dim == 3
        assert idx.window_key() == (1, 2, (1, -3))

    def test_epsilon_out_of_range(self):
        """ε > d でバリデーションエラー"""
        with pytest.raises(ValidationError):
            ShearletIndex(epsilon=4, j=0, ell=(0, 0), k=(0, 0, 0))

    def test_coarse_index_requires_zero_scale(self):
        """ε = 0 では j = 0 かつ ℓ = 0"""
        with pytest.raises(ValidationError):
            ShearletIndex(epsilon=0, j=1, ell=(0, 0), k=(0, 0, 0))

    def test_shear_length(self):
        """ℓ の長さは d − 1"""
        with pytest.raises(ValidationError):
            ShearletIndex(epsilon=1, j=0, ell=(0,), k=(0, 0, 0))

    def test_lexicographic_order(self):
        """(ε, j, ℓ, k) の辞書式順序"""
        a = ShearletIndex(epsilon=1, j=1, ell=(0, 0), k=(5, 5, 5))
        b = ShearletIndex(epsilon=1, j=2, ell=(-2, 0), k=(0, 0, 0))
        assert a.sort_key() < b.sort_key()


class TestSamplingData:
    """SamplingDataモデルのテスト"""

    def test_sh_default(self):
        """SHのサンプリングデータ: η_j = 2^{−j}, L_j = 2^j"""
        data = SamplingData.sh_default()
        assert data.dim == 3
        assert data.eta(3) == pytest.approx(1 / 8)
        assert data.shear_extent(3) == 8

    def test_tau_out_of_range(self):
        """τ が [τ_min, τ_max] の外ならバリデーションエラー"""
        with pytest.raises(ValidationError):
            SamplingData(tau=(1e-6, 1.0, 1.0))

    def test_sigma_must_exceed_one(self):
        """σ ≤ 1 でバリデーションエラー"""
        with pytest.raises(ValidationError):
            SamplingData(sigma=1.0)

    def test_with_tau(self):
        """τ だけを差し替えたコピー"""
        data = SamplingData.sh_default().with_tau((0.5, 0.5, 0.5))
        assert data.tau == (0.5, 0.5, 0.5)
        assert data.sigma == 4.0


class TestFrameSpec:
    """FrameSpecモデルのテスト"""

    def test_default_freq_scale(self):
        """既定の freq_scale = 2^{2J−1}/n"""
        spec = FrameSpec(n=64, J=2)
        assert spec.xi_step == pytest.approx(8 / 64)
        assert spec.shape == (64, 64, 64)

    def test_not_power_of_two(self):
        """2の冪でない n でバリデーションエラー"""
        with pytest.raises(ValidationError):
            FrameSpec(n=48, J=1)

    def test_band_overflow(self):
        """J > ½log₂n − 1 でバリデーションエラー"""
        with pytest.raises(ValidationError):
            FrameSpec(n=16, J=2)

    def test_cache_token_distinguishes_specs(self):
        """仕様が異なればキャッシュキーも異なる"""
        assert FrameSpec(n=16, J=1).cache_token() != FrameSpec(n=32, J=1).cache_token()


class TestSampledVolume:
    """SampledVolumeモデルのテスト"""

    def test_integer_data_is_cast(self):
        """整数データは浮動小数点に変換"""
        volume = SampledVolume(data=np.ones((2, 2), dtype=int))
        assert volume.is_real
        assert volume.norm2() == pytest.approx(4.0)

    def test_origin_dimension(self):
        """origin の次元不一致でバリデーションエラー"""
        with pytest.raises(ValidationError):
            SampledVolume(data=np.zeros((2, 2)), origin=(0.0,))

    def test_centered_coordinates(self):
        """origin が無ければ中心が0"""
        volume = SampledVolume(data=np.zeros(4), spacing=0.5)
        np.testing.assert_allclose(volume.axis_coordinates()[0], [-1.0, -0.5, 0.0, 0.5])


class TestCoefficientSet:
    """CoefficientSetモデルのテスト"""

    @pytest.fixture
    def spec(self):
        return FrameSpec(n=16, J=0)

    def test_dense_to_sparse(self, spec):
        """密表現から疎表現への変換でエネルギーが保たれる"""
        dense = np.zeros((2, 16, 16, 16))
        dense[1, 0, 0, 3] = 2.0
        coefficients = CoefficientSet(spec=spec, windows=[(0, 0, (0, 0)), (1, 0, (0, 0))], dense=dense)
        sparse = coefficients.to_sparse()
        assert sparse.count == 2 * 16 ** 3
        assert sparse.energy() == pytest.approx(4.0)

    def test_entries(self, spec):
        """疎表現のエントリは ShearletIndex に展開される"""
        coefficients = CoefficientSet(
            spec=spec,
            windows=[(2, 0, (0, 1))],
            window_ids=np.array([0]),
            flat_k=np.array([16 * 16 + 2]),
            values=np.array([1.5]),
        )
        (idx, value), = list(coefficients.entries())
        assert idx == ShearletIndex(epsilon=2, j=0, ell=(0, 1), k=(1, 0, 2))
        assert value == 1.5

    def test_missing_layout(self, spec):
        """密・疎のどちらも無ければバリデーションエラー"""
        with pytest.raises(ValidationError):
            CoefficientSet(spec=spec, windows=[])


class TestMoleculeOrder:
    """MoleculeOrderモデルのテスト"""

    def test_infinite_order(self):
        """"inf" は math.inf として扱う"""
        order = MoleculeOrder.infinite()
        assert not order.is_finite
        assert order.value("L") == math.inf

    def test_negative_component(self):
        """負の成分でバリデーションエラー"""
        with pytest.raises(ValidationError):
            MoleculeOrder(L=-1)


class TestPhantomSpec:
    """PhantomSpecモデルのテスト"""

    def _parts(self):
        return (SmoothPart(kind="bump", amplitude=0.02), SmoothPart(kind="bump", amplitude=-0.03))

    def test_valid_spec(self):
        """曲率上限を満たす楕円体"""
        spec = PhantomSpec(
            d=3, nu=10.0, center=(0.5, 0.5, 0.5), semi_axes=(0.2, 0.25, 0.3), smooth_parts=self._parts()
        )
        assert spec.max_curvature == pytest.approx(0.3 / 0.04)

    def test_curvature_too_large(self):
        """最大主曲率が ν を超えるとバリデーションエラー"""
        with pytest.raises(ValidationError):
            PhantomSpec(
                d=3, nu=2.0, center=(0.5, 0.5, 0.5), semi_axes=(0.2, 0.25, 0.3), smooth_parts=self._parts()
            )

    def test_outside_unit_cube(self):
        """楕円体が [0,1]^d からはみ出すとバリデーションエラー"""
        with pytest.raises(ValidationError):
            PhantomSpec(d=2, nu=10.0, center=(0.1, 0.5), semi_axes=(0.2, 0.2), smooth_parts=self._parts())


class TestGramianTable:
    """GramianTableのテスト"""

    def test_sorted_and_scaled(self):
        """ソートとスカラー倍"""
        a = ShearletIndex(epsilon=1, j=0, ell=(0, 0), k=(0, 0, 0))
        b = ShearletIndex(epsilon=0, j=0, ell=(0, 0), k=(0, 0, 0))
        table = GramianTable(rows=[
            GramianRow(index_a=a, index_b=a, re=1.0, omega=1.0),
            GramianRow(index_a=b, index_b=a, re=2.0, im=1.0, omega=3.0),
        ])
        ordered = table.sorted()
        assert ordered.rows[0].index_a == b
        np.testing.assert_allclose(ordered.scaled(2.0).values(), [4.0 + 2.0j, 2.0])
