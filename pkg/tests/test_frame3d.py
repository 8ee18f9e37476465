"""
3次元シアレットフレームのユニットテスト

インデックス集合、窓の評価、タイトネス、連続性、解析・合成、内積のテスト
"""

import numpy as np
import pytest

from src.molecules.parametrization import shear
from src.schemas.data_models import FrameSpec, SampledVolume, ShearletIndex
from src.shearlets.frame3d import (
    COARSE_KEY,
    analysis,
    atom_transform,
    check_continuity,
    check_tight,
    coefficient_at,
    digital_atom,
    digital_correlation,
    digital_inner_product,
    digital_window,
    index_set,
    inner_product,
    is_boundary,
    lattice_size,
    lattice_strides,
    quadrature_steps,
    support_boxes,
    synthesis,
    window_eval,
    window_piece,
    window_pieces,
)
from src.utils.errors import DomainError, InvalidIndexError


@pytest.fixture
def small_spec():
    """n=16, J=1 のフレーム仕様"""
    return FrameSpec(n=16, J=1)


@pytest.fixture
def random_volume(small_spec):
    """乱数ボリューム（格子全体が帯域に含まれる）"""
    rng = np.random.default_rng(0)
    return SampledVolume(data=rng.standard_normal(small_spec.shape))


def _idx(eps, j, ell, k=(0, 0, 0)):
    return ShearletIndex(epsilon=eps, j=j, ell=tuple(ell), k=tuple(k))


class TestIndexSet:
    """インデックス集合のテスト"""

    def test_counts(self):
        """J=0: 14窓、J=1: 63窓"""
        assert len(index_set(0)) == 1 + 7 + 3 + 3
        assert len(index_set(1)) == 14 + 19 + 15 + 15

    def test_coarse_first_and_sorted(self):
        """先頭は粗スケール、辞書式順序"""
        keys = index_set(1)
        assert keys[0] == COARSE_KEY
        assert keys == sorted(keys)

    def test_exclude_boundary(self):
        """境界を除くと |ℓ_1| = 2^j の窓が無い"""
        keys = index_set(1, include_boundary=False)
        assert not any(is_boundary(key) for key in keys)
        assert len(keys) < len(index_set(1))

    def test_negative_scale(self):
        """J < 0 でエラー"""
        with pytest.raises(DomainError):
            index_set(-1)


class TestWindows:
    """窓の評価のテスト"""

    def test_coarse_window(self):
        """粗スケール窓 Φ̂(0) = 1"""
        assert window_eval(0, 0, (0, 0), np.zeros(3)) == 1.0

    def test_interior_window_on_axis(self):
        """ξ = (0, 0, 0.2) で (3, 0, (0,0)) の窓は1"""
        assert window_eval(3, 0, (0, 0), np.array([0.0, 0.0, 0.2])) == pytest.approx(1.0)
        assert window_eval(1, 0, (0, 0), np.array([0.0, 0.0, 0.2])) == 0.0

    def test_even_window(self):
        """窓は偶関数"""
        xi = np.random.default_rng(1).uniform(-2.0, 2.0, size=(200, 3))
        for key in index_set(1):
            np.testing.assert_allclose(window_eval(*key, xi), window_eval(*key, -xi), atol=1e-15)

    def test_invalid_window(self):
        """Λ_SH に属さない窓でエラー"""
        with pytest.raises(InvalidIndexError):
            window_eval(2, 0, (0, 1), np.zeros(3))

    def test_corner_pieces(self):
        """ε = 1 の角は3つのピラミッドに区分を持つ"""
        assert window_pieces(1, 0, (1, 1)) == [(1, (1, 1)), (2, (1, 1)), (3, (1, 1))]
        assert window_pieces(2, 1, (-2, 1)) == [(2, (-2, 1)), (3, (-1, -2))]
        assert window_pieces(3, 1, (0, 1)) == [(3, (0, 1))]

    def test_piece_outside_pyramids(self):
        """区分を持たないピラミッドでは0"""
        assert window_piece(3, 0, (0, 0), np.array([0.0, 0.0, 0.2]), 1) == 0.0

    def test_digital_window_cached(self, small_spec):
        """同じキーのデジタル窓は同じ配列"""
        key = (2, 1, (1, 0))
        assert digital_window(small_spec, key) is digital_window(small_spec, key)
        assert digital_window(small_spec, key).shape == small_spec.shape


class TestTightness:
    """タイトネス検査のテスト"""

    @pytest.mark.parametrize("n, J", [(16, 0), (16, 1), (32, 1)])
    def test_tight(self, n, J):
        """Σ 窓² が望遠鏡和の目標と一致"""
        report = check_tight(FrameSpec(n=n, J=J))
        assert report.max_dev <= 1e-10
        assert report.grid_report.points == n ** 3
        assert report.grid_report.min_total == pytest.approx(1.0, abs=1e-10)

    def test_without_boundary_atoms(self, small_spec):
        """境界原子を除くと境界で分割が崩れる"""
        report = check_tight(small_spec, include_boundary=False)
        assert report.max_dev >= 0.5

    @pytest.mark.slow
    def test_tight_64(self):
        """n=64, J=2 で max_dev ≤ 1e-10"""
        assert check_tight(FrameSpec(n=64, J=2)).max_dev <= 1e-10


class TestContinuity:
    """境界での連続性のテスト"""

    @pytest.mark.parametrize("J", [0, 1, 2])
    def test_two_sided_evaluation(self, J):
        """ピラミッド境界で両側の区分式が一致"""
        report = check_continuity(J, points=32)
        assert report.max_gap <= 1e-12
        assert report.windows_checked == len(index_set(J)) - 1


class TestTransforms:
    """解析・合成変換のテスト"""

    def test_energy_identity(self, small_spec, random_volume):
        """‖analysis(f)‖² = ‖f‖²"""
        coefficients = analysis(random_volume, small_spec)
        assert coefficients.energy() == pytest.approx(random_volume.norm2(), rel=1e-8)
        assert coefficients.total_energy == pytest.approx(coefficients.energy())

    def test_real_input_gives_real_coefficients(self, small_spec, random_volume):
        """実数入力の係数は実数"""
        coefficients = analysis(random_volume, small_spec)
        assert coefficients.dense.dtype == float

    def test_reconstruction(self, small_spec, random_volume):
        """synthesis ∘ analysis = 恒等"""
        restored = synthesis(analysis(random_volume, small_spec), small_spec)
        error = np.linalg.norm(restored.data - random_volume.data) / np.linalg.norm(random_volume.data)
        assert error <= 1e-8

    def test_complex_reconstruction(self, small_spec):
        """複素数入力も再構成できる"""
        rng = np.random.default_rng(3)
        data = rng.standard_normal(small_spec.shape) + 1j * rng.standard_normal(small_spec.shape)
        volume = SampledVolume(data=data)
        restored = synthesis(analysis(volume, small_spec), small_spec)
        np.testing.assert_allclose(restored.data, data, atol=1e-8)

    def test_keep_top_coefficients(self, small_spec, random_volume):
        """keep 指定時は大きさ上位の係数を降順に保持"""
        dense = analysis(random_volume, small_spec)
        top = analysis(random_volume, small_spec, keep=50)
        assert top.count == 50
        assert top.truncated
        expected = np.sort(dense.magnitudes())[::-1][:50]
        np.testing.assert_allclose(np.abs(top.values), expected)
        assert top.total_energy == pytest.approx(dense.total_energy)

    def test_truncated_synthesis_error_bound(self, small_spec, random_volume):
        """上位N個の合成誤差² ≤ 捨てた係数のエネルギー"""
        top = analysis(random_volume, small_spec, keep=500)
        restored = synthesis(top, small_spec)
        err2 = float(np.sum((restored.data - random_volume.data) ** 2))
        discarded = top.total_energy - top.energy()
        assert err2 <= discarded + 1e-8 * random_volume.norm2()

    def test_empty_keep(self, small_spec, random_volume):
        """keep=0 ではゼロボリュームを合成"""
        top = analysis(random_volume, small_spec, keep=0)
        assert top.count == 0
        np.testing.assert_array_equal(synthesis(top, small_spec).data, 0.0)

    def test_shape_mismatch(self, small_spec):
        """形状が一致しなければエラー"""
        with pytest.raises(DomainError):
            analysis(SampledVolume(data=np.zeros((8, 8, 8))), small_spec)

    def test_frequency_domain_rejected(self, small_spec):
        """周波数領域のボリュームは解析できない"""
        with pytest.raises(DomainError):
            analysis(SampledVolume(data=np.zeros(small_spec.shape), domain="frequency"), small_spec)

    @pytest.mark.slow
    def test_reconstruction_64(self):
        """n=64, J=2 の5つの乱数ボリュームで再構成"""
        spec = FrameSpec(n=64, J=2)
        rng = np.random.default_rng(11)
        for _ in range(5):
            volume = SampledVolume(data=rng.standard_normal(spec.shape))
            restored = synthesis(analysis(volume, spec), spec)
            error = np.linalg.norm(restored.data - volume.data) / np.linalg.norm(volume.data)
            assert error <= 1e-8


class TestDecimatedLattice:
    """窓ごとの間引き格子のテスト"""

    def test_strides_avoid_overlap(self, small_spec):
        """間引き幅 s の周期 n/s だけずらした窓は元の窓と重ならない"""
        n = small_spec.n
        for key in index_set(small_spec.J):
            w = digital_window(small_spec, key)
            strides = lattice_strides(small_spec, key)
            for axis, s in enumerate(strides):
                assert s >= 1 and n % s == 0 and s & (s - 1) == 0
                if s > 1:
                    assert not np.any((w > 0) & (np.roll(w, n // s, axis=axis) > 0))

    def test_coarse_window_is_decimated(self):
        """粗い窓は全軸で間引かれ、係数の総数は全格子より少ない"""
        spec = FrameSpec(n=64, J=2)
        assert min(lattice_strides(spec, COARSE_KEY)) >= 4
        assert lattice_size(spec, "decimated") < lattice_size(spec, "full")
        assert lattice_size(spec, "full") == len(index_set(2)) * 64 ** 3

    def test_energy_identity(self, small_spec, random_volume):
        """間引き係数のエネルギーも ‖f‖²"""
        coefficients = analysis(random_volume, small_spec, lattice="decimated")
        assert coefficients.dense is None
        assert coefficients.lattice == "decimated"
        assert coefficients.count == lattice_size(small_spec, "decimated")
        assert coefficients.energy() == pytest.approx(random_volume.norm2(), rel=1e-8)

    def test_reconstruction(self, small_spec, random_volume):
        """間引き係数の合成で厳密に戻る"""
        restored = synthesis(analysis(random_volume, small_spec, lattice="decimated"), small_spec)
        error = np.linalg.norm(restored.data - random_volume.data) / np.linalg.norm(random_volume.data)
        assert error <= 1e-8

    def test_keep_top_coefficients(self, small_spec, random_volume):
        """keep 指定時は間引き係数の上位を保持"""
        every = analysis(random_volume, small_spec, lattice="decimated")
        top = analysis(random_volume, small_spec, keep=40, lattice="decimated")
        assert top.count == 40
        assert top.truncated
        expected = np.sort(every.magnitudes())[::-1][:40]
        np.testing.assert_allclose(np.abs(top.values), expected)

    def test_truncated_synthesis_error_bound(self, small_spec, random_volume):
        """上位N個の合成誤差² ≤ 捨てた係数のエネルギー"""
        top = analysis(random_volume, small_spec, keep=300, lattice="decimated")
        restored = synthesis(top, small_spec)
        err2 = float(np.sum((restored.data - random_volume.data) ** 2))
        assert err2 <= top.total_energy - top.energy() + 1e-8 * random_volume.norm2()

    def test_unknown_lattice(self, small_spec, random_volume):
        """不明な格子はエラー"""
        with pytest.raises(DomainError):
            analysis(random_volume, small_spec, lattice="hexagonal")
        with pytest.raises(DomainError):
            lattice_size(small_spec, "hexagonal")


class TestDigitalAtoms:
    """デジタル原子と内積のテスト"""

    def test_coefficient_is_inner_product(self, small_spec):
        """原子の解析係数はデジタル内積"""
        a = _idx(2, 1, (1, 0), (3, 1, 4))
        b = _idx(2, 1, (2, 0), (2, 2, 5))
        coefficients = analysis(digital_atom(small_spec, a), small_spec)
        assert coefficient_at(coefficients, b) == pytest.approx(digital_inner_product(a, b, small_spec), abs=1e-12)

    def test_correlation_table(self, small_spec):
        """相関表の Δ 成分がデジタル内積と一致"""
        key_a, key_b = (1, 1, (0, 1)), (1, 1, (1, 1))
        table = digital_correlation(key_a, key_b, small_spec)
        for delta in [(0, 0, 0), (1, 0, 0), (3, -2, 5)]:
            a = _idx(*key_a, delta)
            b = _idx(*key_b)
            expected = digital_inner_product(a, b, small_spec)
            assert table[tuple(d % small_spec.n for d in delta)] == pytest.approx(expected, abs=1e-12)

    def test_disjoint_digital_windows(self, small_spec):
        """台が交わらない窓の内積は0"""
        assert digital_inner_product(_idx(0, 0, (0, 0)), _idx(3, 1, (0, 0)), small_spec) == 0.0


class TestInnerProduct:
    """連続原子の内積のテスト"""

    def test_atom_transform(self):
        """振幅: j=0 は1、内部 2^{−2j}、境界 2^{−2j−3}"""
        amp, matrix = atom_transform((3, 0, (0, 0)))
        assert amp == 1.0
        np.testing.assert_array_equal(matrix, np.eye(3))

        amp, base = atom_transform((3, 1, (0, 0)))
        assert amp == pytest.approx(1 / 4)
        np.testing.assert_allclose(base, np.diag([0.5, 0.5, 0.25]))

        _, sheared = atom_transform((3, 1, (1, 0)))
        np.testing.assert_allclose(sheared, shear([-1.0, 0.0], transposed=True) @ base)

        amp, boundary = atom_transform((3, 1, (2, 0)))
        assert amp == pytest.approx(1 / 32)
        np.testing.assert_allclose(boundary, 0.25 * shear([-2.0, 0.0], transposed=True) @ base)

    def test_support_boxes_cover_window(self):
        """台の箱の外では窓が0"""
        key = (2, 1, (1, 0))
        boxes = support_boxes(key)
        xi = np.random.default_rng(0).uniform(-2.0, 2.0, size=(5000, 3))
        values = window_eval(*key, xi)
        inside = np.zeros(len(xi), dtype=bool)
        for lo, hi in boxes.values():
            inside |= np.all((xi >= lo) & (xi <= hi), axis=1)
        assert np.all(values[~inside] == 0.0)

    def test_hermitian_symmetry(self, small_spec):
        """⟨a, b⟩ = conj⟨b, a⟩"""
        a = _idx(1, 1, (1, -1), (1, 0, 2))
        b = _idx(1, 1, (2, -1), (0, 3, -1))
        assert inner_product(a, b, small_spec) == pytest.approx(np.conj(inner_product(b, a, small_spec)), abs=1e-10)

    def test_disjoint_scales(self):
        """コロナが交わらないスケールの内積は0"""
        spec = FrameSpec(n=64, J=2)
        assert inner_product(_idx(3, 0, (0, 0)), _idx(3, 2, (0, 0)), spec) == 0.0
        assert inner_product(_idx(0, 0, (0, 0)), _idx(1, 1, (0, 0)), spec) == 0.0

    def test_translation_decay(self, small_spec):
        """平行移動差が大きいほど内積が小さい"""
        a = _idx(3, 1, (0, 0))
        values = [abs(inner_product(a, _idx(3, 1, (0, 0), (0, 0, t)), small_spec)) for t in range(0, 13, 2)]
        assert values[0] == max(values)
        assert max(values[4:]) < 0.2 * values[0]

    def test_translation_sweep_has_no_periodic_return(self):
        """平行移動差を 0..17 と動かしても内積は原点付近の大きさに戻らない"""
        spec = FrameSpec(n=64, J=2)
        a = _idx(3, 0, (0, 0))
        values = [abs(inner_product(a, _idx(3, 0, (0, 0), (t, 0, 0)), spec)) for t in range(18)]
        assert values[0] == max(values)
        assert values[16] < 0.1 * values[0]
        assert values[17] < values[1]

    def test_quadrature_step_follows_shift(self):
        """格子の周期 1/h は平行移動差と広がりを上回る"""
        spec = FrameSpec(n=64, J=2)
        boxes = [(np.array([0.0, 0.0, 0.0]), np.array([0.5, 0.5, 0.5]))]
        near = quadrature_steps(np.zeros(3), boxes, spec)
        far = quadrature_steps(np.array([40.0, 0.0, 0.0]), boxes, spec)
        assert np.all(1.0 / near >= 2 * 32.0 / 0.5 - 1e-9)
        assert 1.0 / far[0] > 2 * 40.0
        assert far[0] < near[0]
        assert far[1] == near[1]
        assert np.all(near <= spec.xi_step / 2)

    def test_scale_beyond_spec(self, small_spec):
        """J を超えるスケールでエラー"""
        with pytest.raises(InvalidIndexError):
            inner_product(_idx(3, 2, (0, 0)), _idx(3, 2, (0, 0)), small_spec)
