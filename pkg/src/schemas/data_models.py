"""
データモデル定義

位相空間の点、シアレットインデックス、サンプリングデータ、フレーム仕様、
ボリューム、係数集合などのPydanticモデル
"""

import math
from typing import Iterator, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

UNIT_NORM_TOL = 1e-10

OrderValue = Union[int, Literal["inf"]]


def _unit_norm_check(coords: Tuple[float, ...], tol: float = UNIT_NORM_TOL) -> None:
    norm = math.sqrt(sum(c * c for c in coords))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"単位ベクトルではありません（ノルム {norm!r}）")


class Direction(BaseModel):
    """球面 𝕊^{d-1} 上の方向"""

    model_config = ConfigDict(frozen=True)

    coords: Tuple[float, ...] = Field(..., min_length=2, description="単位ベクトルの成分")

    @field_validator("coords")
    @classmethod
    def validate_unit(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        _unit_norm_check(v)
        return v

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


class AngleSet(BaseModel):
    """方向の角度表現 (θ_1, …, θ_{d-2}, φ)"""

    model_config = ConfigDict(frozen=True)

    theta: Tuple[float, ...] = Field(default=(), description="θ_1 ∈ [0,π], θ_i ∈ [−π/2,π/2]")
    phi: float = Field(default=0.0, ge=0.0, le=2 * math.pi, description="φ ∈ [0, 2π]")

    @field_validator("theta")
    @classmethod
    def validate_ranges(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if v and not (0.0 <= v[0] <= math.pi):
            raise ValueError(f"θ_1 は [0, π] に含まれる必要があります: {v[0]}")
        for i, t in enumerate(v[1:], start=2):
            if not (-math.pi / 2 <= t <= math.pi / 2):
                raise ValueError(f"θ_{i} は [−π/2, π/2] に含まれる必要があります: {t}")
        return v


class PhasePoint(BaseModel):
    """位相空間 ℙ_d = ℝ_+ × 𝕊^{d-1} × ℝ^d の点 (s, e, x)"""

    model_config = ConfigDict(frozen=True)

    s: float = Field(..., gt=0, description="スケール")
    e: Tuple[float, ...] = Field(..., min_length=2, description="方向（単位ベクトル）")
    x: Tuple[float, ...] = Field(..., min_length=2, description="位置")

    @model_validator(mode="after")
    def validate_point(self) -> "PhasePoint":
        _unit_norm_check(self.e)
        if len(self.e) != len(self.x):
            raise ValueError("方向と位置の次元が一致しません")
        return self

    @property
    def dim(self) -> int:
        return len(self.x)


class ShearletIndex(BaseModel):
    """シアレットインデックス (ε, j, ℓ, k)"""

    model_config = ConfigDict(frozen=True)

    epsilon: int = Field(..., ge=0, description="ピラミッド（0は粗スケール）")
    j: int = Field(..., ge=0, description="スケール")
    ell: Tuple[int, ...] = Field(..., description="シア（長さ d−1）")
    k: Tuple[int, ...] = Field(..., min_length=2, description="平行移動（長さ d）")

    @model_validator(mode="after")
    def validate_index(self) -> "ShearletIndex":
        d = len(self.k)
        if len(self.ell) != d - 1:
            raise ValueError(f"ℓ の長さは {d - 1} である必要があります")
        if self.epsilon > d:
            raise ValueError(f"ε は 0..{d} の範囲である必要があります")
        if self.epsilon == 0 and (self.j != 0 or any(self.ell)):
            raise ValueError("ε = 0 のときは j = 0, ℓ = 0 である必要があります")
        return self

    @property
    def dim(self) -> int:
        return len(self.k)

    def sort_key(self) -> Tuple:
        """辞書式順序 (ε, j, ℓ, k) のキー"""
        return (self.epsilon, self.j, self.ell, self.k)

    def window_key(self) -> Tuple[int, int, Tuple[int, ...]]:
        return (self.epsilon, self.j, self.ell)


class EtaRule(BaseModel):
    """方向サンプリングの刻み η_j = scale · σ^{−j(1−α)}"""

    model_config = ConfigDict(frozen=True)

    scale: float = Field(default=1.0, gt=0)


class ShearRule(BaseModel):
    """シア集合 ℒ_{ε,j} の規則

    kind="sh": |ℓ_1| ≤ L_j, |ℓ_i| < L_j (i ≥ 2)、ε = 1 には角 (±L_j, …, ±L_j) を追加
    kind="cube": |ℓ|_∞ ≤ L_j（すべての ε）
    ここで L_j = round(extent · σ^{j(1−α)})
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["sh", "cube"] = "sh"
    extent: float = Field(default=1.0, gt=0)


class SamplingData(BaseModel):
    """サンプリングデータ 𝔻 = {σ, Θ, ℒ, 𝒯}"""

    model_config = ConfigDict(frozen=True)

    sigma: float = Field(default=4.0, gt=1)
    alpha: float = Field(default=0.5, ge=0, le=1)
    eta_rule: EtaRule = Field(default_factory=EtaRule)
    shear_rule: ShearRule = Field(default_factory=ShearRule)
    tau: Tuple[float, ...] = Field(default=(1.0, 1.0, 1.0), min_length=2)
    c_eta: float = Field(default=2.0, ge=1)
    c_shear: float = Field(default=2.0, gt=0)
    tau_min: float = Field(default=1e-3, gt=0)
    tau_max: float = Field(default=1e3, gt=0)
    j_check: int = Field(default=10, ge=0, description="妥当性検査を行う最大スケール")

    @model_validator(mode="after")
    def validate_constants(self) -> "SamplingData":
        for t in self.tau:
            if not (self.tau_min <= t <= self.tau_max):
                raise ValueError(f"τ = {t} が [{self.tau_min}, {self.tau_max}] の範囲外です")
        for j in range(self.j_check + 1):
            base = self.sigma ** (j * (1 - self.alpha))
            ratio = self.eta(j) * base
            if not (1 / self.c_eta <= ratio <= self.c_eta):
                raise ValueError(f"η_j σ^(j(1−α)) = {ratio} が C_η の範囲外です (j={j})")
            if self.shear_extent(j) > self.c_shear * base:
                raise ValueError(f"max|ℓ|_∞ = {self.shear_extent(j)} が C_L σ^(j(1−α)) を超えます (j={j})")
        return self

    @property
    def dim(self) -> int:
        return len(self.tau)

    def eta(self, j: int) -> float:
        """方向刻み η_j"""
        return self.eta_rule.scale * self.sigma ** (-j * (1 - self.alpha))

    def shear_extent(self, j: int) -> int:
        """シアの範囲 L_j"""
        return max(1, int(math.floor(self.shear_rule.extent * self.sigma ** (j * (1 - self.alpha)) + 0.5)))

    def with_tau(self, tau: Tuple[float, ...]) -> "SamplingData":
        return self.model_copy(update={"tau": tuple(tau)})

    @classmethod
    def sh_default(cls, tau: float = 1.0) -> "SamplingData":
        """SHフレームのサンプリングデータ（σ = 4, α = ½, η_j = 2^{−j}）"""
        return cls(sigma=4.0, alpha=0.5, tau=(tau, tau, tau))


class ProfileParams(BaseModel):
    """窓プロファイルのパラメータ"""

    model_config = ConfigDict(frozen=True)

    steepness: Optional[int] = Field(
        default=None,
        ge=1,
        description="多項式ステップの次数（Noneなら exp(−1/t) 型の C^∞ ステップ）"
    )
    plateau: float = Field(default=1 / 16, gt=0, lt=0.5, description="v ≡ 1 となる区間の半幅 δ")


class FrameSpec(BaseModel):
    """デジタル3次元シアレットフレームの仕様"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2, description="各軸の格子数（2の冪）")
    J: int = Field(..., ge=0, description="最大スケール")
    profile: ProfileParams = Field(default_factory=ProfileParams)
    freq_scale: Optional[float] = Field(
        default=None,
        gt=0,
        description="整数周波数 m から連続周波数 ξ = m·freq_scale への係数（既定 2^{2J−1}/n）"
    )

    @model_validator(mode="after")
    def validate_band(self) -> "FrameSpec":
        if self.n & (self.n - 1) != 0:
            raise ValueError(f"n = {self.n} は2の冪ではありません")
        if 2 ** (2 * (self.J + 1)) > self.n:
            raise ValueError(
                f"帯域あふれ: J = {self.J} には n ≥ {2 ** (2 * (self.J + 1))} が必要です"
                "（J ≤ ½log₂n − 1）"
            )
        step = self.xi_step
        if step > 1 / 8:
            raise ValueError(f"freq_scale = {step} では粗スケール箱が解像されません")
        if self.J >= 1 and (self.n // 2) * step > 2.0 ** (2 * self.J - 2) * (1 + 1e-12):
            raise ValueError("ナイキスト周波数がスケールJで覆われる帯域を超えています")
        return self

    @property
    def xi_step(self) -> float:
        """連続周波数での格子間隔"""
        if self.freq_scale is not None:
            return self.freq_scale
        return 2.0 ** (2 * self.J - 1) / self.n

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def cache_token(self) -> Tuple:
        """キャッシュキー用のJSON化可能な表現"""
        return (self.n, self.J, self.profile.steepness, self.profile.plateau, self.xi_step)


class SampledVolume(BaseModel):
    """一様格子上の実数／複素数サンプル"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    data: np.ndarray
    domain: Literal["spatial", "frequency"] = "spatial"
    spacing: float = Field(default=1.0, gt=0, description="格子間隔（周波数領域では ξ の刻み）")
    origin: Optional[Tuple[float, ...]] = Field(default=None, description="先頭サンプルの座標")

    @field_validator("data")
    @classmethod
    def validate_data(cls, v: np.ndarray) -> np.ndarray:
        if not isinstance(v, np.ndarray) or v.ndim < 1:
            raise ValueError("data は1次元以上のndarrayである必要があります")
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        return v

    @model_validator(mode="after")
    def validate_origin(self) -> "SampledVolume":
        if self.origin is not None and len(self.origin) != self.data.ndim:
            raise ValueError("origin の次元が data と一致しません")
        return self

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def is_real(self) -> bool:
        return self.data.dtype.kind == "f"

    def axis_coordinates(self) -> List[np.ndarray]:
        """各軸の座標（originが無ければ中心が0になるよう配置）"""
        coords = []
        for axis, size in enumerate(self.data.shape):
            start = self.origin[axis] if self.origin is not None else -(size // 2) * self.spacing
            coords.append(start + self.spacing * np.arange(size))
        return coords

    def norm2(self) -> float:
        """L² ノルムの2乗（サンプルの2乗和）"""
        return float(np.vdot(self.data, self.data).real)


class CoefficientSet(BaseModel):
    """シアレット係数の集合（密または上位N個の疎表現）

    windows[w] が (ε, j, ℓ) を、平行移動 k は格子の平坦インデックスで表す。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: FrameSpec
    windows: List[Tuple[int, int, Tuple[int, ...]]]
    dense: Optional[np.ndarray] = Field(default=None, description="形状 (窓数, n, n, n)")
    window_ids: Optional[np.ndarray] = None
    flat_k: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    truncated: bool = False
    real_input: bool = True
    total_energy: float = Field(default=0.0, ge=0, description="打ち切り前の係数エネルギー Σ|c|²")
    lattice: Literal["full", "decimated"] = Field(
        default="full", description="平行移動の格子（decimated は窓ごとの間引き格子で √(s_1 s_2 s_3) 倍済み）"
    )

    @model_validator(mode="after")
    def validate_layout(self) -> "CoefficientSet":
        if self.dense is None:
            if self.window_ids is None or self.flat_k is None or self.values is None:
                raise ValueError("密配列か (window_ids, flat_k, values) のどちらかが必要です")
            if not (len(self.window_ids) == len(self.flat_k) == len(self.values)):
                raise ValueError("疎表現の配列長が一致しません")
        elif self.dense.shape[0] != len(self.windows):
            raise ValueError("密配列の先頭次元が窓数と一致しません")
        if self.dense is not None and self.lattice != "full":
            raise ValueError("間引き格子の係数は疎表現のみです")
        return self

    @property
    def count(self) -> int:
        if self.dense is not None:
            return int(self.dense.size)
        return int(len(self.values))

    def magnitudes(self) -> np.ndarray:
        if self.dense is not None:
            return np.abs(self.dense).ravel()
        return np.abs(self.values)

    def energy(self) -> float:
        """保持している係数のエネルギー"""
        mags = self.magnitudes()
        return float(np.dot(mags, mags))

    def to_sparse(self) -> "CoefficientSet":
        """密表現を (window_ids, flat_k, values) に変換（0も含めてすべて保持）"""
        if self.dense is None:
            return self
        n3 = self.spec.n ** 3
        n_windows = len(self.windows)
        return CoefficientSet(
            spec=self.spec,
            windows=self.windows,
            window_ids=np.repeat(np.arange(n_windows), n3),
            flat_k=np.tile(np.arange(n3), n_windows),
            values=self.dense.reshape(-1).copy(),
            truncated=self.truncated,
            real_input=self.real_input,
            total_energy=self.total_energy,
        )

    def entries(self) -> Iterator[Tuple[ShearletIndex, complex]]:
        """(ShearletIndex, 値) の列を順に生成"""
        sparse = self.to_sparse()
        shape = self.spec.shape
        for w, fk, value in zip(sparse.window_ids, sparse.flat_k, sparse.values):
            eps, j, ell = self.windows[int(w)]
            k = tuple(int(c) for c in np.unravel_index(int(fk), shape))
            yield ShearletIndex(epsilon=eps, j=j, ell=tuple(ell), k=k), complex(value)


class MoleculeOrder(BaseModel):
    """α分子の位数 (L, M, N_1, N_2)。"inf" は任意に大きい位数を表す"""

    model_config = ConfigDict(frozen=True)

    L: OrderValue = 0
    M: OrderValue = 0
    N1: OrderValue = 0
    N2: OrderValue = 0

    @field_validator("L", "M", "N1", "N2")
    @classmethod
    def validate_component(cls, v: OrderValue) -> OrderValue:
        if v != "inf" and v < 0:
            raise ValueError("位数の成分は0以上である必要があります")
        return v

    def value(self, name: str) -> float:
        v = getattr(self, name)
        return math.inf if v == "inf" else float(v)

    @property
    def is_finite(self) -> bool:
        return all(getattr(self, name) != "inf" for name in ("L", "M", "N1", "N2"))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return tuple(self.value(name) for name in ("L", "M", "N1", "N2"))

    @classmethod
    def infinite(cls) -> "MoleculeOrder":
        return cls(L="inf", M="inf", N1="inf", N2="inf")


class SmoothPart(BaseModel):
    """カートゥーン関数の滑らかな部分 f_i"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["bump", "constant"] = "bump"
    amplitude: float = 0.0


# 単変数因子 g(t) = (1 − (2t−1)²)³ の導関数の上限
BUMP_SUP = (1.0, 192.0 / (25.0 * math.sqrt(5.0)), 24.0)


def smooth_part_c2_norm(part: SmoothPart, d: int) -> float:
    """‖f‖_{C²} = max_{|β|≤2} sup|∂^β f|"""
    if part.kind == "constant":
        return abs(part.amplitude)
    g0, g1, g2 = BUMP_SUP
    candidates = [g0 ** d, g2 * g0 ** (d - 1), g1 * g0 ** (d - 1)]
    if d >= 2:
        candidates.append(g1 * g1 * g0 ** (d - 2))
    return abs(part.amplitude) * max(candidates)


class PhantomSpec(BaseModel):
    """カートゥーン様関数 f = f_0 + f_1 χ_B の仕様（B は軸平行楕円体）"""

    model_config = ConfigDict(frozen=True)

    d: Literal[2, 3] = 3
    nu: float = Field(..., gt=0, description="主曲率の上限 ν")
    center: Tuple[float, ...]
    semi_axes: Tuple[float, ...]
    smooth_parts: Tuple[SmoothPart, SmoothPart]
    seed: int = 0

    @model_validator(mode="after")
    def validate_region(self) -> "PhantomSpec":
        if len(self.center) != self.d or len(self.semi_axes) != self.d:
            raise ValueError("center / semi_axes の次元が d と一致しません")
        for c, a in zip(self.center, self.semi_axes):
            if a <= 0:
                raise ValueError("半軸は正である必要があります")
            if c - a < -1e-12 or c + a > 1 + 1e-12:
                raise ValueError("楕円体が [0,1]^d に収まっていません")
        if self.max_curvature > self.nu * (1 + 1e-12):
            raise ValueError(
                f"最大主曲率 {self.max_curvature:.4g} が ν = {self.nu} を超えています"
            )
        for part in self.smooth_parts:
            if smooth_part_c2_norm(part, self.d) > 1 + 1e-12:
                raise ValueError("滑らかな部分の C² ノルムが1を超えています")
        return self

    @property
    def max_curvature(self) -> float:
        """軸平行楕円体の最大主曲率 a_max / a_min²"""
        return max(self.semi_axes) / min(self.semi_axes) ** 2


class DistanceSample(BaseModel):
    """インデックス距離の標本"""

    lam: PhasePoint
    mu: PhasePoint
    omega: float = Field(..., ge=1)


class GramianRow(BaseModel):
    """グラム行列の1要素"""

    model_config = ConfigDict(frozen=True)

    index_a: ShearletIndex
    index_b: ShearletIndex
    re: float
    im: float = 0.0
    omega: float = Field(..., ge=1)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def sort_key(self) -> Tuple:
        return (self.index_a.sort_key(), self.index_b.sort_key())


class GramianTable(BaseModel):
    """(index_a, index_b, 値, ω) の表"""

    rows: List[GramianRow] = Field(default_factory=list)

    def values(self) -> np.ndarray:
        return np.array([row.value for row in self.rows], dtype=complex)

    def omegas(self) -> np.ndarray:
        return np.array([row.omega for row in self.rows], dtype=float)

    def sorted(self) -> "GramianTable":
        return GramianTable(rows=sorted(self.rows, key=lambda r: r.sort_key()))

    def scaled(self, factor: float) -> "GramianTable":
        return GramianTable(rows=[
            row.model_copy(update={"re": row.re * factor, "im": row.im * factor})
            for row in self.rows
        ])
