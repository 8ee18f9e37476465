"""
レポートのデータモデル

各計算結果・診断の出力形式（JSONとして保存される）
"""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from src.schemas.data_models import FrameSpec, MoleculeOrder, PhantomSpec


class GridReport(BaseModel):
    """タイトネス検査で評価した周波数格子の情報"""

    n: int
    J: int
    freq_scale: float
    points: int = Field(..., description="評価した格子点の数")
    n_windows: int
    argmax_xi: Tuple[float, float, float] = Field(..., description="最大偏差を与えた ξ")
    min_total: float = Field(..., description="Σ|窓|² の最小値")
    max_total: float = Field(..., description="Σ|窓|² の最大値")


class TightnessReport(BaseModel):
    """check_tight の結果"""

    max_dev: float = Field(..., ge=0, description="max |T(ξ) − Φ̂²(2^{−2(J+1)}ξ)|")
    grid_report: GridReport


class ContinuityReport(BaseModel):
    """境界・角の窓のピラミッド境界での連続性"""

    max_gap: float = Field(..., ge=0, description="両側評価の最大差")
    points: int
    windows_checked: int


class FrameCheckReport(BaseModel):
    """frame check コマンドのレポート"""

    spec: FrameSpec
    tightness: TightnessReport
    continuity: ContinuityReport
    threshold: float
    passed: bool
    timings: Dict[str, float] = Field(default_factory=dict, description="段階ごとの実行時間（秒）")


class ConsistencyReport(BaseModel):
    """(α, k) 整合性和の打ち切り推定"""

    k: float
    alpha: float
    sup_estimate: float = Field(..., description="最終打ち切りレベルでの sup 推定")
    sups: List[float] = Field(default_factory=list, description="レベルごとの sup 推定")
    increments: List[float] = Field(default_factory=list, description="隣接レベルの差 sup_i − sup_{i−1}")
    levels: List[Tuple[int, int]] = Field(default_factory=list, description="(J_max, K_max) の列")
    converged: bool
    relative_change: Optional[float] = Field(default=None, description="最後の差 / 最終 sup")
    tail_bound: Optional[float] = Field(default=None, description="収束時の幾何級数による残差上限")
    pruned_mass: float = Field(default=0.0, ge=0, description="枝刈りしたシアの和の上限")
    probe_count: int = 0


class SchurDiagnostic(BaseModel):
    """入れ子の打ち切りに対するSchur ℓ^p 上限"""

    p: float
    sizes: List[int] = Field(default_factory=list, description="各レベルの行列サイズ")
    bounds: List[float] = Field(default_factory=list)
    schur_bound: float
    relative_change: float
    stable: bool


class DecayFitResult(BaseModel):
    """log|値| vs log ω の包絡線フィット"""

    C: float
    slope: float
    r2: float
    omega_min: float
    rows_used: int
    bins_used: int
    envelope: List[Tuple[float, float]] = Field(default_factory=list, description="(ω, |値|) の包絡点")


class GramianReport(BaseModel):
    """gramian コマンドのレポート"""

    fit: DecayFitResult
    rows: int
    max_slope: float
    min_r2: float
    passed: bool


class DerivativeBound(BaseModel):
    """微分 ∂^ρ ごとの比の上限"""

    rho: Tuple[int, ...]
    ratio: float


class OrderCheckReport(BaseModel):
    """order_check の結果"""

    order: MoleculeOrder
    mode: str
    constant: float
    per_derivative: List[DerivativeBound] = Field(default_factory=list)


class TransferReport(BaseModel):
    """変換行列 M_λ, M̃_λ"""

    M: List[List[float]]
    M_tilde: List[List[float]]
    norms: Dict[str, float] = Field(..., description="M, M_inv, M_tilde, M_tilde_inv の作用素ノルム")
    n_lambda: float
    axis_residual: float = Field(..., description="|M e_d − n_λ e_d|")


class ScaleConstant(BaseModel):
    """スケールごとの分子定数"""

    j: int
    constant: float = Field(..., description="そのスケールの重みに対する定数")
    uniform_constant: float = Field(..., description="極限の重み（j → ∞）に対する定数")
    windows: int


class MoleculeReport(BaseModel):
    """molecule コマンドのレポート"""

    order: MoleculeOrder
    per_scale: List[ScaleConstant]
    drift: float = Field(..., description="一様定数の max_j / min_j")
    transfer_axis_residual: float
    transfer_norm_max: float
    passed: bool


class NTermRow(BaseModel):
    """N項近似の1行"""

    N: int
    err2: float
    tail2: float
    c_star: float = Field(..., description="N番目に大きい係数の絶対値")


class NTermTable(BaseModel):
    """N項近似曲線"""

    rows: List[NTermRow] = Field(default_factory=list)
    norm2: float = Field(..., description="‖f‖²")
    total_energy: float = Field(..., description="係数エネルギー Σ|c|²")
    coefficient_count: int
    lattice: str = Field(default="decimated", description="平行移動の格子")


class RateFit(BaseModel):
    """log-log の傾きフィット"""

    exponent: float = Field(..., description="log err2 vs log N の傾き")
    r2: float
    coefficient_exponent: Optional[float] = Field(default=None, description="log c*_N vs log N の傾き")
    coefficient_r2: Optional[float] = None
    n_range: Tuple[float, float]
    points: int
    reference: Dict[str, float] = Field(default_factory=dict, description="参照レートの傾き")


class PhantomReport(BaseModel):
    """phantom コマンドのレポート"""

    spec: PhantomSpec
    n: int
    min_value: float
    max_value: float
    nonzero_fraction: float
    jump_faces: int
    curvature_bound: float


class ApproxReport(BaseModel):
    """approx コマンドのレポート"""

    table: NTermTable
    fit: Optional[RateFit] = None
    monotone: bool


class CommandEnvelope(BaseModel):
    """すべてのJSONレポートの外枠（解決済み設定を埋め込む）"""

    command: str
    config: Dict[str, Any]
    result: Dict[str, Any]
