"""
CLIコマンド

各サブコマンドの実装。結果は --out のディレクトリに書き出し、終了コードを返す
"""

import argparse
import json
import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np

from src.approximation.approx import MIN_FIT_POINTS, is_monotone, nterm_curve, rate_fit
from src.approximation.cartoon import count_jump_faces, curvature_bound, make_phantom, rasterize
from src.molecules.metric import consistency_sum, truncation_schedule
from src.molecules.molecule import constant_drift, scale_constants, transfer_matrices
from src.molecules.parametrization import ShearletParametrization, sh_sampling, shear_set
from src.schemas.data_models import FrameSpec, MoleculeOrder, ProfileParams, ShearletIndex
from src.schemas.reports import (
    ApproxReport,
    FrameCheckReport,
    GramianReport,
    MoleculeReport,
    PhantomReport,
)
from src.shearlets.frame3d import analysis, check_continuity, check_tight
from src.shearlets.gramian import PairSampler, cross_gramian, decay_fit
from src.shearlets.systems import ContinuumShearletSystem
from src.storage.files import (
    load_volume,
    save_volume,
    write_coefficients_csv,
    write_gramian_csv,
    write_rates_csv,
    write_report,
)
from src.utils.error_handler import EXIT_ACCEPTANCE, EXIT_OK, UsageError, handle_command_errors
from src.utils.errors import StorageError
from src.utils.profiler import Timer
from src.utils.validation import parse_int_list, validate_output_dir, validate_power_of_two

logger = logging.getLogger(__name__)

# 連続性検査の許容差
CONTINUITY_TOL = 1e-12


def resolved_config(args: argparse.Namespace) -> Dict[str, Any]:
    """レポートに埋め込む解決済みの設定"""
    return {
        key: value for key, value in sorted(vars(args).items())
        if key not in ("func",) and not callable(value)
    }


def _out_dir(args: argparse.Namespace) -> Path:
    is_valid, message = validate_output_dir(args.out)
    if not is_valid:
        raise StorageError(message)
    return Path(args.out)


def _frame_spec(n: int, scales: int) -> FrameSpec:
    is_valid, message = validate_power_of_two(n, minimum=2)
    if not is_valid:
        raise UsageError(f"--n: {message}")
    if scales < 0:
        raise UsageError("--scales は0以上である必要があります")
    return FrameSpec(n=n, J=scales, profile=ProfileParams())


def _summary(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


@handle_command_errors
def cmd_frame_check(args: argparse.Namespace) -> int:
    """frame check: タイトネスと窓の連続性"""
    spec = _frame_spec(args.n, args.scales)
    out = _out_dir(args)
    timings: Dict[str, float] = {}
    with Timer("tightness", record=timings):
        tightness = check_tight(spec)
    with Timer("continuity", record=timings):
        continuity = check_continuity(spec.J, spec.profile, seed=args.seed)
    passed = tightness.max_dev <= args.threshold and continuity.max_gap <= CONTINUITY_TOL
    report = FrameCheckReport(
        spec=spec, tightness=tightness, continuity=continuity,
        threshold=args.threshold, passed=passed, timings=timings,
    )
    write_report("frame check", resolved_config(args), report, out / "frame_check.json")
    _summary({"max_dev": tightness.max_dev, "max_gap": continuity.max_gap, "passed": passed})
    return EXIT_OK if passed else EXIT_ACCEPTANCE


@handle_command_errors
def cmd_frame_analyze(args: argparse.Namespace) -> int:
    """frame analyze: ボリュームの係数をCSVに書き出す"""
    volume = load_volume(args.input)
    if len(set(volume.dims)) != 1 or len(volume.dims) != 3:
        raise UsageError(f"立方体のボリュームが必要です: {volume.dims}")
    spec = _frame_spec(volume.dims[0], args.scales)
    out = _out_dir(args)
    if args.keep is not None and args.keep < 0:
        raise UsageError("--keep は0以上である必要があります")
    coefficients = analysis(volume, spec, keep=args.keep)
    write_coefficients_csv(coefficients, out / "coefficients.csv")
    _summary({"coefficients": coefficients.count, "energy": coefficients.total_energy})
    return EXIT_OK


@handle_command_errors
def cmd_gramian(args: argparse.Namespace) -> int:
    """gramian: 層別サンプルの相互グラム行列と減衰包絡線フィット"""
    if args.pairs <= 0:
        raise UsageError("--pairs は正である必要があります")
    spec = _frame_spec(args.n, args.scales)
    out = _out_dir(args)
    system = ContinuumShearletSystem(spec)
    table = cross_gramian(system, system, PairSampler(count=args.pairs, seed=args.seed))
    write_gramian_csv(table, out / "gramian.csv")
    fit = decay_fit(table, args.omega_min, args.omega_max)
    passed = fit.slope <= args.max_slope and fit.r2 >= args.min_r2
    report = GramianReport(
        fit=fit, rows=len(table.rows), max_slope=args.max_slope, min_r2=args.min_r2, passed=passed
    )
    write_report("gramian", resolved_config(args), report, out / "gramian_fit.json")
    _summary({"slope": fit.slope, "r2": fit.r2, "C": fit.C, "passed": passed})
    return EXIT_OK if passed else EXIT_ACCEPTANCE


@handle_command_errors
def cmd_consistency(args: argparse.Namespace) -> int:
    """consistency: 2つのSH型パラメータ化の (α, k) 整合性和（常に終了コード0）"""
    if args.jmax < 0 or args.kmax < 1:
        raise UsageError("--jmax は0以上、--kmax は1以上である必要があります")
    out = _out_dir(args)
    A = ShearletParametrization(sh_sampling(args.tau_a), alpha=args.alpha)
    B = ShearletParametrization(sh_sampling(args.tau_b), alpha=args.alpha)
    report = consistency_sum(A, B, args.alpha, args.k, levels=truncation_schedule(args.jmax, args.kmax))
    write_report("consistency", resolved_config(args), report, out / "consistency.json")
    _summary({"sup": report.sup_estimate, "converged": report.converged})
    return EXIT_OK


@handle_command_errors
def cmd_phantom(args: argparse.Namespace) -> int:
    """phantom: カートゥーン様関数の生成と標本化"""
    if args.dim not in (2, 3):
        raise UsageError("--dim は2か3である必要があります")
    out = _out_dir(args)
    spec = make_phantom(args.nu, d=args.dim, seed=args.seed)
    volume = rasterize(spec, args.n)
    save_volume(volume, out / "phantom_volume")
    report = PhantomReport(
        spec=spec,
        n=args.n,
        min_value=float(volume.data.min()),
        max_value=float(volume.data.max()),
        nonzero_fraction=float(np.count_nonzero(volume.data) / volume.data.size),
        jump_faces=count_jump_faces(spec, args.n),
        curvature_bound=curvature_bound(spec),
    )
    write_report("phantom", resolved_config(args), report, out / "phantom.json")
    _summary({"semi_axes": list(spec.semi_axes), "jump_faces": report.jump_faces})
    return EXIT_OK


@handle_command_errors
def cmd_approx(args: argparse.Namespace) -> int:
    """approx: 3次元ファントムのN項近似とレートフィット"""
    try:
        Ns = parse_int_list(args.nterms)
    except ValueError as e:
        raise UsageError(str(e)) from e
    spec = _frame_spec(args.n, args.scales)
    out = _out_dir(args)
    phantom = make_phantom(args.nu, d=3, seed=args.seed)
    volume = rasterize(phantom, args.n)
    table = nterm_curve(volume, spec, Ns, lattice=args.lattice)
    write_rates_csv(table, out / "rates.csv")
    fit = None
    if len(table.rows) >= MIN_FIT_POINTS:
        fit = rate_fit(table)
    monotone = is_monotone(table)
    report = ApproxReport(table=table, fit=fit, monotone=monotone)
    write_report("approx", resolved_config(args), report, out / "approx.json")
    _summary({"monotone": monotone, "exponent": fit.exponent if fit else None})
    return EXIT_OK if monotone else EXIT_ACCEPTANCE


@handle_command_errors
def cmd_molecule(args: argparse.Namespace) -> int:
    """molecule: SH生成関数の位数検査と変換行列の包絡"""
    try:
        parts = parse_int_list(args.order)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if len(parts) != 4:
        raise UsageError("--order は L,M,N1,N2 の4つの整数です")
    order = MoleculeOrder(L=parts[0], M=parts[1], N1=parts[2], N2=parts[3])
    out = _out_dir(args)

    per_scale = scale_constants(args.jmax, order, spacing=args.spacing)
    drift = constant_drift(per_scale)

    sampling = sh_sampling()
    residual = 0.0
    norm_max = 0.0
    for eps in (1, 2, 3):
        for j in range(args.transfer_jmax + 1):
            for ell in shear_set(sampling, eps, j):
                idx = ShearletIndex(epsilon=eps, j=j, ell=tuple(ell), k=(0, 0, 0))
                transfer = transfer_matrices(idx, sampling, 0.5)
                residual = max(residual, transfer.axis_residual)
                norm_max = max(norm_max, transfer.norms["M_tilde"], transfer.norms["M_tilde_inv"])

    passed = drift <= args.max_drift and residual <= 1e-12 and norm_max <= 4.0
    report = MoleculeReport(
        order=order, per_scale=per_scale, drift=drift,
        transfer_axis_residual=residual, transfer_norm_max=norm_max, passed=passed,
    )
    write_report("molecule", resolved_config(args), report, out / "molecule.json")
    _summary({"drift": drift, "transfer_norm_max": norm_max, "passed": passed})
    return EXIT_OK if passed else EXIT_ACCEPTANCE
