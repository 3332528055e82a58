"""
出價人數會變動時的識別（保留價）

- vary_known：兩組已知 N 的資料，只觀察高於保留價的成交價
- fp_vary_unknown：第一價格、N 未知、觀察出價人數
- sp_vary_invalid_set：第二價格、N 未知、觀察出價人數與流標數（集合識別）
"""

from __future__ import annotations

from math import comb
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg

from config.constants import CURVE_GAP_MARGIN, CURVE_GAP_STEP, SUPPORT_TOLERANCE, TAIL_GAP_TOLERANCE
from config.run_config import TuningConfig

from ..empirics import (
    EmpiricalQuantile,
    conditional_quantile,
    count_stats,
    default_bandwidth,
    default_second_bandwidth,
    eq_deriv,
    eq_second_deriv,
    price_quantile,
    split_counts,
)
from ..error_handler import DomainError, InconsistentDataError, RootBracketError
from ..logging_manager import log_event
from ..simulator import ObservedDataset
from .common import (
    accept_residual,
    effective_slack,
    require_rows,
    resolve_format,
    resolve_tuning,
    residual_tolerance,
    warn,
)
from .inversions import alpha_from_odds, invert_boundary_ratio, invert_reserve_mass
from .mappings import (
    alpha_grid,
    fixed_top_quantile,
    fp_value_curve,
    sp_top_value_curve,
    sp_value_curve,
    varying_top_quantile,
)
from .results import AlphaEstimate, Diagnostics, IdentificationResult, band_from_curves, set_estimate, value_grid


def _strip_mass(q: EmpiricalQuantile, eps: float) -> Tuple[EmpiricalQuantile, int]:
    """去掉最低價上的點質量（出現兩次以上才算）。"""
    _, count, _ = split_counts(q, q.minimum, eps)
    if count < 2:
        return q, count
    data = q.sorted_samples
    return EmpiricalQuantile.from_samples(data[data > q.minimum + eps]), count


def _curve_gap(curve: Callable[[float, np.ndarray], Tuple[np.ndarray, np.ndarray]], lower: float) -> float:
    """兩條價值曲線在 [a + margin, 1 − margin] 上的最大差距。"""
    start = lower + CURVE_GAP_MARGIN
    stop = 1.0 - CURVE_GAP_MARGIN
    if start >= stop:
        return float("inf")
    alphas = np.arange(start, stop + 1e-12, CURVE_GAP_STEP)
    first, second = curve(lower, alphas)
    return float(np.max(np.abs(first - second)))


def _pair_result_order(n_first: int, n_second: int, ds_first: ObservedDataset, ds_second: ObservedDataset):
    if n_first == n_second:
        raise DomainError("兩組資料的出價人數必須不同")
    if n_first > n_second:
        return ds_first, ds_second, n_first, n_second
    return ds_second, ds_first, n_second, n_first


def id_vary_known(
    ds_first: ObservedDataset,
    ds_second: ObservedDataset,
    n_first: int,
    n_second: int,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
) -> IdentificationResult:
    """
    兩組已知 N 的資料（N1 ≠ N2），只觀察高於保留價的成交價。

    第一價格以最低價處的二階導數比、第二價格以一階導數比建立方程式；
    若 α* = 0 時兩組回推曲線已經一致，則判定保留價不具約束力。
    """
    tuning = resolve_tuning(tuning)
    require_rows(ds_first, "第一組")
    require_rows(ds_second, "第二組")
    fmt = resolve_format(ds_first, fmt)
    ds_hi, ds_lo, n_hi, n_lo = _pair_result_order(n_first, n_second, ds_first, ds_second)
    if n_lo < 2:
        raise DomainError("兩組資料的出價人數都必須 ≥ 2")
    diag = Diagnostics()

    q_hi = price_quantile(ds_hi)
    q_lo = price_quantile(ds_lo)
    overid_mass = 0
    if fmt == "second_price":
        q_hi, overid_mass = _strip_mass(q_hi, tuning.mass_eps)
        q_lo, _ = _strip_mass(q_lo, tuning.mass_eps)

    span = max(q_hi.span, q_lo.span)
    gap = abs(q_hi.minimum - q_lo.minimum)
    diag.residuals["support_gap"] = gap
    if gap > SUPPORT_TOLERANCE * span:
        raise InconsistentDataError(f"兩組資料的最低成交價差距 {gap:.4g} 超過價格區間的 {SUPPORT_TOLERANCE:.0%}，保留價不一致")

    eta_hi = tuning.bandwidth or default_bandwidth(q_hi.n)
    eta_lo = tuning.bandwidth or default_bandwidth(q_lo.n)

    if fmt == "first_price":
        h_hi = default_second_bandwidth(q_hi.n)
        h_lo = default_second_bandwidth(q_lo.n)
        c_hi = eq_second_deriv(q_hi, 0.0, h_hi)
        c_lo = eq_second_deriv(q_lo, 0.0, h_lo)
        diag.bandwidths.update({"second_deriv_high": h_hi, "second_deriv_low": h_lo})
        diag.extras.update({"curvature_high": c_hi, "curvature_low": c_lo})
        target = None
        if c_hi > 0 and c_lo > 0:
            target = float(np.sqrt(n_lo**2 * (n_hi - 1) / (n_hi**2 * (n_lo - 1)) * c_lo / c_hi))
        kind = "fp"

        def curves(lower: float, alphas: np.ndarray):
            _, v_hi = fp_value_curve(q_hi, alphas, fixed_top_quantile(n_hi, lower), n_hi, lower, eta=eta_hi)
            _, v_lo = fp_value_curve(q_lo, alphas, fixed_top_quantile(n_lo, lower), n_lo, lower, eta=eta_lo)
            return v_hi, v_lo

    else:
        d_hi = eq_deriv(q_hi, 0.0, tuning.bandwidth)
        d_lo = eq_deriv(q_lo, 0.0, tuning.bandwidth)
        diag.extras.update({"slope_high": d_hi, "slope_low": d_lo})
        if d_hi <= 1e-12 * span or d_lo <= 1e-12 * span:
            raise InconsistentDataError("最低價處的分位數斜率退化為 0，無法建立比值方程式")
        target = float(n_lo * (n_lo - 1) / (n_hi * (n_hi - 1)) * d_lo / d_hi)
        kind = "sp"

        def curves(lower: float, alphas: np.ndarray):
            return sp_value_curve(q_hi, alphas, n_hi, lower), sp_value_curve(q_lo, alphas, n_lo, lower)

    diag.bandwidths.update({"alpha_step_high": eta_hi, "alpha_step_low": eta_lo})
    candidate = None
    if target is not None:
        diag.residuals["ratio_target"] = target
        try:
            candidate = invert_boundary_ratio(kind, target, n_hi, n_lo)
        except RootBracketError as error:
            warn(diag, "ratio_out_of_range", f"邊界比值方程式無解：{error}")

    gap_zero = _curve_gap(curves, 0.0)
    diag.residuals["curve_gap_zero"] = gap_zero
    gap_candidate = _curve_gap(curves, candidate) if candidate is not None else float("inf")
    if candidate is not None:
        diag.residuals["curve_gap_candidate"] = gap_candidate

    if gap_zero < tuning.equal_curve_tolerance and gap_zero <= gap_candidate:
        alpha_star = 0.0
        warn(diag, "reserve_nonbinding", "α*=0 時兩組價值曲線已一致，判定保留價不具約束力")
    elif candidate is None:
        raise RootBracketError("邊界比值方程式無解，且 α*=0 的曲線不一致")
    else:
        alpha_star = candidate

    if fmt == "second_price" and overid_mass >= 2:
        alpha_mass = invert_reserve_mass(overid_mass / ds_hi.L, n_hi)
        diag.residuals["overid_gap"] = float(alpha_mass - alpha_star)

    grid = alpha_grid(alpha_star)
    values = curves(alpha_star, grid)[0]
    log_event("identify", {"estimator": "vary_known", "alpha_star": alpha_star})
    estimate = AlphaEstimate(point=alpha_star)
    return IdentificationResult(
        estimator="vary_known",
        format=fmt,
        truncation="reserve",
        alpha_star=estimate,
        thresholds={n_first: estimate, n_second: estimate},
        v_grid=value_grid(grid, values, diag),
        diagnostics=diag,
    )


def _top_tail_check(q_top: EmpiricalQuantile, q_sub: EmpiricalQuantile, diag: Diagnostics) -> bool:
    """N̄−1 人成交價的上尾是否延伸到 N̄ 人成交價的上尾。"""
    gap = (q_top.maximum - q_sub.maximum) / max(q_top.span, 1e-15)
    diag.residuals["tail_gap"] = float(gap)
    return gap <= TAIL_GAP_TOLERANCE


def _clamp_share(p_hat: float, diag: Diagnostics) -> float:
    if p_hat > 1.0:
        warn(diag, "share_clamped", f"p̂={p_hat:.4f} 大於 1，截為 1")
        return 1.0
    if p_hat < 0.0:
        warn(diag, "share_clamped", f"p̂={p_hat:.4f} 小於 0，截為 0")
        return 0.0
    return p_hat


def top_two_cells(ds: ObservedDataset) -> Tuple[int, EmpiricalQuantile, EmpiricalQuantile, float]:
    """N̄、n_obs = N̄ 與 N̄−1 的成交價分位數、兩者筆數比 Q。"""
    stats = count_stats(ds)
    n_max = stats.require_max()
    if n_max < 2 or stats.counts.get(n_max - 1, 0) == 0:
        raise InconsistentDataError("需要 n_obs = N̄ 與 N̄−1 兩種出價人數的成交紀錄")
    q_top = conditional_quantile(ds, n_max)
    q_sub = conditional_quantile(ds, n_max - 1)
    return n_max, q_top, q_sub, q_sub.n / q_top.n


def id_fp_vary_unknown(
    ds: ObservedDataset,
    tuning: Optional[TuningConfig] = None,
) -> IdentificationResult:
    """
    第一價格、N 變動且未知、觀察出價人數。

    p̂ = N̄ T′_N̄(1) / ((N̄−1) T′_{N̄−1}(1)) 為 N̄−1 人成交中來自 N̄ 人拍賣的比例，
    r = p̂ · #(N̄−1)/#(N̄)，α̂* = r / (N̄ + r)。
    """
    tuning = resolve_tuning(tuning)
    require_rows(ds)
    diag = Diagnostics()
    n_max, q_top, q_sub, odds = top_two_cells(ds)
    h_top = tuning.bandwidth or default_bandwidth(q_top.n)
    h_sub = tuning.bandwidth or default_bandwidth(q_sub.n)
    diag.bandwidths.update({"top": h_top, "sub": h_sub})

    if _top_tail_check(q_top, q_sub, diag):
        slope_top = eq_deriv(q_top, 1.0, h_top)
        slope_sub = eq_deriv(q_sub, 1.0, h_sub)
        p_hat = _clamp_share(n_max * slope_top / ((n_max - 1) * slope_sub), diag)
        diag.extras.update({"slope_top": slope_top, "slope_sub": slope_sub})
    else:
        warn(diag, "tail_gap", "N̄−1 人成交價的上尾低於 N̄ 人，判定沒有未進場者（α*=0）")
        p_hat = 0.0

    alpha_star = alpha_from_odds(p_hat * odds, n_max)
    diag.extras.update({"p_hat": p_hat, "count_ratio": odds})
    grid = alpha_grid(alpha_star)
    _, values = fp_value_curve(q_top, grid, varying_top_quantile(n_max, alpha_star), n_max, alpha_star, eta=tuning.bandwidth)
    log_event("identify", {"estimator": "fp_vary_unknown", "alpha_star": alpha_star, "p_hat": p_hat})
    return IdentificationResult(
        estimator="fp_vary_unknown",
        format="first_price",
        truncation="reserve",
        alpha_star=AlphaEstimate(point=alpha_star),
        n_recovered=n_max,
        v_grid=value_grid(grid, values, diag),
        diagnostics=diag,
    )


def activity_matrix(alpha: float, n_max: int) -> np.ndarray:
    """C[k, N] = C(N, k) (1−α)^k α^{N−k}，k ≤ N（上三角）。"""
    matrix = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        for k in range(n + 1):
            matrix[k, n] = comb(n, k) * (1.0 - alpha) ** k * alpha ** (n - k)
    return matrix


def id_sp_vary_invalid_set(
    ds: ObservedDataset,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
) -> IdentificationResult:
    """
    第二價格、N 變動且未知、觀察出價人數與流標數。

    對每個網格 α 解 C(α) x = P（P 為 n_obs = 0..N̄ 的比例），
    接受 x_0 ≈ 0 且 x_j ∈ [0, 1] 的 α。容忍度包含多項分佈抽樣誤差。
    """
    tuning = resolve_tuning(tuning)
    require_rows(ds)
    if resolve_format(ds, fmt) == "first_price":
        raise DomainError("sp_vary_invalid_set 只適用第二價格拍賣")
    diag = Diagnostics()
    stats = count_stats(ds)
    n_max = stats.require_max()
    if n_max < 2:
        raise InconsistentDataError("最多只有一位出價人，無法回推價值")
    counts = stats.outcome_counts()
    total = counts.sum()
    shares = counts / total
    share_cov = (np.diag(shares) - np.outer(shares, shares)) / total

    step = tuning.grid_step_1d
    grid = step * np.arange(int(np.floor((1.0 - 1e-12) / step)) + 1)
    solutions = np.empty((grid.size, n_max + 1))
    sigmas = np.empty_like(solutions)
    for i, alpha in enumerate(grid):
        matrix = activity_matrix(alpha, n_max)
        inverse = linalg.solve_triangular(matrix, np.eye(n_max + 1), lower=False)
        solutions[i] = inverse @ shares
        sigmas[i] = np.sqrt(np.clip(np.diag(inverse @ share_cov @ inverse.T), 0.0, None))

    slack = effective_slack(tuning, int(total))
    accepted = np.ones(grid.size, dtype=bool)
    zero_tol = residual_tolerance(solutions[:, 0], 1.0, sigmas[:, 0], slack, tuning.noise_z, (step,))
    accepted &= accept_residual(solutions[:, 0], zero_tol)
    for j in range(1, n_max + 1):
        tol = residual_tolerance(solutions[:, j], 1.0, sigmas[:, j], slack, tuning.noise_z, (step,))
        accepted &= (solutions[:, j] >= -tol) & (solutions[:, j] <= 1.0 + tol)

    if not np.any(accepted):
        raise InconsistentDataError("沒有任何 α 讓人數分佈為合法機率，資料與模型不一致")

    estimate = set_estimate(grid, accepted)
    best = int(np.argmin(np.where(accepted, np.abs(solutions[:, 0]) / np.maximum(zero_tol, 1e-15), np.inf)))
    representative = float(grid[best])
    diag.residuals.update({"zero_mass_at_best": float(solutions[best, 0]), "slack": slack})
    diag.extras.update(
        {
            "representative_alpha": representative,
            "population_pmf": {int(n): float(x) for n, x in enumerate(solutions[best])},
            "accepted_points": int(accepted.sum()),
        }
    )

    q_top = conditional_quantile(ds, n_max)
    lower = estimate.lower
    alphas = alpha_grid(lower)
    curves = [sp_top_value_curve(q_top, alphas, n_max, a) for a in (estimate.lower, estimate.upper)]
    values = sp_top_value_curve(q_top, alphas, n_max, representative)
    log_event("identify", {"estimator": "sp_vary_invalid_set", "intervals": estimate.intervals, "point": estimate.point})
    return IdentificationResult(
        estimator="sp_vary_invalid_set",
        format="second_price",
        truncation="reserve",
        alpha_star=estimate,
        n_recovered=n_max,
        v_grid=value_grid(alphas, values, diag),
        v_band=band_from_curves(alphas, curves),
        diagnostics=diag,
    )


__all__ = ["activity_matrix", "id_fp_vary_unknown", "id_sp_vary_invalid_set", "id_vary_known", "top_two_cells"]
