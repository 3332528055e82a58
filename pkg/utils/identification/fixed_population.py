"""
固定出價人數 N 的識別

- sp_fixed_price_only：第二價格，保留價上的點質量反解 α*
- fp_fixed_invalid：第一價格，流標比例 = α*^N
- fixed_nobs：N 未知但觀察出價人數，N̂ = max n_obs
- entry_fixed：進場成本，第二價格看 0 的質量、第一價格看流標比例
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from config.run_config import TuningConfig

from ..empirics import EmpiricalQuantile, count_stats, default_bandwidth, mass_at, price_quantile, split_counts
from ..error_handler import ConfigError, DomainError, InconsistentDataError, NotIdentifiedError
from ..logging_manager import log_event
from ..simulator import ObservedDataset
from .common import require_rows, resolve_format, resolve_truncation, resolve_tuning, warn
from .inversions import (
    full_entry_share,
    invert_full_entry_share,
    invert_invalid_share,
    invert_reserve_mass,
    reserve_mass_share,
)
from .mappings import alpha_grid, fixed_top_quantile, fp_value_curve, printed_slope_factor, sp_value_curve
from .results import AlphaEstimate, Diagnostics, IdentificationResult, value_grid


def _check_n(n_bidders: int) -> None:
    if n_bidders < 2:
        raise DomainError(f"此估計器需要 N ≥ 2：{n_bidders}")


def _fp_curve(
    q: EmpiricalQuantile,
    n: int,
    alpha_star: float,
    tuning: TuningConfig,
    diagnostics: Diagnostics,
    anchor: Optional[float] = None,
):
    """固定 N 的第一價格回推；同時計算兩種導數因子，差距寫入診斷資訊。"""
    grid = alpha_grid(alpha_star)
    eta = tuning.bandwidth or default_bandwidth(q.n)
    to_u = fixed_top_quantile(n, alpha_star)
    factor = printed_slope_factor(n, alpha_star)
    _, chain = fp_value_curve(q, grid, to_u, n, alpha_star, eta=eta, slope_factor=1.0, anchor=anchor)
    _, printed = fp_value_curve(q, grid, to_u, n, alpha_star, eta=eta, slope_factor=factor, anchor=anchor)
    values = chain if tuning.chain_rule_slope else printed
    diagnostics.bandwidths["alpha_step"] = eta
    diagnostics.residuals["slope_variant_gap"] = float(np.max(np.abs(printed - chain)))
    diagnostics.extras["slope_variant"] = "chain_rule" if tuning.chain_rule_slope else "printed"
    return grid, values


def _sp_curve(q_above: EmpiricalQuantile, n: int, alpha_star: float, floor: Optional[float] = None):
    grid = alpha_grid(alpha_star)
    values = sp_value_curve(q_above, grid, n, alpha_star)
    if floor is not None:
        values = np.asarray(values, dtype=float).copy()
        values[0] = floor
    return grid, values


def id_sp_fixed_price_only(
    ds: ObservedDataset,
    n_bidders: int,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
) -> IdentificationResult:
    """
    第二價格、固定已知 N、只觀察成交價。

    最低成交價 R̂ 的出現次數佔比 = N α^{N−1} / Σ α^j，反解得 α̂*；
    R̂ 只出現一次時視為保留價不具約束力（α̂* = 0）。
    """
    tuning = resolve_tuning(tuning)
    _check_n(n_bidders)
    require_rows(ds)
    if resolve_format(ds, fmt) != "second_price":
        raise ConfigError("sp_fixed_price_only 只適用第二價格拍賣")
    diag = Diagnostics()
    q = price_quantile(ds)
    reserve = q.minimum
    _, count, _ = split_counts(q, reserve, tuning.mass_eps)
    share = mass_at(q, reserve, tuning.mass_eps)

    if count < 2:
        warn(diag, "reserve_nonbinding", f"最低成交價只出現 {count} 次，視為保留價不具約束力（α*=0）")
        alpha_star = 0.0
        above = q
        floor = None
    else:
        alpha_star = invert_reserve_mass(share, n_bidders)
        prices = q.sorted_samples
        above = EmpiricalQuantile.from_samples(prices[prices > reserve + tuning.mass_eps])
        floor = reserve
        diag.residuals["mass_equation"] = float(reserve_mass_share(alpha_star, n_bidders) - share)

    grid, values = _sp_curve(above, n_bidders, alpha_star, floor)
    diag.extras.update({"reserve_price": reserve, "mass_count": count, "mass_share": share})
    log_event("identify", {"estimator": "sp_fixed_price_only", "alpha_star": alpha_star})
    return IdentificationResult(
        estimator="sp_fixed_price_only",
        format="second_price",
        truncation="reserve",
        alpha_star=AlphaEstimate(point=alpha_star),
        n_recovered=n_bidders,
        v_grid=value_grid(grid, values, diag),
        diagnostics=diag,
    )


def id_fp_fixed_invalid(
    ds: ObservedDataset,
    n_bidders: int,
    tuning: Optional[TuningConfig] = None,
) -> IdentificationResult:
    """第一價格、固定已知 N、觀察流標數：α̂* = (L_invalid / L_total)^{1/N}。"""
    tuning = resolve_tuning(tuning)
    _check_n(n_bidders)
    require_rows(ds)
    diag = Diagnostics()
    stats = count_stats(ds)
    stats.require_invalid()
    share = stats.invalid_share
    alpha_star = invert_invalid_share(share, n_bidders)
    q = price_quantile(ds)
    grid, values = _fp_curve(q, n_bidders, alpha_star, tuning, diag)
    diag.extras.update({"invalid_share": share, "reserve_price": q.minimum})
    log_event("identify", {"estimator": "fp_fixed_invalid", "alpha_star": alpha_star})
    return IdentificationResult(
        estimator="fp_fixed_invalid",
        format="first_price",
        truncation="reserve",
        alpha_star=AlphaEstimate(point=alpha_star),
        n_recovered=n_bidders,
        v_grid=value_grid(grid, values, diag),
        diagnostics=diag,
    )


def _entry_cost(value_at_threshold: float, alpha_star: float, n: int, diag: Diagnostics) -> float:
    cost = float(value_at_threshold * alpha_star ** (n - 1))
    if cost <= 1e-6:
        warn(diag, "entry_cost_zero", "估計的進場成本與 0 無法區分，資料可能沒有進場成本")
    return cost


def id_fixed_nobs(
    ds: ObservedDataset,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
    truncation: Optional[str] = None,
) -> IdentificationResult:
    """
    N 固定但未知，觀察出價人數。

    N̂ = max n_obs；n_obs = N̂ 的比例 = (1−α)^{N−1} / Σ α^j，反解得 α̂*。
    進場成本下另外回推 F̂ = V̂(α̂*) α̂*^{N̂−1}。
    """
    tuning = resolve_tuning(tuning)
    require_rows(ds)
    fmt = resolve_format(ds, fmt)
    truncation = resolve_truncation(ds, truncation)
    diag = Diagnostics()
    n_obs = ds.n_obs
    stats = count_stats(ds)
    n_hat = stats.require_max()
    if n_hat < 2:
        raise InconsistentDataError("最多只有一位出價人，無法識別")
    share = stats.share(n_hat)
    alpha_star = invert_full_entry_share(share, n_hat)
    diag.residuals["share_equation"] = float(full_entry_share(alpha_star, n_hat) - share)
    if stats.invalid_share is not None:
        diag.residuals["invalid_share_gap"] = float(stats.invalid_share - alpha_star**n_hat)

    anchor = 0.0 if truncation == "entry_cost" else None
    if fmt == "second_price":
        prices = ds.prices[n_obs >= 2]
        above = EmpiricalQuantile.from_samples(prices)
        grid, values = _sp_curve(above, n_hat, alpha_star)
    else:
        grid, values = _fp_curve(price_quantile(ds), n_hat, alpha_star, tuning, diag, anchor=anchor)

    entry_cost = None
    if truncation == "entry_cost":
        entry_cost = _entry_cost(float(values[0]), alpha_star, n_hat, diag)

    log_event("identify", {"estimator": "fixed_nobs", "alpha_star": alpha_star, "n_hat": n_hat})
    return IdentificationResult(
        estimator="fixed_nobs",
        format=fmt,
        truncation=truncation,
        alpha_star=AlphaEstimate(point=alpha_star),
        n_recovered=n_hat,
        entry_cost=entry_cost,
        v_grid=value_grid(grid, values, diag),
        diagnostics=diag,
    )


def id_entry_fixed(
    ds: ObservedDataset,
    n_bidders: int,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
) -> IdentificationResult:
    """
    進場成本、固定已知 N。

    第二價格：只有一人進場時成交價為 0，0 的質量比例與保留價情形同式。
    第一價格：需要流標數，α̂* = (L_invalid / L_total)^{1/N}；只看成交價時無法識別。
    """
    tuning = resolve_tuning(tuning)
    _check_n(n_bidders)
    require_rows(ds)
    fmt = resolve_format(ds, fmt)
    diag = Diagnostics()
    q = price_quantile(ds)

    if fmt == "second_price":
        _, count, _ = split_counts(q, 0.0, tuning.mass_eps)
        share = mass_at(q, 0.0, tuning.mass_eps)
        if count < 2:
            warn(diag, "entry_mass_missing", f"成交價 0 只出現 {count} 次，無法由質量反解門檻")
            alpha_star = 0.0
            above = q
        else:
            alpha_star = invert_reserve_mass(share, n_bidders)
            prices = q.sorted_samples
            above = EmpiricalQuantile.from_samples(prices[prices > tuning.mass_eps])
            diag.residuals["mass_equation"] = float(reserve_mass_share(alpha_star, n_bidders) - share)
        diag.extras.update({"zero_price_count": count, "zero_price_share": share})
        grid, values = _sp_curve(above, n_bidders, alpha_star, floor=above.minimum)
    else:
        if not ds.info.observe_invalid_count or ds.L_invalid is None:
            raise NotIdentifiedError("第一價格進場成本、固定已知 N、只觀察成交價時，進場門檻無法識別（需要流標數）")
        stats = count_stats(ds)
        stats.require_invalid()
        share = stats.invalid_share
        alpha_star = invert_invalid_share(share, n_bidders)
        diag.extras["invalid_share"] = share
        grid, values = _fp_curve(q, n_bidders, alpha_star, tuning, diag, anchor=0.0)

    entry_cost = _entry_cost(float(values[0]), alpha_star, n_bidders, diag)
    log_event("identify", {"estimator": "entry_fixed", "alpha_star": alpha_star, "entry_cost": entry_cost})
    return IdentificationResult(
        estimator="entry_fixed",
        format=fmt,
        truncation="entry_cost",
        alpha_star=AlphaEstimate(point=alpha_star),
        n_recovered=n_bidders,
        entry_cost=entry_cost,
        v_grid=value_grid(grid, values, diag),
        diagnostics=diag,
    )


__all__ = ["id_entry_fixed", "id_fixed_nobs", "id_fp_fixed_invalid", "id_sp_fixed_price_only"]
