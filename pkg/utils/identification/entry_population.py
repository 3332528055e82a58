"""
進場成本下、出價人數會變動時的識別

- entry_vary_known_set：兩組已知 N 的資料，二維網格上的集合識別
- entry_vary_unknown：N 未知、觀察出價人數；第一價格為點識別，第二價格為集合識別
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from config.constants import MIN_CELL_ROWS
from config.run_config import TuningConfig

from ..empirics import EmpiricalQuantile, count_stats, default_bandwidth, ecdf, eq_deriv, eq_eval, mass_at, price_quantile
from ..error_handler import DomainError, InconsistentDataError, NotIdentifiedError
from ..logging_manager import log_event
from ..simulator import ObservedDataset
from .common import require_rows, resolve_format, resolve_tuning, warn
from .inversions import alpha_from_odds
from .mappings import (
    alpha_grid,
    fixed_top_quantile,
    fp_value_curve,
    second_highest_cdf,
    sp_top_value_curve,
    sp_value_curve,
    varying_top_quantile,
)
from .results import AlphaEstimate, Diagnostics, IdentificationResult, band_from_curves, value_grid
from .set_search import SurfaceSearch, search_surface
from .varying_population import _clamp_share, _top_tail_check, top_two_cells


def _positive_prices(ds: ObservedDataset, eps: float) -> EmpiricalQuantile:
    """去掉單一進場者的 0 成交價。"""
    prices = ds.prices
    if mass_at(price_quantile(ds), 0.0, eps) > 0.0:
        prices = prices[prices > eps]
    return EmpiricalQuantile.from_samples(prices)


def _no_region(search: SurfaceSearch) -> None:
    if not np.any(search.accepted):
        raise InconsistentDataError("二維網格上沒有任何點同時滿足兩條方程式，資料與模型不一致")


def id_entry_vary_known_set(
    ds_first: ObservedDataset,
    ds_second: ObservedDataset,
    n_first: int,
    n_second: int,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
) -> IdentificationResult:
    """
    進場成本、兩組已知 N 的資料、只觀察正的成交價。

    第一價格：兩組回推的 V(1) 相同、F 相同，兩條方程式；
    第二價格：兩組最低價給出 F 相同，加上低 N 資料在高 N 最低價處的 CDF。
    接受集合以 (α_{N_first}, α_{N_second}) 的順序回報。
    """
    tuning = resolve_tuning(tuning)
    require_rows(ds_first, "第一組")
    require_rows(ds_second, "第二組")
    fmt = resolve_format(ds_first, fmt)
    if n_first == n_second:
        raise DomainError("兩組資料的出價人數必須不同")
    swap = n_first < n_second
    ds_hi, ds_lo = (ds_second, ds_first) if swap else (ds_first, ds_second)
    n_hi, n_lo = max(n_first, n_second), min(n_first, n_second)
    if n_lo < 2:
        raise DomainError("兩組資料的出價人數都必須 ≥ 2")
    diag = Diagnostics()
    eps = tuning.mass_eps

    if fmt == "first_price":

        def stats_fn(dss: Sequence[ObservedDataset]) -> np.ndarray:
            out = []
            for ds in dss:
                q = price_quantile(ds)
                h = tuning.bandwidth or default_bandwidth(q.n)
                out.extend([q.maximum, eq_deriv(q, 1.0, h), eq_deriv(q, 0.0, h)])
            return np.asarray(out)

        def residual_fn(stats, a_hi, a_lo):
            top_hi, slope1_hi, slope0_hi, top_lo, slope1_lo, slope0_lo = stats
            c_hi = n_hi / (n_hi - 1) / (1.0 - a_hi**n_hi)
            c_lo = n_lo / (n_lo - 1) / (1.0 - a_lo**n_lo)
            left1 = top_hi + c_hi * slope1_hi
            right1 = top_lo + c_lo * slope1_lo
            left2 = c_hi * a_hi ** (2 * n_hi - 1) * slope0_hi
            right2 = c_lo * a_lo ** (2 * n_lo - 1) * slope0_lo
            return [
                (left1 - right1, np.maximum(np.abs(left1), np.abs(right1))),
                (left2 - right2, np.maximum(np.abs(left2), np.abs(right2))),
            ]

        def cost_surface(stats, a_hi):
            return n_hi / (n_hi - 1) * a_hi ** (2 * n_hi - 1) / (1.0 - a_hi**n_hi) * stats[2]

    else:

        def stats_fn(dss: Sequence[ObservedDataset]) -> np.ndarray:
            q_hi = _positive_prices(dss[0], eps)
            q_lo = _positive_prices(dss[1], eps)
            return np.asarray([q_hi.minimum, q_lo.minimum, float(ecdf(q_lo, q_hi.minimum))])

        def residual_fn(stats, a_hi, a_lo):
            min_hi, min_lo, cdf_lo = stats
            predicted = (second_highest_cdf(a_hi, n_lo) - second_highest_cdf(a_lo, n_lo)) / (1.0 - second_highest_cdf(a_lo, n_lo))
            left2 = min_hi * a_hi ** (n_hi - 1)
            right2 = min_lo * a_lo ** (n_lo - 1)
            return [
                (predicted - cdf_lo, np.maximum(np.abs(predicted), abs(cdf_lo))),
                (left2 - right2, np.maximum(np.abs(left2), np.abs(right2))),
            ]

        def cost_surface(stats, a_hi):
            return stats[0] * a_hi ** (n_hi - 1)

    datasets = [ds_hi, ds_lo]
    search = search_surface(datasets, stats_fn, residual_fn, lambda a_hi, a_lo: a_hi > a_lo, tuning)
    _no_region(search)
    stats = stats_fn(datasets)

    best = search.best_index()
    best_hi = float(search.first[best])
    best_lo = float(search.second[best])
    costs = cost_surface(stats, search.first)[search.accepted]
    entry_cost = float(cost_surface(stats, np.asarray(best_hi)))
    diag.residuals.update({"slack": search.slack})
    diag.extras.update({"accepted_points": int(search.accepted.sum()), "representative": [best_hi, best_lo]})

    est_hi = search.estimate(0)
    est_lo = search.estimate(1)

    q_hi = price_quantile(ds_hi) if fmt == "first_price" else _positive_prices(ds_hi, eps)
    alphas = alpha_grid(est_hi.lower)

    def curve(a: float) -> np.ndarray:
        if fmt == "first_price":
            return fp_value_curve(q_hi, alphas, fixed_top_quantile(n_hi, a), n_hi, a, eta=tuning.bandwidth, anchor=0.0)[1]
        return sp_value_curve(q_hi, alphas, n_hi, a)

    values = curve(best_hi)
    band = band_from_curves(alphas, [curve(est_hi.lower), curve(est_hi.upper)])

    points = search.points
    region = [(b, a) for a, b in points] if swap else points
    thresholds = {n_hi: est_hi, n_lo: est_lo}
    log_event("identify", {"estimator": "entry_vary_known_set", "accepted": len(points)})
    return IdentificationResult(
        estimator="entry_vary_known_set",
        format=fmt,
        truncation="entry_cost",
        alpha_star=thresholds[n_first],
        thresholds={n_first: thresholds[n_first], n_second: thresholds[n_second]},
        region=region,
        entry_cost=entry_cost,
        entry_cost_band=(float(np.min(costs)), float(np.max(costs))),
        v_grid=value_grid(alphas, values, diag),
        v_band=band,
        diagnostics=diag,
    )


def _fp_entry_vary_unknown(ds: ObservedDataset, tuning: TuningConfig) -> IdentificationResult:
    diag = Diagnostics()
    n_max, q_top, q_sub, odds = top_two_cells(ds)
    delta = tuning.tail_delta
    h_top = tuning.bandwidth or default_bandwidth(q_top.n)
    h_sub = tuning.bandwidth or default_bandwidth(q_sub.n)
    diag.bandwidths.update({"top": h_top, "sub": h_sub, "tail_delta": delta})

    if _top_tail_check(q_top, q_sub, diag):
        cut = eq_eval(q_top, 1.0 - delta)
        survival = float(np.mean(q_sub.sorted_samples > cut))
        p_hat = _clamp_share(survival / (1.0 - (1.0 - delta) ** ((n_max - 1) / n_max)), diag)
        limit = n_max * eq_deriv(q_top, 1.0, h_top) / ((n_max - 1) * eq_deriv(q_sub, 1.0, h_sub))
        diag.residuals["limit_ratio"] = float(limit)
        diag.extras.update({"tail_cut": cut, "tail_survival": survival})
    else:
        warn(diag, "tail_gap", "N̄−1 人成交價的上尾低於 N̄ 人，判定 N̄ 人拍賣都全員進場")
        p_hat = 0.0

    alpha_star = alpha_from_odds(p_hat * odds, n_max)
    grid = alpha_grid(alpha_star)
    _, values = fp_value_curve(
        q_top, grid, varying_top_quantile(n_max, alpha_star), n_max, alpha_star, eta=tuning.bandwidth, anchor=0.0
    )
    entry_cost = float(values[0] * alpha_star ** (n_max - 1))
    if entry_cost <= 1e-6:
        warn(diag, "entry_cost_zero", "估計的進場成本與 0 無法區分")
    diag.extras.update({"p_hat": p_hat, "count_ratio": odds, "top_bid": q_top.maximum})
    estimate = AlphaEstimate(point=alpha_star)
    log_event("identify", {"estimator": "entry_vary_unknown", "alpha_star": alpha_star, "entry_cost": entry_cost})
    return IdentificationResult(
        estimator="entry_vary_unknown",
        format="first_price",
        truncation="entry_cost",
        alpha_star=estimate,
        thresholds={n_max: estimate},
        n_recovered=n_max,
        entry_cost=entry_cost,
        v_grid=value_grid(grid, values, diag),
        diagnostics=diag,
    )


def _sp_entry_vary_unknown(ds: ObservedDataset, tuning: TuningConfig) -> IdentificationResult:
    diag = Diagnostics()
    cells = count_stats(ds)
    n_max = cells.require_max()
    if n_max < 3:
        raise NotIdentifiedError("第二價格進場成本、N 未知時，需要至少 N̄ ≥ 3 才能由最低價回推門檻價值")
    for k in (n_max, n_max - 1):
        rows = cells.counts.get(k, 0)
        if rows == 0:
            raise InconsistentDataError(f"沒有 n_obs={k} 的成交紀錄")
        if rows < MIN_CELL_ROWS:
            warn(diag, "thin_cell", f"n_obs={k} 只有 {rows} 筆，最低價估計不穩定")

    def stats_fn(dss: Sequence[ObservedDataset]) -> np.ndarray:
        n_top = dss[0].prices_with(n_max)
        n_sub = dss[0].prices_with(n_max - 1)
        min_top = float(np.min(n_top))
        return np.asarray(
            [min_top, float(np.min(n_sub)), float(np.mean(n_sub <= min_top)), n_sub.size / n_top.size]
        )

    def residual_fn(stats, a_top, a_sub):
        min_top, min_sub, cdf_sub, ratio = stats
        left1 = min_top * a_top ** (n_max - 1)
        right1 = min_sub * a_sub ** (n_max - 2)
        weight = ratio - n_max * a_top / (1.0 - a_top)
        w = np.clip((a_top - a_sub) / (1.0 - a_sub), 0.0, 1.0)
        predicted = weight * second_highest_cdf(w, n_max - 1)
        observed = cdf_sub * ratio
        return [
            (left1 - right1, np.maximum(np.abs(left1), np.abs(right1))),
            (observed - predicted, np.maximum(np.abs(observed), np.abs(predicted))),
        ]

    stats = stats_fn([ds])
    ratio0 = float(stats[3])

    def feasible(a_top, a_sub):
        return (a_top > a_sub) & (n_max * a_top / (1.0 - a_top) <= ratio0)

    search = search_surface([ds], stats_fn, residual_fn, feasible, tuning)
    _no_region(search)
    best = search.best_index()
    best_top = float(search.first[best])
    costs = stats[0] * search.first[search.accepted] ** (n_max - 1)

    est_top = search.estimate(0)
    est_sub = search.estimate(1)

    q_top = EmpiricalQuantile.from_samples(ds.prices_with(n_max))
    alphas = alpha_grid(est_top.lower)
    values = sp_top_value_curve(q_top, alphas, n_max, best_top)
    band = band_from_curves(alphas, [sp_top_value_curve(q_top, alphas, n_max, a) for a in (est_top.lower, est_top.upper)])
    diag.residuals["slack"] = search.slack
    diag.extras.update({"accepted_points": int(search.accepted.sum()), "count_ratio": ratio0})
    log_event("identify", {"estimator": "entry_vary_unknown", "accepted": int(search.accepted.sum())})
    return IdentificationResult(
        estimator="entry_vary_unknown",
        format="second_price",
        truncation="entry_cost",
        alpha_star=est_top,
        thresholds={n_max: est_top, n_max - 1: est_sub},
        region=search.points,
        n_recovered=n_max,
        entry_cost=float(stats[0] * best_top ** (n_max - 1)),
        entry_cost_band=(float(np.min(costs)), float(np.max(costs))),
        v_grid=value_grid(alphas, values, diag),
        v_band=band,
        diagnostics=diag,
    )


def id_entry_vary_unknown(
    ds: ObservedDataset,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
) -> IdentificationResult:
    """
    進場成本、N 變動且未知、觀察出價人數。

    第一價格：由 N̄ 與 N̄−1 人成交價的上尾比例得到 p̂，再由人數比得到 α̂*_N̄ 與 F̂。
    第二價格：兩個門檻 (α*_N̄, α*_{N̄−1}) 的二維集合識別。
    """
    tuning = resolve_tuning(tuning)
    require_rows(ds)
    fmt = resolve_format(ds, fmt)
    if fmt == "first_price":
        return _fp_entry_vary_unknown(ds, tuning)
    return _sp_entry_vary_unknown(ds, tuning)


__all__ = ["id_entry_vary_known_set", "id_entry_vary_unknown"]
