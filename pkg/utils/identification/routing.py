"""
結論表路由

依資訊結構、分析者假設與資料組數決定所在的列，
再以 (列, 格式, 截斷類型) 查表選出估計器；查到「無法識別」時直接報錯。
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.constants import CONCLUSION_TABLE, TABLE_ROW_LABELS
from config.run_config import AssumptionsConfig, TuningConfig

from ..error_handler import ConfigError, NotIdentifiedError
from ..logging_manager import log_event
from ..simulator import ObservedDataset
from .common import jackknife_spread, resolve_format, resolve_truncation, resolve_tuning
from .entry_population import id_entry_vary_known_set, id_entry_vary_unknown
from .fixed_population import id_entry_fixed, id_fixed_nobs, id_fp_fixed_invalid, id_sp_fixed_price_only
from .results import IdentificationResult
from .varying_population import id_fp_vary_unknown, id_sp_vary_invalid_set, id_vary_known

# 無法識別的格子對應的說明
NOT_IDENTIFIED_REASONS: Dict[Tuple[str, str, str], str] = {
    ("fixed_known_price", "first_price", "reserve"): (
        "只觀察成交價時，保留價篩選水準可在第二價格拍賣識別，但第一價格拍賣不行："
        "任取 α₂ 都能構造出產生相同成交價分佈的另一組價值分佈（見 verify counterexamples）"
    ),
    ("fixed_known_price", "first_price", "entry_cost"): (
        "只觀察成交價時，進場門檻可在第二價格拍賣識別，但第一價格拍賣不行（需要流標數或出價人數）"
    ),
    ("varying_unknown_nobs", "second_price", "reserve"): (
        "N 變動且未知時，觀察成交價與出價人數可識別第一價格拍賣，但第二價格拍賣不行："
        "兩組不同的 (人數分佈, α*) 產生相同的觀察分佈（見 verify counterexamples）"
    ),
}


def classify_information(datasets: Sequence[ObservedDataset], assumptions: AssumptionsConfig) -> str:
    """
    判斷資料落在結論表的哪一列。

    Args:
        datasets: 一組或兩組觀察資料
        assumptions: 分析者已知的出價人數與是否認定 N 會變動

    Returns:
        TABLE_ROWS 之一
    """
    if not datasets:
        raise ConfigError("至少需要一組資料")
    known = list(assumptions.known_n)
    first = datasets[0]

    if len(datasets) >= 2:
        if len(known) < 2:
            raise ConfigError("兩組資料需要兩個已知出價人數（--known-n 兩次）")
        return "varying_known_above"
    if known:
        if first.info.observe_invalid_count:
            return "fixed_known_invalid"
        return "fixed_known_price"
    if not first.info.observe_nobs:
        raise NotIdentifiedError("N 未知且沒有觀察出價人數，沒有任何估計器適用")
    if not assumptions.varying_n:
        return "fixed_unknown_nobs"
    if first.info.observe_invalid_count:
        return "varying_unknown_nobs_invalid"
    return "varying_unknown_nobs"


def lookup_estimator(row: str, fmt: str, truncation: str) -> Tuple[str, str]:
    """查結論表；回傳 (status, estimator)，無法識別時拋出 NotIdentifiedError。"""
    key = (row, fmt, truncation)
    if key not in CONCLUSION_TABLE:
        raise ConfigError(f"結論表沒有這個格子：{key}")
    status, estimator = CONCLUSION_TABLE[key]
    if status == "none":
        reason = NOT_IDENTIFIED_REASONS.get(key, "")
        raise NotIdentifiedError(f"{TABLE_ROW_LABELS[row]}・{fmt}・{truncation}：{reason}")
    return status, estimator


def choose_estimator(
    datasets: Sequence[ObservedDataset],
    assumptions: AssumptionsConfig,
    fmt: Optional[str] = None,
    truncation: Optional[str] = None,
) -> str:
    row = classify_information(datasets, assumptions)
    fmt = resolve_format(datasets[0], fmt)
    truncation = resolve_truncation(datasets[0], truncation)
    status, estimator = lookup_estimator(row, fmt, truncation)
    log_event("route", {"row": row, "format": fmt, "truncation": truncation, "status": status, "estimator": estimator})
    return estimator


def _dispatch(
    estimator: str,
    datasets: Sequence[ObservedDataset],
    known: List[int],
    tuning: TuningConfig,
    fmt: str,
    truncation: str,
) -> IdentificationResult:
    def need(count: int) -> None:
        if len(known) < count:
            raise ConfigError(f"估計器 {estimator} 需要 {count} 個已知出價人數")
        if len(datasets) < count:
            raise ConfigError(f"估計器 {estimator} 需要 {count} 組資料")

    first = datasets[0]
    runners: Dict[str, Callable[[], IdentificationResult]] = {
        "sp_fixed_price_only": lambda: id_sp_fixed_price_only(first, known[0], tuning, fmt),
        "fp_fixed_invalid": lambda: id_fp_fixed_invalid(first, known[0], tuning),
        "fixed_nobs": lambda: id_fixed_nobs(first, tuning, fmt, truncation),
        "vary_known": lambda: id_vary_known(first, datasets[1], known[0], known[1], tuning, fmt),
        "fp_vary_unknown": lambda: id_fp_vary_unknown(first, tuning),
        "sp_vary_invalid_set": lambda: id_sp_vary_invalid_set(first, tuning, fmt),
        "entry_fixed": lambda: id_entry_fixed(first, known[0], tuning, fmt),
        "entry_vary_known_set": lambda: id_entry_vary_known_set(first, datasets[1], known[0], known[1], tuning, fmt),
        "entry_vary_unknown": lambda: id_entry_vary_unknown(first, tuning, fmt),
    }
    if estimator not in runners:
        raise ConfigError(f"未知的估計器：{estimator}")
    if estimator in ("sp_fixed_price_only", "fp_fixed_invalid", "entry_fixed"):
        need(1)
    elif estimator in ("vary_known", "entry_vary_known_set"):
        need(2)
    return runners[estimator]()


def _attach_jackknife(
    result: IdentificationResult,
    estimator: str,
    datasets: Sequence[ObservedDataset],
    known: List[int],
    tuning: TuningConfig,
    fmt: str,
    truncation: str,
) -> None:
    """點估計的刪組 jackknife 標準誤，寫入 diagnostics.standard_errors。"""
    if not result.alpha_star.is_point:
        return
    quiet = tuning.model_copy(update={"jackknife": False})

    def compute(folded: List[ObservedDataset]) -> np.ndarray:
        rerun = _dispatch(estimator, folded, known, quiet, fmt, truncation)
        cost = rerun.entry_cost if rerun.entry_cost is not None else np.nan
        return np.asarray([rerun.alpha_star.point, cost], dtype=float)

    spread = np.atleast_1d(jackknife_spread(compute, datasets, tuning.jackknife_folds))
    if spread.size < 2:
        return
    result.diagnostics.standard_errors["alpha_star"] = float(spread[0])
    if result.entry_cost is not None:
        result.diagnostics.standard_errors["entry_cost"] = float(spread[1])


def run_estimator(
    estimator: str,
    datasets: Sequence[ObservedDataset],
    assumptions: Optional[AssumptionsConfig] = None,
    tuning: Optional[TuningConfig] = None,
    fmt: Optional[str] = None,
    truncation: Optional[str] = None,
) -> IdentificationResult:
    """
    執行指定估計器；estimator="auto" 時先查結論表。

    Args:
        estimator: 估計器名稱或 "auto"
        datasets: 觀察資料（兩組已知 N 時依 known_n 的順序）
        assumptions: 已知出價人數等假設
        tuning: 數值設定
        fmt: 覆蓋資料內的格式
        truncation: 覆蓋資料內的截斷類型

    Returns:
        IdentificationResult
    """
    assumptions = assumptions or AssumptionsConfig()
    tuning = resolve_tuning(tuning)
    if not datasets:
        raise ConfigError("至少需要一組資料")
    fmt = resolve_format(datasets[0], fmt)
    truncation = resolve_truncation(datasets[0], truncation)
    if estimator == "auto":
        estimator = choose_estimator(datasets, assumptions, fmt, truncation)
    known = list(assumptions.known_n)
    result = _dispatch(estimator, datasets, known, tuning, fmt, truncation)
    if tuning.jackknife:
        _attach_jackknife(result, estimator, datasets, known, tuning, fmt, truncation)
    return result


__all__ = [
    "NOT_IDENTIFIED_REASONS",
    "choose_estimator",
    "classify_information",
    "lookup_estimator",
    "run_estimator",
]
