"""估計器共用的小工具：格式解析、警告、集合搜尋的容忍度與 jackknife。"""

from __future__ import annotations

from typing import Callable, List, Optional, Sequence

import numpy as np

from config.constants import SLACK_REFERENCE_SIZE
from config.run_config import TuningConfig

from ..error_handler import AuctionToolkitError, ConfigError, EmptySampleError
from ..logging_manager import log_warning
from ..parallel import map_ordered
from ..simulator import ObservedDataset
from .results import Diagnostics


def resolve_tuning(tuning: Optional[TuningConfig]) -> TuningConfig:
    return tuning if tuning is not None else TuningConfig()


def resolve_format(ds: ObservedDataset, fmt: Optional[str]) -> str:
    value = fmt or ds.fmt
    if value not in ("first_price", "second_price"):
        raise ConfigError("無法判斷拍賣格式，請在設定檔 design.format 指定")
    return value


def resolve_truncation(ds: ObservedDataset, truncation: Optional[str]) -> str:
    value = truncation or ds.truncation or "reserve"
    if value not in ("reserve", "entry_cost"):
        raise ConfigError(f"未知的截斷類型：{value}")
    return value


def require_rows(ds: ObservedDataset, label: str = "") -> None:
    if ds.L == 0:
        raise EmptySampleError(f"資料集沒有成交紀錄{('（' + label + '）') if label else ''}")


def warn(diagnostics: Diagnostics, event: str, message: str, **details) -> None:
    """記錄警告並附加到診斷資訊。"""
    diagnostics.warnings.append(log_warning(event, message, details))


def total_auctions(datasets: Sequence[ObservedDataset]) -> int:
    return sum(ds.L + (ds.L_invalid or 0) for ds in datasets)


def effective_slack(tuning: TuningConfig, L_total: int) -> float:
    """ε_eff = ε · √(L_ref / L)；scale_slack=False 時維持 ε。"""
    if not tuning.scale_slack or L_total <= 0:
        return tuning.set_slack
    return tuning.set_slack * float(np.sqrt(SLACK_REFERENCE_SIZE / L_total))


def grid_allowance(residual: np.ndarray, steps: Sequence[float]) -> np.ndarray:
    """網格離散化的容許誤差：½ Σ_k step_k |∂r/∂a_k|。"""
    residual = np.asarray(residual, dtype=float)
    if residual.ndim == 1:
        return 0.5 * steps[0] * np.abs(np.gradient(residual, steps[0]))
    grads = np.gradient(residual, *steps)
    return 0.5 * sum(step * np.abs(g) for step, g in zip(steps, grads))


def residual_tolerance(
    residual: np.ndarray,
    scale: np.ndarray,
    sigma: np.ndarray | float,
    slack: float,
    z: float,
    steps: Sequence[float],
) -> np.ndarray:
    """ε·scale + z·σ + 網格容許誤差。"""
    return slack * np.abs(np.asarray(scale)) + z * np.asarray(sigma) + grid_allowance(residual, steps)


def accept_residual(residual: np.ndarray, tolerance: np.ndarray) -> np.ndarray:
    residual = np.asarray(residual, dtype=float)
    return np.isfinite(residual) & (np.abs(residual) <= tolerance)


def jackknife_spread(
    compute: Callable[[List[ObservedDataset]], np.ndarray],
    datasets: Sequence[ObservedDataset],
    folds: int,
) -> np.ndarray:
    """
    刪組 jackknife 的標準差：依 auction_id % folds 分組，每次刪去一組重算。

    某一組計算失敗（例如樣本太少）時略過該組。
    """

    def run(fold: int):
        try:
            return np.asarray(compute([ds.fold_out(fold, folds) for ds in datasets]), dtype=float)
        except AuctionToolkitError:
            return None

    results = [r for r in map_ordered(run, range(folds)) if r is not None]
    if len(results) < 2:
        return np.asarray(0.0)
    stacked = np.stack(results)
    k = stacked.shape[0]
    centered = stacked - np.nanmean(stacked, axis=0)
    return np.sqrt((k - 1) / k * np.nansum(centered**2, axis=0))


__all__ = [
    "accept_residual",
    "effective_slack",
    "grid_allowance",
    "jackknife_spread",
    "require_rows",
    "residual_tolerance",
    "resolve_format",
    "resolve_truncation",
    "resolve_tuning",
    "total_auctions",
    "warn",
]
