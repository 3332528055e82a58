"""識別結果的資料模型與共用整理函式。"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field


class AlphaEstimate(BaseModel):
    """點估計（point）或由若干區間組成的集合（intervals）。"""

    point: Optional[float] = Field(default=None, description="點識別時的估計值")
    intervals: List[Tuple[float, float]] = Field(default_factory=list, description="集合識別時的接受區間")

    @property
    def is_point(self) -> bool:
        return self.point is not None

    @property
    def lower(self) -> float:
        if self.point is not None:
            return self.point
        return min(lo for lo, _ in self.intervals)

    @property
    def upper(self) -> float:
        if self.point is not None:
            return self.point
        return max(hi for _, hi in self.intervals)

    @property
    def width(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def contains(self, value: float, tolerance: float = 0.0) -> bool:
        if self.point is not None:
            return abs(self.point - value) <= tolerance
        return any(lo - tolerance <= value <= hi + tolerance for lo, hi in self.intervals)


class Diagnostics(BaseModel):
    residuals: Dict[str, float] = Field(default_factory=dict, description="方程式殘差與檢定統計量")
    bandwidths: Dict[str, float] = Field(default_factory=dict, description="使用的帶寬")
    warnings: List[str] = Field(default_factory=list, description="估計過程的警告")
    standard_errors: Dict[str, float] = Field(default_factory=dict, description="jackknife 標準誤")
    rearranged: bool = Field(default=False, description="V̂ 是否經過單調重排")
    rearrangement_share: float = Field(default=0.0, description="重排時移動的網格點比例")
    extras: Dict[str, Any] = Field(default_factory=dict)


class IdentificationResult(BaseModel):
    estimator: str
    format: Optional[str] = None
    truncation: Optional[str] = None
    alpha_star: AlphaEstimate
    thresholds: Dict[int, AlphaEstimate] = Field(default_factory=dict, description="各 N 的進場門檻")
    region: List[Tuple[float, float]] = Field(default_factory=list, description="二維集合識別的接受網格點")
    n_recovered: Optional[int] = None
    entry_cost: Optional[float] = None
    entry_cost_band: Optional[Tuple[float, float]] = None
    v_grid: List[Tuple[float, float]] = Field(default_factory=list, description="(α, V̂(α))")
    v_band: List[Tuple[float, float, float]] = Field(default_factory=list, description="(α, 下界, 上界)")
    diagnostics: Diagnostics = Field(default_factory=Diagnostics)
    config: Optional[Dict[str, Any]] = None

    def value_at(self, alphas) -> np.ndarray:
        """在 v_grid 上線性內插 V̂。"""
        grid = np.asarray(self.v_grid, dtype=float)
        return np.interp(np.asarray(alphas, dtype=float), grid[:, 0], grid[:, 1])


def monotone_rearrange(values: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    排序重排，並把相等值往上推成嚴格遞增。

    Returns:
        (重排後的值, 位置改變的比例)
    """
    values = np.asarray(values, dtype=float)
    ordered = np.sort(values)
    for i in range(1, ordered.size):
        if ordered[i] <= ordered[i - 1]:
            ordered[i] = np.nextafter(ordered[i - 1], np.inf)
    moved = float(np.mean(ordered != values)) if values.size else 0.0
    return ordered, moved


def value_grid(alphas: np.ndarray, values: np.ndarray, diagnostics: Diagnostics) -> List[Tuple[float, float]]:
    """整理 V̂；非嚴格遞增時重排並記錄在診斷資訊。"""
    values = np.asarray(values, dtype=float)
    if values.size > 1 and np.any(np.diff(values) <= 0):
        values, share = monotone_rearrange(values)
        diagnostics.rearranged = True
        diagnostics.rearrangement_share = share
    return [(float(a), float(v)) for a, v in zip(alphas, values)]


def intervals_from_mask(grid: np.ndarray, accepted: np.ndarray) -> List[Tuple[float, float]]:
    """連續被接受的網格點合併成區間；孤立點成為退化區間 (a, a)。"""
    grid = np.asarray(grid, dtype=float)
    accepted = np.asarray(accepted, dtype=bool)
    intervals: List[Tuple[float, float]] = []
    start: Optional[int] = None
    for i, ok in enumerate(accepted):
        if ok and start is None:
            start = i
        if not ok and start is not None:
            intervals.append((float(grid[start]), float(grid[i - 1])))
            start = None
    if start is not None:
        intervals.append((float(grid[start]), float(grid[-1])))
    return intervals


def set_estimate(grid: np.ndarray, accepted: np.ndarray) -> AlphaEstimate:
    intervals = intervals_from_mask(grid, accepted)
    if len(intervals) == 1 and intervals[0][0] == intervals[0][1]:
        return AlphaEstimate(point=intervals[0][0])
    return AlphaEstimate(intervals=intervals)


def band_from_curves(alphas: Sequence[float], curves: Sequence[np.ndarray]) -> List[Tuple[float, float, float]]:
    stacked = np.vstack([np.asarray(c, dtype=float) for c in curves])
    low = np.nanmin(stacked, axis=0)
    high = np.nanmax(stacked, axis=0)
    return [(float(a), float(lo), float(hi)) for a, lo, hi in zip(alphas, low, high)]


__all__ = [
    "AlphaEstimate",
    "Diagnostics",
    "IdentificationResult",
    "band_from_curves",
    "intervals_from_mask",
    "monotone_rearrange",
    "set_estimate",
    "value_grid",
]
