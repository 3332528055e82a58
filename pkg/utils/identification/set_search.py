"""
二維網格上的集合識別搜尋

residual_fn(stats, A1, A2) 回傳 [(殘差面, 尺度面), ...]；
抽樣雜訊以 jackknife 重算 stats 後的殘差面標準差估計。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from config.run_config import TuningConfig

from ..simulator import ObservedDataset
from .common import accept_residual, effective_slack, jackknife_spread, residual_tolerance, total_auctions
from .results import AlphaEstimate, set_estimate

ResidualFn = Callable[[np.ndarray, np.ndarray, np.ndarray], List[Tuple[np.ndarray, np.ndarray]]]


@dataclass
class SurfaceSearch:
    grid: np.ndarray
    first: np.ndarray
    second: np.ndarray
    accepted: np.ndarray
    residuals: List[np.ndarray]
    tolerances: List[np.ndarray]
    slack: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.first[self.accepted], self.second[self.accepted])]

    def best_index(self) -> Tuple[int, int]:
        """接受點中標準化殘差和最小者。"""
        score = sum(np.abs(r) / np.maximum(t, 1e-15) for r, t in zip(self.residuals, self.tolerances))
        score = np.where(self.accepted, score, np.inf)
        return np.unravel_index(int(np.argmin(score)), score.shape)

    def estimate(self, axis: int) -> AlphaEstimate:
        """接受集合在某一軸上的投影；只有一個接受點時回傳該點。"""
        if int(self.accepted.sum()) == 1:
            return AlphaEstimate(point=float((self.first, self.second)[axis][self.best_index()]))
        return set_estimate(self.grid, np.any(self.accepted, axis=1 - axis))


def surface_grid(step: float) -> np.ndarray:
    count = int(np.floor((1.0 - 1e-12) / step))
    return step * np.arange(1, count + 1)


def search_surface(
    datasets: Sequence[ObservedDataset],
    stats_fn: Callable[[Sequence[ObservedDataset]], np.ndarray],
    residual_fn: ResidualFn,
    constraint_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    tuning: TuningConfig,
) -> SurfaceSearch:
    """
    在 (a1, a2) ∈ (0,1)² 網格上找出所有方程式都在容忍度內的點。

    Args:
        datasets: 用於計算統計量的資料集（jackknife 也以此分組）
        stats_fn: 資料 → 統計量向量
        residual_fn: 統計量與網格 → 各方程式的殘差與尺度
        constraint_fn: 網格 → 可行區域（布林）
        tuning: 網格步長、ε、z 等設定
    """
    step = tuning.grid_step_2d
    grid = surface_grid(step)
    first, second = np.meshgrid(grid, grid, indexing="ij")
    stats = stats_fn(datasets)
    equations = residual_fn(stats, first, second)

    if tuning.noise_z > 0:
        spread = jackknife_spread(
            lambda dss: np.stack([r for r, _ in residual_fn(stats_fn(dss), first, second)]),
            datasets,
            tuning.jackknife_folds,
        )
        sigmas = [spread[i] if np.ndim(spread) else spread for i in range(len(equations))]
    else:
        sigmas = [np.zeros_like(first) for _ in equations]

    slack = effective_slack(tuning, total_auctions(datasets))
    accepted = np.asarray(constraint_fn(first, second), dtype=bool)
    tolerances = []
    for (residual, scale), sigma in zip(equations, sigmas):
        tolerance = residual_tolerance(residual, scale, sigma, slack, tuning.noise_z, (step, step))
        accepted &= accept_residual(residual, tolerance)
        tolerances.append(tolerance)
    return SurfaceSearch(
        grid=grid,
        first=first,
        second=second,
        accepted=accepted,
        residuals=[r for r, _ in equations],
        tolerances=tolerances,
        slack=slack,
    )


__all__ = ["SurfaceSearch", "search_surface", "surface_grid"]
