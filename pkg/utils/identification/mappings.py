"""
由成交價分位數回推價值曲線 V̂(α)

第二價格：V̂(α) = T(ψ(α))，ψ 為第二高類型在截斷後的分佈。
第一價格：先把成交價分位數改寫為類型空間的出價 b̂(α) = T(u(α))，
再由一階條件 V = b + α b′ / (N−1) 回推價值。
"""

from __future__ import annotations

from typing import Callable, Optional, Tuple

import numpy as np

from config.constants import VALUE_GRID_POINTS

from ..empirics import EmpiricalQuantile, default_bandwidth, eq_eval


def second_highest_cdf(alpha, n: int):
    """φ_N(α) = α^N + N α^{N−1} (1−α)。"""
    alpha = np.asarray(alpha, dtype=float)
    return alpha**n + n * alpha ** (n - 1) * (1.0 - alpha)


def truncated_second_highest(alpha, n: int, lower: float):
    """(φ_N(α) − φ_N(a)) / (1 − φ_N(a))。"""
    base = second_highest_cdf(lower, n)
    return (second_highest_cdf(alpha, n) - base) / (1.0 - base)


def sp_value_curve(q: EmpiricalQuantile, alphas: np.ndarray, n: int, lower: float) -> np.ndarray:
    """V̂(α) = T((φ_N(α) − φ_N(α*)) / (1 − φ_N(α*)))。"""
    u = np.clip(truncated_second_highest(alphas, n, lower), 0.0, 1.0)
    return np.asarray(eq_eval(q, u))


def sp_top_value_curve(q: EmpiricalQuantile, alphas: np.ndarray, n: int, lower: float) -> np.ndarray:
    """全員進場的 N 人第二價格拍賣：V̂(α) = T(φ_N((α − a)/(1 − a)))。"""
    w = np.clip((np.asarray(alphas, dtype=float) - lower) / (1.0 - lower), 0.0, 1.0)
    return np.asarray(eq_eval(q, np.clip(second_highest_cdf(w, n), 0.0, 1.0)))


def fixed_top_quantile(n: int, lower: float) -> Callable[[np.ndarray], np.ndarray]:
    """固定 N：最高類型 α 在截斷後的分位 u = (α^N − a^N)/(1 − a^N)。"""
    base = lower**n

    def to_u(alpha: np.ndarray) -> np.ndarray:
        return (np.asarray(alpha, dtype=float) ** n - base) / (1.0 - base)

    return to_u


def varying_top_quantile(n_max: int, lower: float) -> Callable[[np.ndarray], np.ndarray]:
    """全員進場的 N̄ 人拍賣：u = ((α − a)/(1 − a))^N̄。"""

    def to_u(alpha: np.ndarray) -> np.ndarray:
        w = (np.asarray(alpha, dtype=float) - lower) / (1.0 - lower)
        return np.clip(w, 0.0, 1.0) ** n_max

    return to_u


def bid_curve(
    q: EmpiricalQuantile,
    alphas: np.ndarray,
    to_u: Callable[[np.ndarray], np.ndarray],
    lower: float,
    eta: float,
    anchor: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    類型空間的出價 b̂(α) 與其導數。

    導數以步長 η 的中央差分估計；靠近 α* 或 1 時改用單側二階差分。
    anchor 給定時 b̂(α*) 固定為該值（進場成本下門檻類型出價為 0）。
    """
    alphas = np.asarray(alphas, dtype=float)

    def bids_at(points: np.ndarray) -> np.ndarray:
        points = np.clip(np.asarray(points, dtype=float), lower, 1.0)
        values = np.asarray(eq_eval(q, np.clip(to_u(points), 0.0, 1.0)), dtype=float)
        if anchor is not None:
            values = np.where(points <= lower, anchor, values)
        return values

    bids = bids_at(alphas)
    central = (bids_at(alphas + eta) - bids_at(alphas - eta)) / (2.0 * eta)
    forward = (-3.0 * bids + 4.0 * bids_at(alphas + eta) - bids_at(alphas + 2.0 * eta)) / (2.0 * eta)
    backward = (3.0 * bids - 4.0 * bids_at(alphas - eta) + bids_at(alphas - 2.0 * eta)) / (2.0 * eta)
    slopes = np.where(alphas - eta < lower, forward, np.where(alphas + eta > 1.0, backward, central))
    return bids, slopes


def fp_value_curve(
    q: EmpiricalQuantile,
    alphas: np.ndarray,
    to_u: Callable[[np.ndarray], np.ndarray],
    n: int,
    lower: float,
    eta: Optional[float] = None,
    slope_factor: float = 1.0,
    anchor: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    V̂(α) = b̂(α) + α b̂′(α) · slope_factor / (N−1)。

    Returns:
        (b̂, V̂)
    """
    eta = default_bandwidth(q.n) if eta is None else eta
    bids, slopes = bid_curve(q, alphas, to_u, lower, eta, anchor)
    values = bids + np.asarray(alphas) * slopes * slope_factor / (n - 1)
    return bids, values


def printed_slope_factor(n: int, lower: float) -> float:
    """沿用原始公式時導數多乘的因子 (1 − a^N)/(1 − a)。"""
    if lower <= 0.0:
        return 1.0
    return (1.0 - lower**n) / (1.0 - lower)


def alpha_grid(lower: float, points: int = VALUE_GRID_POINTS) -> np.ndarray:
    return np.linspace(lower, 1.0, points)


__all__ = [
    "alpha_grid",
    "bid_curve",
    "fixed_top_quantile",
    "fp_value_curve",
    "printed_slope_factor",
    "second_highest_cdf",
    "sp_top_value_curve",
    "sp_value_curve",
    "truncated_second_highest",
    "varying_top_quantile",
]
