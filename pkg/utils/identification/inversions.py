"""
單調方程式的反解

每個目標函數 f(α) 在 (0,1) 上單調，先在網格上確認單調性，
再以二分法解 f(α) = y。y 超出 f 的值域時拋出 RootBracketError。
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from config.constants import MONOTONE_CHECK_POINTS

from ..error_handler import DomainError, InconsistentDataError, RootBracketError
from ..numerics import find_root

_EDGE = 1e-12


def geometric_sum(alpha, n: int):
    """S_n(α) = Σ_{j=0}^{n−1} α^j。"""
    alpha = np.asarray(alpha, dtype=float)
    return sum(alpha**j for j in range(n))


def weighted_sum(alpha, n: int):
    """D_n(α) = Σ_{j=0}^{n−2} (j+1) α^j。"""
    alpha = np.asarray(alpha, dtype=float)
    return sum((j + 1) * alpha**j for j in range(n - 1))


def reserve_mass_share(alpha, n: int):
    """成交價落在保留價的比例：N α^{N−1} / S_N(α)。"""
    alpha = np.asarray(alpha, dtype=float)
    return n * alpha ** (n - 1) / geometric_sum(alpha, n)


def full_entry_share(alpha, n: int):
    """n_obs = N 的比例：(1−α)^{N−1} / S_N(α)。"""
    alpha = np.asarray(alpha, dtype=float)
    return (1.0 - alpha) ** (n - 1) / geometric_sum(alpha, n)


def fp_boundary_ratio(alpha, n_high: int, n_low: int):
    """兩組第一價格資料在最低價處的曲率比：α^{N1−N2} S_{N2}/S_{N1}。"""
    alpha = np.asarray(alpha, dtype=float)
    return alpha ** (n_high - n_low) * geometric_sum(alpha, n_low) / geometric_sum(alpha, n_high)


def sp_boundary_ratio(alpha, n_high: int, n_low: int):
    """兩組第二價格資料在最低價處的斜率比：α^{N1−N2} D_{N2}/D_{N1}。"""
    alpha = np.asarray(alpha, dtype=float)
    return alpha ** (n_high - n_low) * weighted_sum(alpha, n_low) / weighted_sum(alpha, n_high)


@lru_cache(maxsize=64)
def _monotone_direction(name: str, n_high: int, n_low: int) -> int:
    func = _TARGETS[name]
    grid = np.linspace(_EDGE, 1.0 - 1e-6, MONOTONE_CHECK_POINTS)
    values = func(grid, n_high, n_low)
    steps = np.diff(values)
    if np.all(steps > 0):
        return 1
    if np.all(steps < 0):
        return -1
    raise InconsistentDataError(f"目標函數 {name}(N={n_high},{n_low}) 在網格上非單調，無法唯一反解")


_TARGETS: dict[str, Callable] = {
    "reserve_mass": lambda a, n, _: reserve_mass_share(a, n),
    "full_entry": lambda a, n, _: full_entry_share(a, n),
    "fp_boundary": fp_boundary_ratio,
    "sp_boundary": sp_boundary_ratio,
}


def _solve(name: str, target: float, n_high: int, n_low: int = 0) -> float:
    func = _TARGETS[name]
    _monotone_direction(name, n_high, n_low)
    lo, hi = _EDGE, 1.0 - _EDGE

    def residual(a: float) -> float:
        return float(func(a, n_high, n_low)) - target

    return find_root(residual, lo, hi, label=name)


def invert_reserve_mass(share: float, n_bidders: int) -> float:
    """
    由保留價上的質量比例反解 α*。

    比例為 0 時回傳 0；比例 ≥ 1（上確界）時方程式無解。
    """
    if n_bidders < 2:
        raise DomainError("保留價質量反解需要 N ≥ 2")
    if share <= 0.0:
        return 0.0
    if share >= 1.0:
        raise RootBracketError(f"保留價質量比例 {share:.6g} 不小於上確界 1")
    return _solve("reserve_mass", share, n_bidders)


def invert_invalid_share(share: float, n_bidders: int) -> float:
    """流標比例 = α^N。"""
    if not 0.0 <= share < 1.0:
        raise RootBracketError(f"流標比例 {share:.6g} 必須位於 [0, 1)")
    return float(share ** (1.0 / n_bidders))


def invert_full_entry_share(share: float, n_bidders: int) -> float:
    """由 n_obs = N 的比例反解 α*（遞減函數，比例 1 對應 α* = 0）。"""
    if n_bidders < 2:
        raise DomainError("出價人數比例反解需要 N ≥ 2")
    if share >= 1.0:
        return 0.0
    if share <= 0.0:
        raise RootBracketError("n_obs = N 的比例為 0，無法反解")
    return _solve("full_entry", share, n_bidders)


def alpha_from_odds(odds: float, n_max: int) -> float:
    """α = r / (N̄ + r)，r 為 α/(1−α) 乘上 N̄ 的比值。"""
    if odds < 0:
        raise RootBracketError(f"比值 {odds:.6g} 不可為負")
    return float(odds / (n_max + odds))


def invert_boundary_ratio(kind: str, target: float, n_high: int, n_low: int) -> float:
    """
    解兩組資料的邊界比值方程式。

    kind 為 "fp"（曲率比）或 "sp"（斜率比）；值域為 (0, sup)，
    sup 為 α → 1 的極限。
    """
    if n_high <= n_low:
        raise DomainError("需要 N1 > N2")
    if kind == "fp":
        sup = n_low / n_high
        name = "fp_boundary"
    else:
        if n_low < 2:
            raise DomainError("第二價格比值方程式需要 N2 ≥ 2")
        sup = n_low * (n_low - 1) / (n_high * (n_high - 1))
        name = "sp_boundary"
    if target <= 0.0:
        return 0.0
    if target >= sup:
        raise RootBracketError(f"邊界比值 {target:.6g} 不小於上確界 {sup:.6g}")
    return _solve(name, target, n_high, n_low)


__all__ = [
    "alpha_from_odds",
    "full_entry_share",
    "fp_boundary_ratio",
    "geometric_sum",
    "invert_boundary_ratio",
    "invert_full_entry_share",
    "invert_invalid_share",
    "invert_reserve_mass",
    "reserve_mass_share",
    "sp_boundary_ratio",
    "weighted_sum",
]
