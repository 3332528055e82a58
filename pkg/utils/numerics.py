"""積分與求根的共用包裝（scipy）。"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from config.constants import QUAD_EPSABS, QUAD_LIMIT, ROOT_MAXITER, ROOT_XTOL

from .error_handler import RootBracketError


def integrate_scalar(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    points: Optional[Sequence[float]] = None,
) -> float:
    """
    以 quad 積分；points 為被積函數的折點（例如分段線性分位數的節點）。

    quad 的折點數必須少於 QUAD_LIMIT，節點較多時依序分段積分再加總。
    """
    if upper <= lower:
        return 0.0
    inner = np.unique([p for p in points if lower < p < upper]) if points is not None else np.empty(0)
    chunk = QUAD_LIMIT // 2
    if inner.size <= chunk:
        value, _ = integrate.quad(
            func, lower, upper, epsabs=QUAD_EPSABS, limit=QUAD_LIMIT, points=list(inner) if inner.size else None
        )
        return float(value)
    edges = np.concatenate([[lower], inner[chunk::chunk], [upper]])
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        total += integrate_scalar(func, float(left), float(right), points=inner)
    return total


def find_root(func: Callable[[float], float], lower: float, upper: float, label: str = "root") -> float:
    """
    二分法求根。

    兩端同號時拋出 RootBracketError；端點剛好為根時直接回傳。
    """
    f_lo = func(lower)
    if f_lo == 0.0:
        return float(lower)
    f_hi = func(upper)
    if f_hi == 0.0:
        return float(upper)
    if np.sign(f_lo) == np.sign(f_hi):
        raise RootBracketError(f"{label}: 區間 [{lower:.6g}, {upper:.6g}] 兩端同號（{f_lo:.3g}, {f_hi:.3g}）")
    return float(optimize.bisect(func, lower, upper, xtol=ROOT_XTOL, maxiter=ROOT_MAXITER))


@lru_cache(maxsize=8)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """[-1, 1] 上的 Gauss-Legendre 節點與權重。"""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def integrate_on_intervals(func: Callable[[np.ndarray], np.ndarray], lower: np.ndarray, upper: float, order: int) -> np.ndarray:
    """
    對每個下界 a_i 同時計算 ∫_{a_i}^{upper} func(t) dt。

    Args:
        func: 可向量化的被積函數
        lower: 下界陣列
        upper: 共同上界
        order: Gauss-Legendre 節點數

    Returns:
        與 lower 同形狀的積分值
    """
    nodes, weights = gauss_legendre(order)
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    half = 0.5 * (upper - lower)
    mid = 0.5 * (upper + lower)
    t = mid[:, None] + half[:, None] * nodes[None, :]
    return half * (func(t) @ weights)


__all__ = ["find_root", "gauss_legendre", "integrate_on_intervals", "integrate_scalar"]
