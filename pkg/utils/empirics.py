"""
經驗分位數與計數統計

分位數採 type-7 線性內插：Q(u) 在 u·(n−1) 的位置內插排序樣本。
導數以有限差分估計，靠近端點時改用單側的二階差分。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from config.constants import BANDWIDTH_EXPONENT, BANDWIDTH_SCALE, SECOND_DERIV_EXPONENT, SECOND_DERIV_SCALE

from .error_handler import DomainError, EmptySampleError, MissingObservableError
from .simulator import ObservedDataset


@dataclass(frozen=True)
class EmpiricalQuantile:
    sorted_samples: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalQuantile":
        data = np.sort(np.asarray(samples, dtype=float))
        if data.size == 0:
            raise EmptySampleError("樣本為空，無法建立經驗分位數")
        if np.any(~np.isfinite(data)):
            raise DomainError("樣本含有非有限值")
        return cls(sorted_samples=data)

    @property
    def n(self) -> int:
        return int(self.sorted_samples.size)

    @property
    def minimum(self) -> float:
        return float(self.sorted_samples[0])

    @property
    def maximum(self) -> float:
        return float(self.sorted_samples[-1])

    @property
    def span(self) -> float:
        return self.maximum - self.minimum


def default_bandwidth(n: int) -> float:
    return BANDWIDTH_SCALE * n**BANDWIDTH_EXPONENT


def default_second_bandwidth(n: int) -> float:
    return SECOND_DERIV_SCALE * n**SECOND_DERIV_EXPONENT


def eq_eval(q: EmpiricalQuantile, u):
    """Q(u)，u ∈ [0,1]。"""
    scalar = np.ndim(u) == 0
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0.0) or np.any(u_arr > 1.0) or np.any(~np.isfinite(u_arr)):
        raise DomainError(f"分位 u 必須位於 [0, 1]：{u}")
    n = q.n
    if n == 1:
        out = np.full(u_arr.shape, q.sorted_samples[0])
    else:
        out = np.interp(u_arr * (n - 1), np.arange(n), q.sorted_samples)
    return float(out) if scalar else out


def eq_deriv(q: EmpiricalQuantile, u, h: Optional[float] = None):
    """
    Q′(u) 的差分估計。

    內部：[Q(min(u+h,1)) − Q(max(u−h,0))] / (min(u+h,1) − max(u−h,0))
    u 剛好為 0 或 1：單側二階差分 (−3Q(0) + 4Q(h) − Q(2h)) / (2h)
    """
    h = default_bandwidth(q.n) if h is None else h
    if not 0.0 < h < 0.5:
        raise DomainError(f"帶寬 h 必須位於 (0, 0.5)：{h}")
    scalar = np.ndim(u) == 0
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr < 0.0) or np.any(u_arr > 1.0):
        raise DomainError(f"分位 u 必須位於 [0, 1]：{u}")

    hi = np.minimum(u_arr + h, 1.0)
    lo = np.maximum(u_arr - h, 0.0)
    out = (eq_eval(q, hi) - eq_eval(q, lo)) / (hi - lo)

    at_zero = u_arr == 0.0
    if np.any(at_zero):
        out[at_zero] = (-3.0 * eq_eval(q, 0.0) + 4.0 * eq_eval(q, h) - eq_eval(q, 2.0 * h)) / (2.0 * h)
    at_one = u_arr == 1.0
    if np.any(at_one):
        out[at_one] = (3.0 * eq_eval(q, 1.0) - 4.0 * eq_eval(q, 1.0 - h) + eq_eval(q, 1.0 - 2.0 * h)) / (2.0 * h)
    return float(out[0]) if scalar else out


def eq_second_deriv(q: EmpiricalQuantile, u: float, h: Optional[float] = None) -> float:
    """Q″(u)；u 靠近端點時改用單側差分。"""
    h = default_second_bandwidth(q.n) if h is None else h
    if not 0.0 < h < 1.0 / 3.0:
        raise DomainError(f"二階帶寬 h 必須位於 (0, 1/3)：{h}")
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"分位 u 必須位於 [0, 1]：{u}")
    if u - h < 0.0:
        return (eq_eval(q, u) - 2.0 * eq_eval(q, u + h) + eq_eval(q, u + 2.0 * h)) / h**2
    if u + h > 1.0:
        return (eq_eval(q, u) - 2.0 * eq_eval(q, u - h) + eq_eval(q, u - 2.0 * h)) / h**2
    return (eq_eval(q, u + h) - 2.0 * eq_eval(q, u) + eq_eval(q, u - h)) / h**2


def eq_secant(q: EmpiricalQuantile, u_lo: float, u_hi: float) -> float:
    if not 0.0 <= u_lo < u_hi <= 1.0:
        raise DomainError(f"需要 0 ≤ u_lo < u_hi ≤ 1：{u_lo}, {u_hi}")
    return (eq_eval(q, u_hi) - eq_eval(q, u_lo)) / (u_hi - u_lo)


def ecdf(q: EmpiricalQuantile, x):
    """P̂(T ≤ x)。"""
    return np.searchsorted(q.sorted_samples, x, side="right") / q.n


def _count_at(q: EmpiricalQuantile, value: float, eps: float) -> int:
    data = q.sorted_samples
    return int(np.searchsorted(data, value + eps, side="right") - np.searchsorted(data, value - eps, side="left"))


def mass_at(q: EmpiricalQuantile, value: float, eps: float = 0.0) -> float:
    """落在 [value − eps, value + eps] 的樣本比例；eps = 0 時為精確相等。"""
    return _count_at(q, value, eps) / q.n


def split_counts(q: EmpiricalQuantile, value: float, eps: float = 0.0) -> Tuple[int, int, int]:
    """(低於, 等於, 高於) value 的樣本數。"""
    below = int(np.searchsorted(q.sorted_samples, value - eps, side="left"))
    at = _count_at(q, value, eps)
    return below, at, q.n - below - at


@dataclass(frozen=True)
class CountStats:
    """
    出價人數與流標的計數摘要。

    shares 以有成交的場次為分母，總和為 1；invalid_share = L_invalid / (L + L_invalid)。
    未觀察 n_obs 時 shares 為空、max_n_obs 為 None。
    """

    shares: Dict[int, float]
    counts: Dict[int, int]
    total_valid: int
    invalid_count: Optional[int] = None
    invalid_share: Optional[float] = None
    max_n_obs: Optional[int] = None

    def share(self, n_obs: int) -> float:
        return self.shares.get(n_obs, 0.0)

    def require_invalid(self) -> int:
        if self.invalid_count is None:
            raise MissingObservableError("資料未包含流標數 L_invalid")
        return self.invalid_count

    def require_max(self) -> int:
        if self.max_n_obs is None:
            raise MissingObservableError("資料未包含出價人數 n_obs")
        return self.max_n_obs

    def outcome_counts(self) -> np.ndarray:
        """k = 0..N̄ 的場次數，k = 0 為流標。"""
        top = self.require_max()
        return np.array([self.require_invalid()] + [self.counts.get(k, 0) for k in range(1, top + 1)], dtype=float)


def count_stats(ds: ObservedDataset) -> CountStats:
    """各 n_obs 的佔比（分母為有成交的場次）與流標比例。"""
    if not ds.has_nobs and not (ds.info.observe_invalid_count and ds.L_invalid is not None):
        raise MissingObservableError("count_stats 需要出價人數 n_obs 或流標數")
    if ds.L == 0:
        raise EmptySampleError("資料集沒有任何成交紀錄")
    invalid = ds.invalid_count if ds.info.observe_invalid_count and ds.L_invalid is not None else None
    invalid_share = None if invalid is None else invalid / (ds.L + invalid)
    if not ds.has_nobs:
        return CountStats(shares={}, counts={}, total_valid=ds.L, invalid_count=invalid, invalid_share=invalid_share)
    values, counts = np.unique(ds.n_obs, return_counts=True)
    return CountStats(
        shares={int(v): c / ds.L for v, c in zip(values, counts)},
        counts={int(v): int(c) for v, c in zip(values, counts)},
        total_valid=ds.L,
        invalid_count=invalid,
        invalid_share=invalid_share,
        max_n_obs=int(values.max()),
    )


def conditional_quantile(ds: ObservedDataset, n_obs: int) -> EmpiricalQuantile:
    """n_obs = k 的成交價分位數。"""
    prices = ds.prices_with(n_obs)
    if prices.size == 0:
        raise EmptySampleError(f"沒有 n_obs={n_obs} 的成交紀錄")
    return EmpiricalQuantile.from_samples(prices)


def price_quantile(ds: ObservedDataset) -> EmpiricalQuantile:
    if ds.L == 0:
        raise EmptySampleError("資料集沒有任何成交紀錄")
    return EmpiricalQuantile.from_samples(ds.prices)


__all__ = [
    "CountStats",
    "EmpiricalQuantile",
    "conditional_quantile",
    "count_stats",
    "default_bandwidth",
    "default_second_bandwidth",
    "ecdf",
    "eq_deriv",
    "eq_eval",
    "eq_second_deriv",
    "eq_secant",
    "mass_at",
    "price_quantile",
    "split_counts",
]
