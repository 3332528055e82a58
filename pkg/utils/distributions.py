"""
價值分佈與賣方偏好

分佈以分位數函數 V(α) 表示：α ∈ [0,1] 為出價人的類型（價值的分位），
V 為嚴格遞增。所有類別方法皆可向量化且不做檢查；
對外的模組函式（quantile / quantile_deriv / virtual_value）會驗證定義域。
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, List, Literal, Tuple

import numpy as np

from config.constants import REGULARITY_GRID_SIZE

from .error_handler import DomainError


class ValueDistribution(ABC):
    """分位數函數介面。"""

    family: ClassVar[str] = "base"

    @property
    @abstractmethod
    def lower(self) -> float: ...

    @property
    @abstractmethod
    def upper(self) -> float: ...

    @property
    def knots(self) -> Tuple[float, ...]:
        """V′ 的不連續點（積分時交給 quad 的 points）。"""
        return ()

    @abstractmethod
    def values(self, alpha: np.ndarray | float) -> np.ndarray: ...

    @abstractmethod
    def slopes(self, alpha: np.ndarray | float) -> np.ndarray: ...

    @abstractmethod
    def slope_power_integral(self, a: np.ndarray | float, b: np.ndarray | float, power: float) -> np.ndarray:
        """∫_a^b V′(t) t^power dt，a、b 可為陣列並可廣播。"""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]: ...


@dataclass(frozen=True)
class UniformValues(ValueDistribution):
    lo: float = 0.0
    hi: float = 1.0

    family: ClassVar[str] = "uniform"

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise DomainError(f"價值上界必須大於下界：lo={self.lo}, hi={self.hi}")

    @property
    def lower(self) -> float:
        return self.lo

    @property
    def upper(self) -> float:
        return self.hi

    def values(self, alpha):
        return self.lo + (self.hi - self.lo) * np.asarray(alpha, dtype=float)

    def slopes(self, alpha):
        return np.full(np.shape(alpha), self.hi - self.lo, dtype=float)

    def slope_power_integral(self, a, b, power):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return (self.hi - self.lo) * (b ** (power + 1) - a ** (power + 1)) / (power + 1)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class ShiftedUniformValues(UniformValues):
    """下界為正的均勻分佈，例如 U[0.25, 1]。"""

    lo: float = 0.25
    hi: float = 1.0

    family: ClassVar[str] = "shifted_uniform"


@dataclass(frozen=True)
class PowerLawValues(ValueDistribution):
    """V(α) = lo + (hi - lo) α^k。"""

    exponent: float = 1.0
    lo: float = 0.0
    hi: float = 1.0

    family: ClassVar[str] = "power_law"

    def __post_init__(self) -> None:
        if not self.exponent > 0:
            raise DomainError(f"power_law 指數必須為正：k={self.exponent}")
        if not self.hi > self.lo:
            raise DomainError(f"價值上界必須大於下界：lo={self.lo}, hi={self.hi}")

    @property
    def lower(self) -> float:
        return self.lo

    @property
    def upper(self) -> float:
        return self.hi

    def values(self, alpha):
        return self.lo + (self.hi - self.lo) * np.asarray(alpha, dtype=float) ** self.exponent

    def slopes(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        with np.errstate(divide="ignore"):
            return (self.hi - self.lo) * self.exponent * alpha ** (self.exponent - 1.0)

    def slope_power_integral(self, a, b, power):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        k = self.exponent
        return (self.hi - self.lo) * k / (k + power) * (b ** (k + power) - a ** (k + power))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "lo": self.lo, "hi": self.hi, "exponent": self.exponent}


@dataclass(frozen=True)
class TabulatedQuantile(ValueDistribution):
    """分段線性分位數：節點 alphas 由 0 到 1，values 嚴格遞增。"""

    alphas: Tuple[float, ...]
    values_at: Tuple[float, ...]

    family: ClassVar[str] = "tabulated"

    def __post_init__(self) -> None:
        a = np.asarray(self.alphas, dtype=float)
        v = np.asarray(self.values_at, dtype=float)
        if a.ndim != 1 or a.size < 2 or a.size != v.size:
            raise DomainError("tabulated 分位數需要等長且至少兩個節點")
        if a[0] != 0.0 or a[-1] != 1.0:
            raise DomainError("tabulated 分位點必須從 0 開始、到 1 結束")
        if np.any(np.diff(a) <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("tabulated 分位點與價值都必須嚴格遞增")
        object.__setattr__(self, "alphas", tuple(float(x) for x in a))
        object.__setattr__(self, "values_at", tuple(float(x) for x in v))

    @property
    def _a(self) -> np.ndarray:
        return np.asarray(self.alphas)

    @property
    def _v(self) -> np.ndarray:
        return np.asarray(self.values_at)

    @property
    def _segment_slopes(self) -> np.ndarray:
        return np.diff(self._v) / np.diff(self._a)

    @property
    def lower(self) -> float:
        return self.values_at[0]

    @property
    def upper(self) -> float:
        return self.values_at[-1]

    @property
    def knots(self) -> Tuple[float, ...]:
        return self.alphas[1:-1]

    def _segment(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self._a, x, side="right") - 1, 0, len(self.alphas) - 2)

    def values(self, alpha):
        return np.interp(alpha, self._a, self._v)

    def slopes(self, alpha):
        shape = np.shape(alpha)
        x = np.atleast_1d(np.asarray(alpha, dtype=float)).ravel()
        a, v = self._a, self._v
        out = np.array(self._segment_slopes[self._segment(x)], dtype=float)
        # 內部節點取中央差分
        idx = np.searchsorted(a, x)
        inner = (idx > 0) & (idx < a.size - 1)
        hit = np.zeros(x.shape, dtype=bool)
        hit[inner] = a[idx[inner]] == x[inner]
        if np.any(hit):
            j = idx[hit]
            out[hit] = (v[j + 1] - v[j - 1]) / (a[j + 1] - a[j - 1])
        return out.reshape(shape)

    def _cumulative(self, x: np.ndarray, power: float) -> np.ndarray:
        a = self._a
        s = self._segment_slopes
        q = power + 1.0
        pieces = s * (a[1:] ** q - a[:-1] ** q) / q
        base = np.concatenate([[0.0], np.cumsum(pieces)])
        j = self._segment(x)
        return base[j] + s[j] * (x**q - a[j] ** q) / q

    def slope_power_integral(self, a, b, power):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return self._cumulative(b, power) - self._cumulative(a, power)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "alphas": list(self.alphas), "values": list(self.values_at)}


# ==================== 定義域檢查 ====================


def _check_alpha(alpha, label: str = "alpha") -> Tuple[np.ndarray, bool]:
    scalar = np.ndim(alpha) == 0
    arr = np.asarray(alpha, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{label} 必須位於 [0, 1]：{alpha}")
    return arr, scalar


def _out(values: np.ndarray, scalar: bool):
    return float(values) if scalar else np.asarray(values, dtype=float)


def quantile(dist: ValueDistribution, alpha):
    """V(α)。"""
    arr, scalar = _check_alpha(alpha)
    return _out(dist.values(arr), scalar)


def quantile_deriv(dist: ValueDistribution, alpha):
    """
    V′(α)。

    power_law 且 k < 1 時 V′ 在 0 發散，視為定義域錯誤；
    tabulated 在內部節點取中央差分，端點取單側斜率。
    """
    arr, scalar = _check_alpha(alpha)
    if isinstance(dist, PowerLawValues) and dist.exponent < 1.0 and np.any(arr == 0.0):
        raise DomainError(f"power_law k={dist.exponent} 在 α=0 的導數發散")
    return _out(dist.slopes(arr), scalar)


def virtual_value(dist: ValueDistribution, alpha):
    """J(α) = V(α) − (1−α) V′(α)。"""
    arr, scalar = _check_alpha(alpha)
    slope = quantile_deriv(dist, arr)
    return _out(dist.values(arr) - (1.0 - arr) * slope, scalar)


@dataclass
class RegularityReport:
    is_regular: bool
    min_slope: float
    violations: List[float] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.is_regular


def check_regularity(dist: ValueDistribution, grid_size: int = REGULARITY_GRID_SIZE) -> RegularityReport:
    """在內點網格 i/(grid_size+1) 上檢查 J 是否遞增；violations 為下降區段的左端點。"""
    grid = np.arange(1, grid_size + 1) / (grid_size + 1)
    j = np.asarray(virtual_value(dist, grid))
    diffs = np.diff(j)
    scale = max(dist.upper - dist.lower, 1.0)
    bad = diffs < -1e-12 * scale
    min_slope = float(np.min(diffs) * (grid_size + 1)) if diffs.size else 0.0
    return RegularityReport(
        is_regular=not bool(np.any(bad)),
        min_slope=min_slope,
        violations=[float(x) for x in grid[:-1][bad]],
    )


# ==================== 賣方偏好 ====================


@dataclass(frozen=True)
class SellerPreferences:
    """
    賣方效用 U 與保留價值 V0。

    kind = risk_neutral：U(x) = x
    kind = crra：U(x) = x^ρ，ρ ∈ (0, 1]
    kind = tabulated：分段線性，需遞增且凹
    """

    kind: Literal["risk_neutral", "crra", "tabulated"] = "risk_neutral"
    outside_option: float = 0.0
    rho: float = 1.0
    xs: Tuple[float, ...] = ()
    us: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "crra" and not 0.0 < self.rho <= 1.0:
            raise DomainError(f"CRRA 參數 ρ 必須位於 (0, 1]：{self.rho}")
        if self.kind == "tabulated":
            x = np.asarray(self.xs, dtype=float)
            u = np.asarray(self.us, dtype=float)
            if x.size < 2 or x.size != u.size or np.any(np.diff(x) <= 0):
                raise DomainError("tabulated 效用需要遞增的 x 節點與等長的效用值")
            slopes = np.diff(u) / np.diff(x)
            if np.any(slopes <= 0) or np.any(np.diff(slopes) > 1e-12):
                raise DomainError("tabulated 效用必須嚴格遞增且為凹函數")

    @property
    def is_risk_neutral(self) -> bool:
        return self.kind == "risk_neutral" or (self.kind == "crra" and self.rho == 1.0)

    def utility(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_risk_neutral:
            return x
        if self.kind == "crra":
            return np.maximum(x, 0.0) ** self.rho
        return np.interp(x, self.xs, self.us)

    def marginal_utility(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_risk_neutral:
            return np.ones_like(x)
        if self.kind == "crra":
            with np.errstate(divide="ignore"):
                return self.rho * np.maximum(x, 0.0) ** (self.rho - 1.0)
        xs = np.asarray(self.xs)
        slopes = np.diff(np.asarray(self.us)) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
        return slopes[idx]

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"utility": self.kind, "outside_option": self.outside_option}
        if self.kind == "crra":
            data["rho"] = self.rho
        if self.kind == "tabulated":
            data["xs"] = list(self.xs)
            data["us"] = list(self.us)
        return data


def risk_neutral(outside_option: float = 0.0) -> SellerPreferences:
    return SellerPreferences(kind="risk_neutral", outside_option=outside_option)


def crra(rho: float, outside_option: float = 0.0) -> SellerPreferences:
    return SellerPreferences(kind="crra", rho=rho, outside_option=outside_option)


# ==================== 由設定建立 ====================


def distribution_from_config(cfg) -> ValueDistribution:
    """由 DistributionConfig（或同欄位的 dict）建立分佈。"""
    data = cfg if isinstance(cfg, dict) else cfg.model_dump()
    family = data.get("family", "uniform")
    lo = data.get("lo", 0.0)
    hi = data.get("hi", 1.0)
    if family == "uniform":
        return UniformValues(lo=lo, hi=hi)
    if family == "shifted_uniform":
        return ShiftedUniformValues(lo=lo, hi=hi)
    if family == "power_law":
        if data.get("exponent") is None:
            raise DomainError("power_law 需要 exponent")
        return PowerLawValues(exponent=data["exponent"], lo=lo, hi=hi)
    if family == "tabulated":
        if not data.get("alphas") or not data.get("values"):
            raise DomainError("tabulated 需要 alphas 與 values")
        return TabulatedQuantile(alphas=tuple(data["alphas"]), values_at=tuple(data["values"]))
    raise DomainError(f"未知的分佈族：{family}")


def preferences_from_config(cfg) -> SellerPreferences:
    data = cfg if isinstance(cfg, dict) else cfg.model_dump()
    kind = data.get("utility", "risk_neutral")
    v0 = data.get("outside_option", 0.0)
    if kind == "crra":
        if data.get("rho") is None:
            raise DomainError("crra 效用需要 rho")
        return SellerPreferences(kind="crra", rho=data["rho"], outside_option=v0)
    if kind == "tabulated":
        return SellerPreferences(
            kind="tabulated", xs=tuple(data.get("xs") or ()), us=tuple(data.get("us") or ()), outside_option=v0
        )
    return SellerPreferences(kind="risk_neutral", outside_option=v0)


__all__ = [
    "PowerLawValues",
    "RegularityReport",
    "SellerPreferences",
    "ShiftedUniformValues",
    "TabulatedQuantile",
    "UniformValues",
    "ValueDistribution",
    "check_regularity",
    "crra",
    "distribution_from_config",
    "preferences_from_config",
    "quantile",
    "quantile_deriv",
    "risk_neutral",
    "virtual_value",
]
