"""
對稱均衡出價與賣方最適篩選

出價函數都以類型 α（價值分位）表示：
- 第一價格 + 保留價：b(α) = V(α) − α^{−(N−1)} ∫_{α0}^{α} V′(t) t^{N−1} dt
- 第一價格 + 進場成本：b(α) = V(α) − (F + ∫_{α*}^{α} V′(t) t^{N−1} dt) / α^{N−1}
- 第二價格：b(α) = V(α)

純量版本（fp_bid_reserve 等）以 quad 積分，作為參考實作；
`*_vec` 版本使用分佈的封閉式積分，供模擬器大量計算。
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import numpy as np

from config.constants import GAUSS_LEGENDRE_NODES, REGULARITY_GRID_SIZE, SCREENING_LOWER

from .distributions import SellerPreferences, ValueDistribution, check_regularity, quantile, quantile_deriv
from .error_handler import DomainError, RegularityError, RootBracketError
from .logging_manager import log_event, log_warning
from .numerics import find_root, integrate_on_intervals, integrate_scalar


class AuctionFormat(str, Enum):
    FIRST_PRICE = "first_price"
    SECOND_PRICE = "second_price"


class TruncationKind(str, Enum):
    RESERVE = "reserve"
    ENTRY_COST = "entry_cost"


@dataclass(frozen=True)
class AuctionDesign:
    """拍賣設計：格式 + 截斷類型 + 截斷水準（保留價分位 α0 或進場成本 F）。"""

    fmt: AuctionFormat
    truncation: TruncationKind
    level: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "fmt", AuctionFormat(self.fmt))
        object.__setattr__(self, "truncation", TruncationKind(self.truncation))
        if self.truncation is TruncationKind.RESERVE and not 0.0 <= self.level < 1.0:
            raise DomainError(f"保留價分位 α0 必須位於 [0, 1)：{self.level}")
        if self.truncation is TruncationKind.ENTRY_COST and not self.level > 0.0:
            raise DomainError(f"進場成本必須為正：{self.level}")

    @property
    def is_first_price(self) -> bool:
        return self.fmt is AuctionFormat.FIRST_PRICE

    @property
    def is_entry(self) -> bool:
        return self.truncation is TruncationKind.ENTRY_COST

    def threshold(self, dist: ValueDistribution, n_bidders: int) -> float:
        """N 人拍賣中實際進場的最低類型。"""
        if self.is_entry:
            return entry_threshold(dist, n_bidders, self.level)
        return self.level


def _check_n(n_bidders: int) -> None:
    if int(n_bidders) != n_bidders or n_bidders < 1:
        raise DomainError(f"出價人數必須為正整數：{n_bidders}")


# ==================== 第一價格 + 保留價 ====================


def fp_bid_reserve(dist: ValueDistribution, n_bidders: int, alpha0: float, alpha: float) -> float:
    """
    第一價格保留價下，類型 α 的均衡出價。

    Args:
        dist: 價值分佈
        n_bidders: 潛在出價人數 N
        alpha0: 篩選水準（保留價 R = V(α0)）
        alpha: 類型，需滿足 α0 ≤ α ≤ 1

    Returns:
        b(α; α0)，在 α = α0 時等於 R
    """
    _check_n(n_bidders)
    if not 0.0 <= alpha0 < 1.0 or not alpha0 <= alpha <= 1.0:
        raise DomainError(f"需要 0 ≤ α0 ≤ α ≤ 1：α0={alpha0}, α={alpha}")
    if alpha == alpha0:
        return quantile(dist, alpha0)
    power = n_bidders - 1
    integral = float(dist.slope_power_integral(alpha0, alpha, power))
    return quantile(dist, alpha) - integral / alpha**power


def fp_bid_reserve_vec(dist: ValueDistribution, n_bidders: int, alpha0: float, alpha: np.ndarray) -> np.ndarray:
    """fp_bid_reserve 的向量化版本（不做檢查，α ≥ α0）。"""
    alpha = np.asarray(alpha, dtype=float)
    power = n_bidders - 1
    if power == 0:
        return np.full(alpha.shape, float(dist.values(alpha0)))
    safe = np.where(alpha > 0.0, alpha, 1.0)
    shaded = dist.values(alpha) - dist.slope_power_integral(alpha0, alpha, power) / safe**power
    return np.where(alpha > 0.0, shaded, dist.values(alpha))


def fp_bid_reserve_sensitivity(dist: ValueDistribution, n_bidders: int, alpha0: float, alpha: float) -> float:
    """∂b(α; α0)/∂α0 = (α0/α)^{N−1} V′(α0)；α0 = 0 時為 0。"""
    _check_n(n_bidders)
    if not 0.0 <= alpha0 < 1.0 or not alpha0 <= alpha <= 1.0 or alpha == 0.0:
        raise DomainError(f"需要 0 ≤ α0 ≤ α ≤ 1 且 α > 0：α0={alpha0}, α={alpha}")
    if alpha0 == 0.0 and n_bidders >= 2:
        return 0.0
    return (alpha0 / alpha) ** (n_bidders - 1) * quantile_deriv(dist, alpha0)


# ==================== 進場成本 ====================


def entry_threshold(dist: ValueDistribution, n_bidders: int, entry_cost: float) -> float:
    """
    進場門檻 α*：V(α*) α*^{N−1} = F。

    N = 1 且 F ≤ V(0) 時所有人都進場，回傳 0。
    """
    _check_n(n_bidders)
    top = dist.upper
    if not 0.0 < entry_cost < top:
        raise RootBracketError(f"進場成本 F={entry_cost} 必須位於 (0, V(1)={top})")
    if n_bidders == 1 and entry_cost <= dist.lower:
        return 0.0
    power = n_bidders - 1
    return find_root(
        lambda a: float(dist.values(a)) * a**power - entry_cost, 0.0, 1.0, label="entry_threshold"
    )


def fp_bid_entry(dist: ValueDistribution, n_bidders: int, entry_cost: float, alpha: float) -> float:
    """第一價格進場成本下的均衡出價；α 必須不低於門檻。"""
    threshold = entry_threshold(dist, n_bidders, entry_cost)
    if not threshold <= alpha <= 1.0:
        raise DomainError(f"類型 α={alpha} 低於進場門檻 α*={threshold:.6g}")
    power = n_bidders - 1
    integral = float(dist.slope_power_integral(threshold, alpha, power))
    return quantile(dist, alpha) - (entry_cost + integral) / alpha**power


def fp_bid_entry_vec(dist: ValueDistribution, n_bidders: int, entry_cost: float, threshold: float, alpha: np.ndarray) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    power = n_bidders - 1
    safe = np.where(alpha > 0.0, alpha, 1.0)
    return dist.values(alpha) - (entry_cost + dist.slope_power_integral(threshold, alpha, power)) / safe**power


def sp_bid(dist: ValueDistribution, alpha):
    """第二價格（弱優勢策略）：出價等於價值。"""
    return quantile(dist, alpha)


def entry_payoff(dist: ValueDistribution, n_bidders: int, entry_cost: float, alpha: float, beta: float) -> float:
    """
    類型 α 模仿類型 β 出價時的期望收益（第一價格 + 進場成本）。

    π(β; α) = [V(α) − b(β)] β^{N−1} − F，β 必須不低於進場門檻。
    """
    threshold = entry_threshold(dist, n_bidders, entry_cost)
    if not threshold <= beta <= 1.0 or not 0.0 <= alpha <= 1.0:
        raise DomainError(f"模仿對象 β={beta} 必須位於 [α*={threshold:.6g}, 1]")
    bid = fp_bid_entry(dist, n_bidders, entry_cost, beta)
    return (quantile(dist, alpha) - bid) * beta ** (n_bidders - 1) - entry_cost


# ==================== 賣方最適篩選 ====================


def screening_foc(
    dist: ValueDistribution,
    prefs: SellerPreferences,
    fmt: AuctionFormat | str,
    n_bidders: int,
    alpha: float,
) -> float:
    """
    賣方一階條件 g(α)（已除去正的共同因子）。

    第二價格：g = U(V0) + U′(V(α)) V′(α)(1−α) − U(V(α))
    第一價格：g = U(V0) − U(V(α)) + V′(α) ∫_α^1 U′(b(t; α)) dt
    風險中立時兩者皆化簡為 V0 − J(α)，與 N 無關。
    """
    fmt = AuctionFormat(fmt)
    value = float(dist.values(alpha))
    slope = float(dist.slopes(alpha))
    u0 = float(prefs.utility(prefs.outside_option))
    if prefs.is_risk_neutral:
        return prefs.outside_option - (value - (1.0 - alpha) * slope)
    if fmt is AuctionFormat.SECOND_PRICE:
        return u0 + float(prefs.marginal_utility(value)) * slope * (1.0 - alpha) - float(prefs.utility(value))

    def integrand(t: float) -> float:
        bid = float(fp_bid_reserve_vec(dist, n_bidders, alpha, np.asarray(t)))
        return float(prefs.marginal_utility(bid))

    inner = integrate_scalar(integrand, alpha, 1.0, points=dist.knots)
    return u0 - float(prefs.utility(value)) + slope * inner


def optimal_screening(
    dist: ValueDistribution,
    prefs: SellerPreferences,
    fmt: AuctionFormat | str,
    n_bidders: int = 2,
    reject_irregular: bool = False,
) -> float:
    """
    賣方最適篩選水準 α*（g(α*) = 0 的根）。

    Args:
        dist: 價值分佈
        prefs: 賣方偏好
        fmt: 拍賣格式
        n_bidders: 出價人數（僅影響風險趨避的第一價格）
        reject_irregular: 分佈不規則時拋出 RegularityError，否則記錄警告

    Returns:
        α* ∈ [0, 1)；g 在下界已非正時回傳 0
    """
    _check_n(n_bidders)
    top = float(dist.values(1.0))
    if prefs.outside_option >= top:
        raise DomainError(f"賣方保留價值 V0={prefs.outside_option} 必須低於最高價值 {top}")
    report = check_regularity(dist, REGULARITY_GRID_SIZE)
    if not report:
        message = f"虛擬價值非遞增（{len(report.violations)} 個區段），一階條件未必對應最適解"
        if reject_irregular:
            raise RegularityError(message)
        log_warning("irregular_distribution", message, {"family": dist.family, "min_slope": report.min_slope})

    def g(a: float) -> float:
        return screening_foc(dist, prefs, fmt, n_bidders, a)

    if g(SCREENING_LOWER) <= 0.0:
        log_event("optimal_screening", {"alpha": 0.0, "reason": "nonbinding"})
        return 0.0
    root = find_root(g, SCREENING_LOWER, 1.0, label="optimal_screening")
    log_event("optimal_screening", {"alpha": root, "format": AuctionFormat(fmt).value, "n_bidders": n_bidders})
    return root


def seller_payoff(
    dist: ValueDistribution,
    prefs: SellerPreferences,
    fmt: AuctionFormat | str,
    n_bidders: int,
    alpha: float,
) -> float:
    """
    賣方期望效用（以 quad 積分）。

    第一價格：Π = U(V0) α^N + N ∫_α^1 U(b(t; α)) t^{N−1} dt（需 N ≥ 2）
    第二價格：Π = U(V0) α^N + U(V(α)) N α^{N−1}(1−α) + N(N−1) ∫_α^1 U(V(t)) t^{N−2}(1−t) dt
    """
    _check_n(n_bidders)
    fmt = AuctionFormat(fmt)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"α 必須位於 [0, 1]：{alpha}")
    n = n_bidders
    u0 = float(prefs.utility(prefs.outside_option))
    if fmt is AuctionFormat.FIRST_PRICE:
        if n < 2:
            raise DomainError("第一價格收益公式需要 N ≥ 2")
        if alpha >= 1.0:
            return u0
        body = integrate_scalar(
            lambda t: float(prefs.utility(fp_bid_reserve(dist, n, alpha, t))) * t ** (n - 1),
            alpha,
            1.0,
            points=dist.knots,
        )
        return u0 * alpha**n + n * body

    reserve_term = float(prefs.utility(dist.values(alpha))) * n * alpha ** (n - 1) * (1.0 - alpha)
    competition = 0.0
    if n >= 2 and alpha < 1.0:
        competition = integrate_scalar(
            lambda t: float(prefs.utility(dist.values(t))) * t ** (n - 2) * (1.0 - t),
            alpha,
            1.0,
            points=dist.knots,
        )
    return u0 * alpha**n + reserve_term + n * (n - 1) * competition


def seller_payoff_curve(
    dist: ValueDistribution,
    prefs: SellerPreferences,
    fmt: AuctionFormat | str,
    n_bidders: int,
    alphas: np.ndarray,
    order: int = GAUSS_LEGENDRE_NODES,
) -> np.ndarray:
    """seller_payoff 在整個 α 網格上的向量化版本（Gauss-Legendre）。"""
    _check_n(n_bidders)
    fmt = AuctionFormat(fmt)
    alphas = np.asarray(alphas, dtype=float)
    n = n_bidders
    u0 = float(prefs.utility(prefs.outside_option))
    base = u0 * alphas**n

    if fmt is AuctionFormat.FIRST_PRICE:
        if n < 2:
            raise DomainError("第一價格收益公式需要 N ≥ 2")
        lower = alphas[:, None]

        def winner(t: np.ndarray) -> np.ndarray:
            bids = dist.values(t) - dist.slope_power_integral(lower, t, n - 1) / t ** (n - 1)
            return prefs.utility(bids) * t ** (n - 1)

        return base + n * integrate_on_intervals(winner, alphas, 1.0, order)

    reserve_term = prefs.utility(dist.values(alphas)) * n * alphas ** (n - 1) * (1.0 - alphas)
    if n < 2:
        return base + reserve_term
    competition = integrate_on_intervals(
        lambda t: prefs.utility(dist.values(t)) * t ** (n - 2) * (1.0 - t), alphas, 1.0, order
    )
    return base + reserve_term + n * (n - 1) * competition


__all__ = [
    "AuctionDesign",
    "AuctionFormat",
    "TruncationKind",
    "entry_payoff",
    "entry_threshold",
    "fp_bid_entry",
    "fp_bid_entry_vec",
    "fp_bid_reserve",
    "fp_bid_reserve_sensitivity",
    "fp_bid_reserve_vec",
    "optimal_screening",
    "screening_foc",
    "seller_payoff",
    "seller_payoff_curve",
    "sp_bid",
]
