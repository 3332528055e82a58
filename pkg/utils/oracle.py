"""
非識別的反例與觀察等價檢查

- construct_fp_twin：第一價格、只觀察成交價時，任取 α₂ 都能由同一條成交價分位數
  構造出另一組 (α₂, V₂)，兩者產生相同的成交價分佈
- sp_unknown_n_counterexample：第二價格、N 變動且未知時，兩組不同的人數分佈與
  保留價分位產生相同的成交價與出價人數分佈
- ks_distance：兩樣本 Kolmogorov–Smirnov 距離
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.stats import ks_2samp

from config.constants import (
    COUNTEREXAMPLE_CDF_POINTS,
    COUNTEREXAMPLE_TOLERANCE,
    MASS_TOLERANCE,
    TWIN_GRID_POINTS,
    TWIN_SLOPE_TOLERANCE,
)

from .distributions import ShiftedUniformValues, TabulatedQuantile, UniformValues
from .empirics import EmpiricalQuantile, conditional_quantile, count_stats, default_bandwidth, ecdf, eq_deriv, eq_eval, mass_at
from .equilibrium import AuctionDesign, AuctionFormat, TruncationKind
from .error_handler import DomainError, EmptySampleError
from .identification.results import monotone_rearrange
from .logging_manager import log_event, log_warning
from .simulator import AuctionBatch, InfoStructure, ObservedDataset, PopulationSpec, observe, simulate

QuantileSource = Union[EmpiricalQuantile, Callable[[np.ndarray], np.ndarray]]


def ks_distance(samples_a, samples_b) -> float:
    """兩樣本 KS 統計量 sup |F̂_A − F̂_B|。"""
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptySampleError("KS 距離需要兩組非空樣本")
    return float(ks_2samp(a, b).statistic)


# ==================== 第一價格分身 ====================


@dataclass
class TwinPrimitive:
    """另一組與資料相容的原始參數：篩選水準 α₂ 與其上的價值曲線。"""

    alpha2: float
    n_bidders: int
    alphas: np.ndarray
    bids: np.ndarray
    values: np.ndarray
    boundary_check: float
    valid: bool
    truncation: str = "reserve"
    entry_cost: Optional[float] = None
    rearranged: bool = False
    warnings: List[str] = field(default_factory=list)

    def distribution(self) -> TabulatedQuantile:
        """把 V₂ 延伸到 [0, α₂]（線性往下），得到可模擬的分佈；延伸部分不影響成交價。"""
        slope = max(float((self.values[1] - self.values[0]) / (self.alphas[1] - self.alphas[0])), 1e-6)
        knots = np.concatenate([[0.0], self.alphas])
        values = np.concatenate([[self.values[0] - slope * self.alpha2], self.values])
        return TabulatedQuantile(alphas=tuple(knots), values_at=tuple(values))

    def design(self) -> AuctionDesign:
        if self.entry_cost is not None:
            return AuctionDesign(AuctionFormat.FIRST_PRICE, TruncationKind.ENTRY_COST, self.entry_cost)
        return AuctionDesign(AuctionFormat.FIRST_PRICE, TruncationKind.RESERVE, self.alpha2)

    def value_at(self, alphas) -> np.ndarray:
        return np.interp(np.asarray(alphas, dtype=float), self.alphas, self.values)


def _as_callable(source: QuantileSource) -> Tuple[Callable[[np.ndarray], np.ndarray], Callable[[], float]]:
    if isinstance(source, EmpiricalQuantile):
        h = default_bandwidth(source.n)
        return (lambda u: np.asarray(eq_eval(source, u), dtype=float)), (lambda: float(eq_deriv(source, 0.0, h)))

    def transaction(u) -> np.ndarray:
        return np.asarray(source(np.asarray(u, dtype=float)), dtype=float)

    def slope() -> float:
        step = 1e-4
        return float((transaction(step) - transaction(0.0)) / step)

    return transaction, slope


def construct_fp_twin(
    source: QuantileSource,
    n_bidders: int,
    alpha2: float,
    grid_points: int = TWIN_GRID_POINTS,
    truncation: str = "reserve",
) -> TwinPrimitive:
    """
    由成交價分位數 T 構造篩選水準為 α₂ 的第一價格分身。

    b₂(α) = T((α^N − α₂^N)/(1 − α₂^N))，V₂(α) = b₂(α) + α b₂′(α)/(N−1)，
    b₂′ 以網格上的二階差分計算；保留價下 b₂′(α₂) 取 0，使 V₂(α₂) = T(0)。
    保留價下要求 T′(0) ≈ 0；進場成本下要求 T(0) ≈ 0，並回推 F₂ = V₂(α₂) α₂^{N−1}。

    Args:
        source: 經驗分位數或 T(u) 函式
        n_bidders: 出價人數 N ≥ 2
        alpha2: 任取的篩選水準 ∈ (0,1)
        grid_points: [α₂, 1] 上的網格點數
        truncation: "reserve" 或 "entry_cost"

    Returns:
        TwinPrimitive
    """
    if n_bidders < 2:
        raise DomainError(f"分身構造需要 N ≥ 2：{n_bidders}")
    if not 0.0 < alpha2 < 1.0:
        raise DomainError(f"α₂ 必須位於 (0, 1)：{alpha2}")
    truncation = TruncationKind(truncation).value
    transaction, boundary = _as_callable(source)
    alphas = np.linspace(alpha2, 1.0, grid_points)
    u = np.clip((alphas**n_bidders - alpha2**n_bidders) / (1.0 - alpha2**n_bidders), 0.0, 1.0)
    bids = transaction(u)
    slopes = np.gradient(bids, alphas, edge_order=2)
    if truncation == "reserve":
        # T′(0) = 0，V₂(α₂) 必須正好等於保留價 T(0)
        slopes[0] = 0.0
    values = bids + alphas * slopes / (n_bidders - 1)

    warnings: List[str] = []
    entry_cost = None
    if truncation == "entry_cost":
        check = float(bids[0])
        entry_cost = float(values[0] * alpha2 ** (n_bidders - 1))
        message = f"T(0) = {check:.4f}，成交價可能不是來自有進場成本的第一價格拍賣"
    else:
        check = boundary()
        message = f"T′(0) = {check:.4f}，成交價可能不是來自有效保留價的第一價格拍賣"
    valid = abs(check) <= TWIN_SLOPE_TOLERANCE
    if not valid:
        warnings.append(log_warning("twin_boundary", message))

    rearranged = bool(np.any(np.diff(values) <= 0))
    if rearranged:
        values, _ = monotone_rearrange(values)
    log_event("fp_twin", {"alpha2": alpha2, "n_bidders": n_bidders, "boundary": check, "rearranged": rearranged})
    return TwinPrimitive(
        alpha2=float(alpha2),
        n_bidders=n_bidders,
        alphas=alphas,
        bids=bids,
        values=values,
        boundary_check=check,
        valid=valid,
        truncation=truncation,
        entry_cost=entry_cost,
        rearranged=rearranged,
        warnings=warnings,
    )


def simulate_twin(twin: TwinPrimitive, L_total: int, seed: int = 0) -> ObservedDataset:
    """以分身參數正向模擬，得到只含成交價的資料。"""
    batch = simulate(twin.distribution(), twin.design(), PopulationSpec.fixed(twin.n_bidders), L_total, seed)
    return observe(batch, InfoStructure())


# ==================== 第二價格、未知 N 的反例 ====================

COUNTEREXAMPLE_RESERVE = 0.5


@dataclass
class EquivalenceCheck:
    name: str
    case: str
    observed: float
    target: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.passed = bool(abs(self.observed - self.target) <= self.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def counterexample_cases() -> Dict[str, Tuple[Any, AuctionDesign, PopulationSpec]]:
    """
    兩組產生相同觀察分佈的第二價格設計（保留價 0.5）。

    case_1：N ≡ 2、價值 U[0,1]，α* = 0.5
    case_2：N ∈ {1: 0.4, 2: 0.6}、價值 U[0.25,1]，α* = 1/3
    """
    first = UniformValues()
    second = ShiftedUniformValues(lo=0.25, hi=1.0)
    return {
        "case_1": (
            first,
            AuctionDesign(AuctionFormat.SECOND_PRICE, TruncationKind.RESERVE, COUNTEREXAMPLE_RESERVE),
            PopulationSpec.fixed(2),
        ),
        "case_2": (
            second,
            AuctionDesign(AuctionFormat.SECOND_PRICE, TruncationKind.RESERVE, (COUNTEREXAMPLE_RESERVE - 0.25) / 0.75),
            PopulationSpec(support=((1, 0.4), (2, 0.6))),
        ),
    }


def _active_bids(batch: AuctionBatch, n_act: int) -> np.ndarray:
    rows = batch.bids[batch.n_act == n_act]
    return rows[~np.isnan(rows)]


def _case_checks(case: str, batch: AuctionBatch, ds: ObservedDataset, invalid_target: float) -> List[EquivalenceCheck]:
    tol = COUNTEREXAMPLE_TOLERANCE
    stats = count_stats(ds)
    single = conditional_quantile(ds, 1)
    pair = ds.prices_with(2)
    checks = [
        EquivalenceCheck("share_nobs_1", case, stats.share(1), 2.0 / 3.0, tol),
        EquivalenceCheck("share_nobs_2", case, stats.share(2), 1.0 / 3.0, tol),
        EquivalenceCheck(
            "mass_at_reserve_given_nobs_1", case, mass_at(single, COUNTEREXAMPLE_RESERVE, MASS_TOLERANCE), 1.0, tol
        ),
    ]
    for t in COUNTEREXAMPLE_CDF_POINTS:
        observed = float(ecdf(EmpiricalQuantile.from_samples(pair), t)) if pair.size else 0.0
        checks.append(EquivalenceCheck(f"price_cdf_nobs_2@{t:.2f}", case, observed, -4 * t * t + 8 * t - 3, tol))
    checks.append(EquivalenceCheck("invalid_share", case, stats.invalid_share or 0.0, invalid_target, tol))
    for k in (1, 2):
        bids = _active_bids(batch, k)
        observed = float(np.mean(bids <= 0.75)) if bids.size else 0.0
        checks.append(EquivalenceCheck(f"bid_cdf_nobs_{k}@0.75", case, observed, 2 * 0.75 - 1, tol))
    return checks


def sp_unknown_n_counterexample(
    L_total: int,
    seed: int = 0,
) -> Tuple[ObservedDataset, ObservedDataset, List[Dict[str, Any]]]:
    """
    模擬兩組反例並比較可觀察的統計量。

    兩組的流標比例不同（1/4 與 1/5），因此觀察流標數時可以區分兩者；
    其餘統計量與 KS 距離都應在容忍度內一致。

    Returns:
        (case_1 資料, case_2 資料, 檢查結果列表)
    """
    info = InfoStructure(observe_nobs=True, observe_invalid_count=True)
    cases = counterexample_cases()
    invalid_targets = {"case_1": 0.25, "case_2": 0.2}
    datasets: Dict[str, ObservedDataset] = {}
    checks: List[EquivalenceCheck] = []
    for offset, (case, (dist, design, population)) in enumerate(cases.items()):
        batch = simulate(dist, design, population, L_total, seed + offset)
        ds = observe(batch, info)
        datasets[case] = ds
        checks.extend(_case_checks(case, batch, ds, invalid_targets[case]))

    first, second = datasets["case_1"], datasets["case_2"]
    for k in (1, 2):
        a, b = first.prices_with(k), second.prices_with(k)
        if a.size and b.size:
            checks.append(EquivalenceCheck(f"ks_price_nobs_{k}", "both", ks_distance(a, b), 0.0, COUNTEREXAMPLE_TOLERANCE))
    log_event(
        "sp_counterexample",
        {"L_total": L_total, "seed": seed, "passed": sum(c.passed for c in checks), "checks": len(checks)},
    )
    return first, second, [c.to_dict() for c in checks]


prop5_counterexample = sp_unknown_n_counterexample


__all__ = [
    "EquivalenceCheck",
    "TwinPrimitive",
    "construct_fp_twin",
    "counterexample_cases",
    "ks_distance",
    "prop5_counterexample",
    "simulate_twin",
    "sp_unknown_n_counterexample",
]
