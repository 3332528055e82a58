"""
拍賣資料產生器

流程：
1. `simulate`：依人數分佈抽出 N、依類型抽出出價，得到完整的 AuctionBatch
2. `observe`：套用資訊結構（是否看得到人數、流標數等），得到 ObservedDataset

亂數以 Philox 產生，每個區塊的 counter 固定為區塊編號，
因此同一個 seed 在任何執行緒數下都得到相同的資料。
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.constants import MASS_TOLERANCE, SIM_BLOCK_SIZE

from .distributions import ValueDistribution
from .equilibrium import (
    AuctionDesign,
    AuctionFormat,
    TruncationKind,
    entry_threshold,
    fp_bid_entry_vec,
    fp_bid_reserve_vec,
)
from .error_handler import DomainError, MissingObservableError
from .logging_manager import log_event, log_metric, span
from .parallel import chunk_ranges, map_ordered


@dataclass(frozen=True)
class PopulationSpec:
    """潛在出價人數的分佈 {N: 機率}。"""

    support: Tuple[Tuple[int, float], ...]

    def __post_init__(self) -> None:
        pairs = tuple((int(n), float(p)) for n, p in self.support)
        if not pairs:
            raise DomainError("人數分佈不可為空")
        if any(n < 1 for n, _ in pairs) or any(p < 0 for _, p in pairs):
            raise DomainError("出價人數須 ≥ 1、機率須 ≥ 0")
        if abs(sum(p for _, p in pairs) - 1.0) > 1e-12:
            raise DomainError("人數分佈機率總和須為 1")
        object.__setattr__(self, "support", tuple(sorted(pairs)))

    @classmethod
    def fixed(cls, n_bidders: int) -> "PopulationSpec":
        return cls(support=((n_bidders, 1.0),))

    @property
    def sizes(self) -> np.ndarray:
        return np.array([n for n, _ in self.support], dtype=int)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.support], dtype=float)

    @property
    def n_max(self) -> int:
        return int(self.sizes.max())

    @property
    def is_fixed(self) -> bool:
        return len(self.support) == 1


@dataclass(frozen=True)
class InfoStructure:
    observe_price: bool = True
    observe_nobs: bool = False
    observe_invalid_count: bool = False
    drop_at_reserve: bool = False

    def __post_init__(self) -> None:
        if not self.observe_price:
            raise DomainError("observe_price 必須為 True")

    def to_dict(self) -> Dict[str, bool]:
        return {
            "observe_price": self.observe_price,
            "observe_nobs": self.observe_nobs,
            "observe_invalid_count": self.observe_invalid_count,
            "drop_at_reserve": self.drop_at_reserve,
        }


@dataclass(frozen=True)
class RawAuction:
    auction_id: int
    n_bidders: int
    types: Tuple[float, ...]
    bids: Tuple[float, ...]
    n_act: int
    price: Optional[float]


@dataclass
class AuctionBatch:
    """
    完整（分析者看不到）的拍賣紀錄。

    types / bids 為 (L, N̄) 陣列，未存在或未進場的位置為 NaN；
    price 在無人進場時為 NaN。
    """

    auction_id: np.ndarray
    n_bidders: np.ndarray
    types: np.ndarray
    bids: np.ndarray
    n_act: np.ndarray
    price: np.ndarray
    design: AuctionDesign
    mass_value: float
    seed: Optional[int] = None
    thresholds: Dict[int, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.auction_id.size)

    def __getitem__(self, index: int) -> RawAuction:
        n = int(self.n_bidders[index])
        active = ~np.isnan(self.bids[index])
        price = float(self.price[index])
        return RawAuction(
            auction_id=int(self.auction_id[index]),
            n_bidders=n,
            types=tuple(float(x) for x in self.types[index, :n]),
            bids=tuple(float(x) for x in self.bids[index][active]),
            n_act=int(self.n_act[index]),
            price=None if np.isnan(price) else price,
        )

    def __iter__(self) -> Iterator[RawAuction]:
        for i in range(len(self)):
            yield self[i]


# ==================== 模擬 ====================


def _thresholds(dist: ValueDistribution, design: AuctionDesign, population: PopulationSpec) -> Dict[int, float]:
    if design.is_entry:
        return {int(n): entry_threshold(dist, int(n), design.level) for n in population.sizes}
    return {int(n): design.level for n in population.sizes}


def _bid_matrix(dist: ValueDistribution, design: AuctionDesign, n: int, threshold: float, types: np.ndarray) -> np.ndarray:
    if not design.is_first_price:
        return dist.values(types)
    if design.is_entry:
        return fp_bid_entry_vec(dist, n, design.level, threshold, types)
    return fp_bid_reserve_vec(dist, n, design.level, types)


def settle_prices(bids: np.ndarray, design: AuctionDesign, mass_value: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    由進場者的出價（未進場為 NaN）計算進場人數與成交價。

    第一價格：最高出價。
    第二價格：兩人以上取第二高；只有一人時為保留價（進場成本下為 0）。
    """
    active = ~np.isnan(bids)
    n_act = active.sum(axis=1)
    filled = np.where(active, bids, -np.inf)
    ordered = np.sort(filled, axis=1)
    highest = ordered[:, -1]
    price = np.full(n_act.shape, np.nan)
    if design.is_first_price:
        price = np.where(n_act >= 1, highest, np.nan)
    else:
        second = ordered[:, -2] if bids.shape[1] >= 2 else np.full(n_act.shape, -np.inf)
        price = np.where(n_act >= 2, second, price)
        price = np.where(n_act == 1, mass_value, price)
    return n_act.astype(int), price


def _simulate_block(
    dist: ValueDistribution,
    design: AuctionDesign,
    population: PopulationSpec,
    thresholds: Dict[int, float],
    seed: int,
    block_id: int,
    start: int,
    stop: int,
) -> Dict[str, np.ndarray]:
    bit_gen = np.random.Philox(key=seed, counter=np.array([0, 0, 0, block_id], dtype=np.uint64))
    rng = np.random.Generator(bit_gen)
    size = stop - start
    n_max = population.n_max

    cumulative = np.cumsum(population.probs)
    cumulative[-1] = 1.0
    picks = np.searchsorted(cumulative, rng.random(size), side="right")
    n_bidders = population.sizes[np.minimum(picks, cumulative.size - 1)]

    types = rng.random((size, n_max))
    columns = np.arange(n_max)[None, :]
    types = np.where(columns < n_bidders[:, None], types, np.nan)

    bids = np.full((size, n_max), np.nan)
    for n in np.unique(n_bidders):
        rows = n_bidders == n
        block = types[rows]
        entered = block >= thresholds[int(n)]
        values = _bid_matrix(dist, design, int(n), thresholds[int(n)], np.where(entered, block, 1.0))
        bids[rows] = np.where(entered, values, np.nan)

    mass_value = 0.0 if design.is_entry else float(dist.values(design.level))
    n_act, price = settle_prices(bids, design, mass_value)
    return {
        "auction_id": np.arange(start, stop, dtype=np.int64),
        "n_bidders": n_bidders.astype(int),
        "types": types,
        "bids": bids,
        "n_act": n_act,
        "price": price,
    }


def simulate(
    dist: ValueDistribution,
    design: AuctionDesign,
    population: PopulationSpec,
    L_total: int,
    seed: int = 0,
    workers: Optional[int] = None,
    block_size: int = SIM_BLOCK_SIZE,
) -> AuctionBatch:
    """
    模擬 L_total 場拍賣。

    Args:
        dist: 價值分佈
        design: 拍賣設計
        population: 人數分佈
        L_total: 場次
        seed: 亂數種子
        workers: 執行緒數（不影響結果）
        block_size: 每個亂數區塊的場次

    Returns:
        AuctionBatch
    """
    if L_total < 0:
        raise DomainError(f"L_total 不可為負：{L_total}")
    thresholds = _thresholds(dist, design, population)
    mass_value = 0.0 if design.is_entry else float(dist.values(design.level))
    ranges = chunk_ranges(L_total, block_size)

    started = time.perf_counter()
    with span("simulate", L_total=L_total, seed=seed):
        parts = map_ordered(
            lambda item: _simulate_block(dist, design, population, thresholds, seed, item[0], *item[1]),
            list(enumerate(ranges)),
            workers=workers,
        )

    n_max = population.n_max
    if parts:
        merged = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    else:
        merged = {
            "auction_id": np.zeros(0, dtype=np.int64),
            "n_bidders": np.zeros(0, dtype=int),
            "types": np.zeros((0, n_max)),
            "bids": np.zeros((0, n_max)),
            "n_act": np.zeros(0, dtype=int),
            "price": np.zeros(0),
        }
    log_metric("simulate_seconds", round(time.perf_counter() - started, 4))
    log_event("simulate", {"L_total": L_total, "seed": seed, "format": design.fmt.value, "truncation": design.truncation.value})
    return AuctionBatch(design=design, mass_value=mass_value, seed=seed, thresholds=thresholds, **merged)


def raw_from_bids(
    rows: Sequence[Sequence[float]],
    fmt: AuctionFormat | str,
    reserve: float,
    truncation: TruncationKind | str = TruncationKind.RESERVE,
) -> AuctionBatch:
    """
    以給定出價重播拍賣（第二價格時出價即價值）。

    保留價設計下低於 reserve 的出價視為未進場；
    進場成本設計下列出的出價都是進場者，reserve 參數被忽略。
    """
    truncation = TruncationKind(truncation)
    n_max = max((len(r) for r in rows), default=1)
    bids = np.full((len(rows), n_max), np.nan)
    for i, row in enumerate(rows):
        bids[i, : len(row)] = row
    is_entry = truncation is TruncationKind.ENTRY_COST
    if not is_entry:
        bids = np.where(bids >= reserve, bids, np.nan)
    design = AuctionDesign(fmt=AuctionFormat(fmt), truncation=truncation, level=1.0 if is_entry else 0.0)
    mass_value = 0.0 if is_entry else float(reserve)
    n_act, price = settle_prices(bids, design, mass_value)
    return AuctionBatch(
        auction_id=np.arange(len(rows), dtype=np.int64),
        n_bidders=np.array([len(r) for r in rows], dtype=int),
        types=np.full((len(rows), n_max), np.nan),
        bids=bids,
        n_act=n_act,
        price=price,
        design=design,
        mass_value=mass_value,
    )


# ==================== 觀察資料 ====================


@dataclass
class ObservedDataset:
    """
    分析者看得到的資料。

    frame 欄位：auction_id、transaction_price、n_obs（未觀察時整欄為 NA）。
    L_invalid 只有在觀察流標數時才有值。
    """

    frame: pd.DataFrame
    info: InfoStructure
    L_invalid: Optional[int] = None
    fmt: Optional[str] = None
    truncation: Optional[str] = None
    seed: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def L(self) -> int:
        return int(len(self.frame))

    @property
    def prices(self) -> np.ndarray:
        return self.frame["transaction_price"].to_numpy(dtype=float)

    @property
    def has_nobs(self) -> bool:
        return self.info.observe_nobs and bool(self.frame["n_obs"].notna().all())

    @property
    def n_obs(self) -> np.ndarray:
        if not self.has_nobs:
            raise MissingObservableError("資料未包含出價人數 n_obs")
        return self.frame["n_obs"].to_numpy(dtype=int)

    @property
    def invalid_count(self) -> int:
        if not self.info.observe_invalid_count or self.L_invalid is None:
            raise MissingObservableError("資料未包含流標數 L_invalid")
        return int(self.L_invalid)

    def prices_with(self, n_obs: int) -> np.ndarray:
        return self.prices[self.n_obs == n_obs]

    def subset(self, mask: np.ndarray, invalid_share: float = 1.0) -> "ObservedDataset":
        """取出部分列；invalid_share 為保留的流標數比例。"""
        invalid = None if self.L_invalid is None else int(round(self.L_invalid * invalid_share))
        return ObservedDataset(
            frame=self.frame.loc[np.asarray(mask)].reset_index(drop=True),
            info=self.info,
            L_invalid=invalid,
            fmt=self.fmt,
            truncation=self.truncation,
            seed=self.seed,
            metadata=dict(self.metadata),
        )

    def fold_out(self, fold: int, folds: int) -> "ObservedDataset":
        """刪去 auction_id % folds == fold 的列（jackknife 用）。"""
        keep = self.frame["auction_id"].to_numpy() % folds != fold
        return self.subset(keep, invalid_share=(folds - 1) / folds)


def observe(batch: AuctionBatch, info: InfoStructure) -> ObservedDataset:
    """依資訊結構過濾完整紀錄；無人進場的場次不出現在資料中。"""
    valid = batch.n_act >= 1
    price = batch.price[valid]
    ids = batch.auction_id[valid]
    n_act = batch.n_act[valid]

    keep = np.ones(price.shape, dtype=bool)
    if info.drop_at_reserve and not batch.design.is_first_price:
        keep = np.abs(price - batch.mass_value) > MASS_TOLERANCE

    n_obs = pd.array(n_act[keep], dtype="Int64") if info.observe_nobs else pd.array([pd.NA] * int(keep.sum()), dtype="Int64")
    frame = pd.DataFrame(
        {
            "auction_id": ids[keep].astype(np.int64),
            "transaction_price": price[keep].astype(float),
            "n_obs": n_obs,
        }
    )
    invalid = int((~valid).sum()) if info.observe_invalid_count else None
    return ObservedDataset(
        frame=frame,
        info=info,
        L_invalid=invalid,
        fmt=batch.design.fmt.value,
        truncation=batch.design.truncation.value,
        seed=batch.seed,
    )


__all__ = [
    "AuctionBatch",
    "InfoStructure",
    "ObservedDataset",
    "PopulationSpec",
    "RawAuction",
    "observe",
    "raw_from_bids",
    "settle_prices",
    "simulate",
]
