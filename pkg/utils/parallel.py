"""提供批次處理與並行執行的工具函式。"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """讀取 AUCTION_WORKERS，預設為 min(4, CPU 數)。"""
    env = os.getenv("AUCTION_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def chunk_ranges(total: int, size: int) -> List[tuple[int, int]]:
    """把 [0, total) 切成長度 size 的區段。"""
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def map_ordered(func: Callable[[T], R], items: Sequence[T] | Iterable[T], workers: int | None = None) -> List[R]:
    """
    並行執行 func 並依輸入順序回傳結果。

    結果順序與輸入一致，與執行緒數無關。
    """
    items = list(items)
    limit = workers or default_workers()
    if limit <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(limit, len(items))) as pool:
        return list(pool.map(func, items))


__all__ = ["chunk_ranges", "default_workers", "map_ordered"]
