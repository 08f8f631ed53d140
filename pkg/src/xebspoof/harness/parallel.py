"""Worker-pool helper. Results always come back in submission order and all
randomness is derived per task, so the thread count never changes outputs."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
