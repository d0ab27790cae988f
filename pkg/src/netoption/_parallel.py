"""Ordered fan-out over a thread pool.

Results come back in submission order, so any reduction done by the caller
is independent of the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def map_ordered(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
