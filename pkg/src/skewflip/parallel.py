"""Ordered parallel map over path indices.

Every task derives its randomness from its own index, and results come back
in index order, so the worker count never changes a number.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")


def map_ordered(fn: Callable[[int], T], indices: Iterable[int], threads: int = 1) -> list[T]:
    indices = list(indices)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if threads == 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))
