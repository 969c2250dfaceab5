"""
core/parallel.py - Ordered parallel map
Results always come back in input order, so reductions over them are deterministic.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """All cores but one, at least one."""
    return max(1, (os.cpu_count() or 2) - 1)


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1,
                processes: bool = False) -> List[R]:
    """Map fn over items with an executor; serial when workers <= 1.

    Process pools need fn and the items to be picklable (module-level functions).
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    executor_cls = ProcessPoolExecutor if processes else ThreadPoolExecutor
    logger.debug(f"ordered_map: {len(items)} tasks on {workers} {'processes' if processes else 'threads'}")
    with executor_cls(max_workers=workers) as pool:
        return list(pool.map(fn, items))
