"""Worker-pool sizing and a small ordered parallel map.

The MSPREP_THREADS environment variable caps worker parallelism; 0 or unset
means auto (one worker per CPU).  Results are always returned in input
order, so callers stay deterministic regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    raw = os.environ.get("MSPREP_THREADS", "0")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"MSPREP_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ValueError(f"MSPREP_THREADS must be >= 0, got {value}")
    if value == 0:
        return os.cpu_count() or 1
    return value


def ordered_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Apply ``fn`` to every item, in parallel when workers allow."""
    workers = min(worker_count(), len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
