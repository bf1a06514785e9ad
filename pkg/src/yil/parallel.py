"""Thread-count resolution and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "YIL_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else the YIL_THREADS environment variable, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        threads = int(raw) if raw else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def parallel_map(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]`` on up to ``threads`` workers; result order is input order."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
