"""Deterministic work distribution over independent path indices.

Results are collected in input order, so any worker count yields the
same output bit for bit. The worker cap comes from the environment
variable DISPERSION_LAB_THREADS (default: serial).
"""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "DISPERSION_LAB_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_THREADS, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def ordered_map(fn, items):
    """Map fn over items, returning results in input order."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
