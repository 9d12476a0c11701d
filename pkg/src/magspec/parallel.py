"""Worker budget and order-preserving parallel map.

Results are reduced in input order so outputs are identical for any worker
count; the budget is capped by the MAGSPEC_WORKERS environment variable.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

__all__ = ["worker_budget", "pmap"]


def worker_budget(requested: int | None = None) -> int:
    cap = os.environ.get("MAGSPEC_WORKERS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    if requested is None:
        return max(1, cap)
    return max(1, min(requested, cap))


def pmap(fn, items, workers: int | None = None):
    """Map preserving input order; serial when the budget is one."""
    items = list(items)
    n = worker_budget(workers)
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
