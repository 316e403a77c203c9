"""Thread fan-out for data-parallel evaluations.

``PATCHLUM_THREADS`` caps the worker count. Results are always returned in
submission order, so reductions downstream stay deterministic.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "PATCHLUM_THREADS"


def thread_count() -> int:
    value = os.environ.get(ENV_VAR)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """``list(map(fn, items))`` spread over a thread pool."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
