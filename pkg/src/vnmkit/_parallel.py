import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "VNMKIT_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """``list(map(fn, items))``, spread over ``VNMKIT_THREADS`` workers."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
