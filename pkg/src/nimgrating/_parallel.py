import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "NIM_GRATING_THREADS"


def worker_count() -> int:
    value = os.environ.get(THREADS_ENV, "").strip()
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """Map ``fn`` over ``items`` with a thread pool; results keep input order."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
