import os
from concurrent.futures import ThreadPoolExecutor


def n_threads():
    """Worker count from ``NSSE_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("NSSE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"NSSE_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("NSSE_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def pmap(fn, items):
    """Order-preserving map; runs in a thread pool when more than one worker."""
    items = list(items)
    workers = min(n_threads(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
