"""Deterministic thread fan-out controlled by ``PASM_THREADS``."""
import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    raw = os.environ.get("PASM_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"PASM_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("PASM_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def ordered_map(fn, items):
    """``list(map(fn, items))``, possibly on worker threads; output order is input order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
