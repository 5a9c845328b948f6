"""Thread-pool helper: order-preserving map whose results do not depend on
the worker count (work items carry their own RNG substreams)."""

from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError


def parallel_map(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads is None:
        threads = 1
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    if threads == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
