"""Utility functions for plateau-cli"""

import os
import signal
import sys
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def interrupted_message():
    """Handle Ctrl+C with a short message and the conventional exit status"""
    print("\n⏹  Interrupted. Partial results already written are kept.")
    sys.exit(130)


def setup_signal_handler():
    """Register the signal handler for graceful exit"""
    signal.signal(signal.SIGINT, lambda signum, frame: interrupted_message())


def available_threads() -> int:
    """Number of usable cores (at least 1)"""
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def chunk_slices(total: int, chunk_size: int) -> list[slice]:
    """Fixed-size consecutive slices covering ``range(total)``"""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be positive, got {chunk_size}")
    return [slice(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` with a thread pool, returning results in input order"""
    items: Sequence[T] = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
