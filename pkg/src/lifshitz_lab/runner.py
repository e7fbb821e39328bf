"""Deterministic fan-out of independent numbered tasks.

Results are collected into task order no matter how many workers run, so
outputs are identical across parallelism degrees.  Tasks should be pure
functions of their index (plus closed-over config).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["resolve_threads", "indexed_map", "TaskFailure"]

THREADS_ENV = "LIFSHITZ_LAB_THREADS"


class TaskFailure(RuntimeError):
    """Wraps a task exception with its index for the run report."""

    def __init__(self, index: int, error: BaseException):
        super().__init__(f"task {index} failed: {error!r}")
        self.index = index
        self.error = error


def resolve_threads(explicit: int = None) -> int:
    if explicit is not None:
        n = int(explicit)
    else:
        n = int(os.environ.get(THREADS_ENV, "1"))
    if n < 1:
        raise ValueError("thread count must be >= 1")
    return n


def indexed_map(fn, n_tasks: int, threads: int = 1, collect_errors: bool = False):
    """fn(i) for i in range(n_tasks), results returned in index order.

    With collect_errors the return value is (results, failures) where failed
    slots hold None and failures is a list of TaskFailure; otherwise the
    first failure propagates.
    """
    results = [None] * n_tasks
    failures = []

    def guarded(i):
        try:
            return i, fn(i), None
        except Exception as exc:  # noqa: BLE001 - reported via TaskFailure
            return i, None, exc

    if threads <= 1:
        triples = map(guarded, range(n_tasks))
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        try:
            triples = list(pool.map(guarded, range(n_tasks)))
        finally:
            pool.shutdown(wait=True)
    for i, value, exc in triples:
        if exc is not None:
            if not collect_errors:
                raise TaskFailure(i, exc) from exc
            failures.append(TaskFailure(i, exc))
        else:
            results[i] = value
    if collect_errors:
        return results, failures
    return results
