# src/ksdk/ensemble.py
# Monte Carlo ensembles over immutable task descriptors.
# Results come back in task order whatever the worker count; with counter-based
# RNG streams this makes every ensemble reproducible from (config, seed).

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# read-only baseline (det trajectory, σ path, ...) installed once per worker process
_SHARED: Any = None


def _install_shared(shared: Any) -> None:
    global _SHARED
    _SHARED = shared


def _call(worker: Callable[[Any, T], R], task: T) -> R:
    return worker(_SHARED, task)


def run_ensemble(
    worker: Callable[[Any, T], R],
    tasks: Sequence[T],
    shared: Any = None,
    n_workers: int = 1,
) -> List[R]:
    """Evaluate worker(shared, task) for every task.

    worker must be a module-level function and tasks picklable when n_workers > 1.
    """
    if n_workers < 1:
        raise ValueError(f"n_workers must be >= 1, got {n_workers}")
    if n_workers == 1 or len(tasks) <= 1:
        return [worker(shared, t) for t in tasks]

    chunksize = max(1, len(tasks) // (4 * n_workers))
    log.debug("ensemble: %d tasks on %d workers (chunksize %d)", len(tasks), n_workers, chunksize)
    with ProcessPoolExecutor(
        max_workers=n_workers, initializer=_install_shared, initargs=(shared,)
    ) as pool:
        # map yields in submission order
        return list(pool.map(_call, [worker] * len(tasks), tasks, chunksize=chunksize))
