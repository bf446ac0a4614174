"""
Trial pool: ordered map of independent trials over threads, processes or inline.

Trials are CPU bound slot loops. On a free-threaded build (GIL disabled) threads
scale; on a standard build the pool uses processes. One worker runs inline, which
keeps single-trial runs and tests free of executor start-up.

Results always come back in submission order, so aggregation never depends on
which worker finished first.
"""

import logging
import os
import sys
import time
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, List, Optional

import psutil

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

BACKENDS = ("inline", "thread", "process")


@dataclass
class PoolMetrics:
    """Throughput of one pool session."""

    backend: str
    workers: int
    tasks_completed: int
    wall_seconds: float
    cpu_seconds: float
    throughput: float  # trials/sec

    @property
    def utilization(self) -> float:
        """CPU seconds per wall second per worker, 0-1."""
        if self.wall_seconds <= 0 or self.workers == 0:
            return 0.0
        return max(0.0, min(1.0, self.cpu_seconds / self.wall_seconds / self.workers))


def gil_disabled() -> bool:
    """True on a free-threaded interpreter with the GIL actually off."""
    check = getattr(sys, "_is_gil_enabled", None)
    return check is not None and not check()


def default_workers() -> int:
    """Physical cores, falling back to logical ones."""
    return psutil.cpu_count(logical=False) or os.cpu_count() or 1


def _cpu_seconds(process: psutil.Process) -> float:
    t = process.cpu_times()
    return t.user + t.system + getattr(t, "children_user", 0.0) + getattr(t, "children_system", 0.0)


class TrialPool:
    """
    Context-managed pool for Monte Carlo trials.

    Usage:
        with TrialPool(workers=4) as pool:
            outcomes = pool.map(run_trial_task, tasks)
    """

    def __init__(self, workers: Optional[int] = None, backend: Optional[str] = None):
        """
        Args:
            workers: Worker count (default: physical cores)
            backend: "inline", "thread" or "process" (default: picked from workers and GIL)
        """
        self.workers = default_workers() if workers is None else int(workers)
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if backend is None:
            if self.workers == 1:
                backend = "inline"
            else:
                backend = "thread" if gil_disabled() else "process"
        if backend not in BACKENDS:
            raise ConfigurationError(f"unknown pool backend {backend!r}")
        self.backend = backend

        self._executor: Optional[Executor] = None
        self._process = psutil.Process()
        self._tasks_completed = 0
        self._started = 0.0
        self._cpu_started = 0.0
        self._metrics: Optional[PoolMetrics] = None

    def __enter__(self):
        if self.backend == "thread":
            self._executor = ThreadPoolExecutor(max_workers=self.workers)
        elif self.backend == "process":
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        self._tasks_completed = 0
        self._started = time.perf_counter()
        self._cpu_started = _cpu_seconds(self._process)
        logger.debug("trial pool up: %s x%d", self.backend, self.workers)
        return self

    def __exit__(self, *args):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
        wall = time.perf_counter() - self._started
        self._metrics = PoolMetrics(
            backend=self.backend,
            workers=self.workers,
            tasks_completed=self._tasks_completed,
            wall_seconds=wall,
            cpu_seconds=_cpu_seconds(self._process) - self._cpu_started,
            throughput=self._tasks_completed / wall if wall > 0 else 0.0,
        )

    def map(self, fn: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        """Apply fn to every item; results in item order. fn must be picklable for processes."""
        items = list(items)
        if self.backend == "inline":
            results = [fn(item) for item in items]
        else:
            if self._executor is None:
                raise RuntimeError("Pool not initialized (use 'with' statement)")
            chunk = max(1, len(items) // (4 * self.workers))
            results = list(self._executor.map(fn, items, chunksize=chunk))
        self._tasks_completed += len(results)
        return results

    def get_metrics(self) -> Optional[PoolMetrics]:
        """Metrics of the last finished session."""
        return self._metrics

    def print_status(self) -> None:
        if not self._metrics:
            print("No metrics available yet")
            return
        m = self._metrics
        print(f"\n📊 Trial pool ({m.backend} x{m.workers}):")
        print(f"  Trials: {m.tasks_completed} in {m.wall_seconds:.2f} s")
        print(f"  Throughput: {m.throughput:.1f} trials/sec")
        print(f"  CPU utilization: {m.utilization:.1%}")
