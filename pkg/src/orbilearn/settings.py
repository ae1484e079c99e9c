import functools
import logging
import os
import threading
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

from .exceptions import ConfigurationError

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "ORBILEARN_THREADS"
LOG_LEVEL_ENV = "ORBILEARN_LOG_LEVEL"


@dataclass(frozen=True, slots=True)
class Settings:
    """
    Process-wide settings read from the environment.

    Attributes:
        threads: Cap on internal parallelism (heuristic restarts, risk
            evaluation, distance matrices).
        log_level: Level name used by the CLI when configuring logging.
    """

    threads: int
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls) -> "Settings":
        raw = os.environ.get(THREADS_ENV)
        if raw is None or raw == "":
            threads = os.cpu_count() or 1
        else:
            try:
                threads = int(raw)
            except ValueError:
                raise ConfigurationError(
                    f"{THREADS_ENV} must be a positive integer, got {raw!r}",
                    field=THREADS_ENV,
                ) from None
            if threads < 1:
                raise ConfigurationError(
                    f"{THREADS_ENV} must be a positive integer, got {raw!r}",
                    field=THREADS_ENV,
                )

        level = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ConfigurationError(
                f"{LOG_LEVEL_ENV} is not a logging level: {level!r}",
                field=LOG_LEVEL_ENV,
            )
        return cls(threads=threads, log_level=level)


@functools.cache
def get_settings() -> Settings:
    """Settings read from the environment on first use."""
    return Settings.from_env()


_worker = threading.local()


def _as_worker(fn: Callable[[T], R]) -> Callable[[T], R]:
    def run(item: T) -> R:
        _worker.active = True
        try:
            return fn(item)
        finally:
            _worker.active = False

    return run


def thread_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """
    Map ``fn`` over ``items`` on a thread pool, results in input order.

    Reductions done by the caller over the returned list are therefore
    independent of scheduling. Calls made from inside a pool worker run
    inline, so nested maps never exceed ``threads`` workers.
    """
    items = list(items)
    threads = min(get_settings().threads, len(items))
    if threads <= 1 or getattr(_worker, "active", False):
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_as_worker(fn), items))
