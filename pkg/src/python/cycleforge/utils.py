"""Utility functions shared by the construction stages"""

import concurrent.futures
import functools
import json
import logging
import math
import os
from collections.abc import Callable, Iterable, Iterator, Sequence
from typing import Any, TypeVar

from .errors import ConfigurationError, RetriesExhaustedError, StageFailure

T = TypeVar("T")
R = TypeVar("R")

WORKERS_ENV = "CYCLEFORGE_WORKERS"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Configure the package logger with a single stream handler."""
    logger = logging.getLogger("cycleforge")
    logger.setLevel(level.upper())

    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)

    return logger


def worker_count(default: int = 1) -> int:
    """Worker count, overridable through the CYCLEFORGE_WORKERS environment variable.

    Raises:
        ConfigurationError: If the variable is set but not a positive integer
    """
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        workers = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {raw!r}", e) from e
    if workers < 1:
        raise ConfigurationError(f"{WORKERS_ENV} must be at least 1, got {workers}")
    return workers


def binom(n: int, r: int) -> int:
    """Binomial coefficient that is 0 outside 0 <= r <= n."""
    if r < 0 or n < 0 or r > n:
        return 0
    return math.comb(n, r)


def chunked(items: Sequence[T], parts: int) -> list[Sequence[T]]:
    """Split a sequence into at most `parts` contiguous, non-empty slices."""
    if not items:
        return []
    parts = max(1, min(parts, len(items)))
    size, extra = divmod(len(items), parts)
    chunks = []
    start = 0
    for index in range(parts):
        stop = start + size + (1 if index < extra else 0)
        chunks.append(items[start:stop])
        start = stop
    return chunks


def run_partitioned(
    func: Callable[[T], R], partitions: Iterable[T], workers: int = 1
) -> list[R]:
    """Run `func` over every partition and return the results in partition order.

    Args:
        func: Worker function applied to one partition
        partitions: Disjoint units of work
        workers: Thread count; 1 runs inline

    Returns:
        One result per partition, ordered like the input
    """
    partitions = list(partitions)
    if workers <= 1 or len(partitions) <= 1:
        return [func(part) for part in partitions]

    results: list[Any] = [None] * len(partitions)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {
            executor.submit(func, part): index for index, part in enumerate(partitions)
        }
        for future in concurrent.futures.as_completed(future_to_index):
            results[future_to_index[future]] = future.result()
    return results


def retry(
    max_attempts: int = 3,
    retry_exceptions: tuple = (StageFailure,),
    logger: logging.Logger | None = None,
) -> Callable:
    """Restart decorator; the wrapped function receives the zero-based `attempt`."""

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            last_exception = None

            for attempt in range(max_attempts):
                try:
                    return func(*args, attempt=attempt, **kwargs)
                except retry_exceptions as e:
                    last_exception = e

                    if hasattr(e, "retry_allowed") and not e.retry_allowed:
                        if logger:
                            logger.warning(f"Retry not allowed for error: {e!s}, giving up.")
                        raise

                    if logger:
                        logger.info(
                            json.dumps(
                                {
                                    "action": "retry_attempt",
                                    "attempt": attempt + 1,
                                    "max_attempts": max_attempts,
                                    "reason": str(e),
                                }
                            )
                        )

            raise RetriesExhaustedError(
                f"All {max_attempts} attempts failed: {last_exception!s}",
                original_exception=last_exception,
                attempts=max_attempts,
                certificate=getattr(last_exception, "certificate", None),
            )

        return wrapper

    return decorator


def iter_pairs(vertices: Sequence[int]) -> Iterator[tuple[int, int]]:
    """All unordered pairs of a sorted vertex sequence, as (min, max) tuples."""
    for i, u in enumerate(vertices):
        for v in vertices[i + 1 :]:
            yield (u, v) if u < v else (v, u)
