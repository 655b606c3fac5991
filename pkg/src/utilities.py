import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Any, List, Optional

import numpy as np

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> None:
    """
    Route package logs to stderr, or to `log_file` when given.

    Args:
        log_level: One of DEBUG, INFO, WARNING, ERROR, CRITICAL.
        log_file: Optional path; the file is appended to.
    """
    handler: logging.Handler
    if log_file:
        handler = logging.FileHandler(log_file, encoding="utf-8")
    else:
        handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root = logging.getLogger("src")
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(log_level.upper())
    root.propagate = False


def default_threads() -> int:
    return os.cpu_count() or 1


def derive_seeds(seed: int, count: int) -> List[int]:
    """`count` independent child seeds of `seed`, stable across runs and platforms."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)]


def run_multithreaded(
    func_list: List[Callable[[], Any]],
    threads: int = 4,
    exit_on_exception: bool = False
) -> List[Any]:
    """
    Run a list of functions concurrently using multithreading.

    Args:
        func_list: List of callable functions (no-argument functions).
        threads: Number of worker threads to use.
        exit_on_exception: If True, cancel pending tasks and re-raise the first exception.

    Returns:
        List of results in the same order as func_list.
        Exceptions are stored in the list if exit_on_exception is False.
    """
    results: List[Any] = [None] * len(func_list)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        future_to_index = {executor.submit(f): i for i, f in enumerate(func_list)}

        for future in as_completed(future_to_index):
            idx = future_to_index[future]
            try:
                results[idx] = future.result()
            except Exception as e:
                if exit_on_exception:
                    logger.error("task %d failed: %s", idx, e)
                    for pending in future_to_index:
                        pending.cancel()
                    raise
                results[idx] = e

    return results
