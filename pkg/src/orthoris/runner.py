"""Deterministic parallel execution of Monte Carlo trials."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, TypeVar

import numpy as np

from orthoris.errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "ORTHORIS_THREADS"

J = TypeVar("J")
R = TypeVar("R")


@dataclass(frozen=True)
class TrialKey:
    """Identity of one trial; its random stream depends on nothing else."""

    seed: int
    point: int
    trial: int

    def rng(self, *extra: int) -> np.random.Generator:
        """Generator for this trial, optionally split further by ``extra`` indices."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.point, self.trial, *extra]))


def trial_keys(seed: int, point: int, trials: int) -> list[TrialKey]:
    return [TrialKey(seed=seed, point=point, trial=t) for t in range(trials)]


def thread_cap() -> Optional[int]:
    """Worker cap from ORTHORIS_THREADS, or None when unset.

    Raises:
        ConfigError: If the variable is set but not a positive integer
    """
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or raw.strip() == "":
        return None
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    return cap


def resolve_workers(requested: Optional[int] = None) -> int:
    """Number of worker processes: the request (default: CPU count) capped by ORTHORIS_THREADS."""
    workers = requested if requested is not None else (os.cpu_count() or 1)
    cap = thread_cap()
    if cap is not None:
        workers = min(workers, cap)
    return max(1, workers)


class TrialRunner:
    """Maps a trial function over jobs, in parallel when allowed.

    Results always come back in job order, so any reduction over them is
    independent of the worker count. The trial function and its jobs must
    be picklable when more than one worker is used.
    """

    def __init__(self, workers: Optional[int] = None):
        self.workers = resolve_workers(workers)

    def map(self, fn: Callable[[J], R], jobs: Iterable[J]) -> list[R]:
        jobs = list(jobs)
        if self.workers == 1 or len(jobs) <= 1:
            return [fn(job) for job in jobs]

        workers = min(self.workers, len(jobs))
        chunksize = max(1, len(jobs) // (4 * workers))
        logger.debug("Running %d trials on %d workers (chunks of %d)", len(jobs), workers, chunksize)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs, chunksize=chunksize))

