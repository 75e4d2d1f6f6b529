"""Seed derivation and order-preserving parallel map.

Every stochastic unit of work (trial, shot, sweep cell) gets its own
generator derived from ``(master seed, index)``, so results never depend on
how the work is split across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

SEED_ENV = "SPINSIM_SEED"


def stream(seed: int, *index: int) -> np.random.Generator:
    """Independent generator for one unit of work."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, index)]))


def chunks(n: int, size: int) -> list[range]:
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def pmap(fn: Callable[[T], R], items: Sequence[T] | Iterable[T], jobs: int = 1) -> list[R]:
    """``[fn(x) for x in items]`` run on ``jobs`` threads, results in input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def seed_from_env(seed: int | None) -> int | None:
    if seed is not None:
        return seed
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    return int(raw)
