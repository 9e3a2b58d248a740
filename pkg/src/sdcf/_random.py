"""Seeded random streams and an order-preserving parallel map.

Paths are generated in fixed-size blocks, each drawing from its own
``SeedSequence(seed, spawn_key=(block,))`` substream. The block layout depends
only on the path count, never on the number of workers, so results are
bit-identical however the blocks are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

BLOCK_SIZE = 4096

T = TypeVar("T")
R = TypeVar("R")


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, block)))


def blocks(n: int, size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """``(block_index, start, stop)`` triples covering ``range(n)``."""
    return [(b, start, min(start + size, n)) for b, start in enumerate(range(0, n, size))]


def standard_normals(seed: int, n: int, shape: tuple[int, ...], workers: int = 1, stream: int = 0) -> np.ndarray:
    """``n`` rows of standard normals, each row of the given trailing shape."""
    out = np.empty((n, *shape))

    def fill(spec):
        b, start, stop = spec
        out[start:stop] = block_generator(seed, b, stream).standard_normal((stop - start, *shape))

    pmap(fill, blocks(n), workers)
    return out


def coin_flips(seed: int, n: int, steps: int, workers: int = 1, stream: int = 1) -> np.ndarray:
    """``n`` x ``steps`` boolean array of fair up/down moves."""
    out = np.empty((n, steps), dtype=bool)

    def fill(spec):
        b, start, stop = spec
        out[start:stop] = block_generator(seed, b, stream).integers(0, 2, size=(stop - start, steps)).astype(bool)

    pmap(fill, blocks(n), workers)
    return out
