"""Random streams and replicate blocks.

Replicates are split into fixed-size blocks; block ``j`` always draws from
stream ``(seed, j)``. Results therefore do not depend on how many threads
execute the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

BLOCK = 4096


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    return RngStream(int(seed), int(stream_id)).generator()


def as_seed(rng) -> int:
    """Seed for block streams: ints pass through, generators are drawn from."""
    if rng is None:
        return 0
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return int(rng.integers(0, 2**63 - 1))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return rng_stream(as_seed(rng))


class Uniforms:
    """Buffered uniform draws for scalar-heavy simulation loops."""

    __slots__ = ("_rng", "_buf", "_i", "_size")

    def __init__(self, rng: np.random.Generator, size: int = 8192):
        self._rng = rng
        self._size = size
        self._buf = rng.random(size).tolist()
        self._i = 0

    def u(self) -> float:
        i = self._i
        if i == self._size:
            self._buf = self._rng.random(self._size).tolist()
            i = 0
        self._i = i + 1
        return self._buf[i]

    def exp(self) -> float:
        return -math.log(1.0 - self.u())

    @property
    def generator(self) -> np.random.Generator:
        return self._rng


def default_threads() -> int:
    return os.cpu_count() or 1


def run_blocks(fn: Callable[[int, np.random.Generator], np.ndarray], reps: int,
               seed: int, threads: int | None = None, block: int = BLOCK,
               offset: int = 0) -> np.ndarray:
    """Call ``fn(size, generator)`` on consecutive blocks and stack the results.

    ``offset`` shifts the stream ids so independent estimators sharing a seed
    do not reuse streams.
    """
    sizes = [block] * (reps // block)
    if reps % block:
        sizes.append(reps % block)
    jobs = [(s, offset + j) for j, s in enumerate(sizes)]

    def one(job):
        size, sid = job
        return np.asarray(fn(size, rng_stream(seed, sid)))

    threads = threads or 1
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts, axis=0)
