"""Deterministic chunked Monte Carlo.

The sample budget is cut into fixed-size chunks.  Chunk ``i`` draws from its own
generator, ``SeedSequence(seed, spawn_key=(i,))``, and chunk statistics are merged
in chunk order, so results depend only on (seed, n, chunk_size) and not on the
number of workers or on completion order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int
    seed: int
    chunk_size: int = DEFAULT_CHUNK
    hits: int | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.stderr


@dataclass(frozen=True)
class _Moments:
    n: int
    mean: float
    m2: float
    hits: int

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        if n == 0:
            return self
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return _Moments(n, mean, m2, self.hits + other.hits)


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _chunk_moments(sampler, seed, index, size) -> _Moments:
    vals = np.asarray(sampler(chunk_rng(seed, index), size), dtype=float)
    if vals.size == 0:
        return _Moments(0, 0.0, 0.0, 0)
    mean = float(vals.mean())
    return _Moments(vals.size, mean, float(((vals - mean) ** 2).sum()), int(np.count_nonzero(vals)))


def run_chunks(sampler: Callable[[np.random.Generator, int], np.ndarray], n: int, seed: int,
               chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> _Moments:
    sizes = [min(chunk_size, n - s) for s in range(0, n, chunk_size)]
    if workers <= 1 or len(sizes) == 1:
        parts = [_chunk_moments(sampler, seed, i, m) for i, m in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda im: _chunk_moments(sampler, seed, *im), enumerate(sizes)))
    total = _Moments(0, 0.0, 0.0, 0)
    for p in parts:
        total = total.merge(p)
    return total


def mc_mean(sampler, n: int, seed: int, scale: float = 1.0, chunk_size: int = DEFAULT_CHUNK,
            workers: int = 1) -> MCEstimate:
    """``scale * E[sampler]`` with its standard error.

    ``sampler(rng, m)`` returns ``m`` i.i.d. values.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    mom = run_chunks(sampler, n, seed, chunk_size, workers)
    var = mom.m2 / (mom.n - 1) if mom.n > 1 else 0.0
    note = "no hits: value is a one-sided bound" if mom.hits == 0 else ""
    return MCEstimate(scale * mom.mean, abs(scale) * math.sqrt(var / mom.n), mom.n, seed,
                      chunk_size, mom.hits, note)


def sorted_uniforms(rng: np.random.Generator, m: int, p: int, lo=0.0, hi=1.0) -> np.ndarray:
    """``m`` uniform points of the ordered simplex lo <= s_1 <= ... <= s_p <= hi."""
    return lo + (hi - lo) * np.sort(rng.random((m, p)), axis=1)
