"""Seeded block sampling shared by the Monte Carlo estimators.

Samples are drawn in blocks of ``BLOCK`` with one generator per block, seeded
from ``(seed, block index)``. Blocks are concatenated in index order, so the
result does not depend on how many worker threads ran them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

BLOCK = 4096


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def sample_blocks(draw: Callable[[np.random.Generator, int], np.ndarray],
                  samples: int, seed: int, threads: int = 1) -> np.ndarray:
    """Concatenate ``draw(rng_b, size_b)`` over all blocks in block order."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sizes = [min(BLOCK, samples - start) for start in range(0, samples, BLOCK)]

    def run(b: int) -> np.ndarray:
        return np.asarray(draw(block_rng(seed, b), sizes[b]), dtype=float)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    return np.concatenate(parts)


def mean_stderr(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and standard error of the mean.

    Deviations are taken from the first sample, so a constant sample returns
    its value exactly with zero error.
    """
    shift = values[0]
    dev = values - shift
    mean = float(shift + dev.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(dev.std(ddof=1) / math.sqrt(values.size))
