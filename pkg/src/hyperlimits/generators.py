"""Random step structures and hypergraphs for tests and experiments."""

from __future__ import annotations

import itertools

import numpy as np

from .hypergraph import Hypergraph, make_hypergraph
from .step import StepFunction, StepHypergraphon, StepPartition, interval_partition, symmetrize


def random_partition(rng: np.random.Generator, level: int, parts: int | list[int],
                     concentration: float = 1.0) -> StepPartition:
    """Random stacked partition; ``parts`` may list part counts per level."""
    counts = [parts] * level if isinstance(parts, int) else list(parts)
    P = interval_partition(rng.dirichlet(np.full(counts[0], concentration)))
    for j in range(2, level + 1):
        raw = rng.dirichlet(np.full(counts[j - 1], concentration), size=(P.parts,) * j)
        P = StepPartition.from_splits(P, symmetrize(raw, j))
    return P


def random_values(rng: np.random.Generator, q: int, k: int, binary: bool = False) -> np.ndarray:
    raw = rng.random((q,) * k)
    if binary:
        raw = (raw < 0.5).astype(float)
    return symmetrize(raw, k)


def random_hypergraphon(rng: np.random.Generator, base: StepPartition | None,
                        binary: bool = False) -> StepHypergraphon:
    if base is None:
        return StepHypergraphon(None, np.asarray(float(rng.random())))
    return StepHypergraphon(base, random_values(rng, base.parts, base.level + 1, binary))


def random_signed(rng: np.random.Generator, base: StepPartition) -> StepFunction:
    """Step function with values uniform in [-1, 1]."""
    k = base.level + 1
    return StepFunction(base, symmetrize(rng.uniform(-1, 1, size=(base.parts,) * k), k))


def random_hypergraph(rng: np.random.Generator, k: int, n: int, p: float = 0.5) -> Hypergraph:
    edges = [e for e in itertools.combinations(range(n), k) if rng.random() < p]
    return make_hypergraph(k, n, edges)
