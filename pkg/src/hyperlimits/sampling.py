"""Step hypergraphons of finite hypergraphs and random hypergraph models."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .hypergraph import Hypergraph, hypergraph_from_rows
from .step import (StepFunction, StepHypergraphon, StepPartition, evaluate_sets,
                   symmetrize, uniform_intervals)

EMBED_MAX_CELLS = 10**7


def _multisets(n: int, j: int) -> dict[tuple[int, ...], int]:
    return {s: i for i, s in enumerate(itertools.combinations_with_replacement(range(n), j))}


def _face_key(s: tuple[int, ...], index: dict) -> tuple[int, ...]:
    return tuple(sorted(index[s[:i] + s[i + 1:]] for i in range(len(s))))


def embed(H: Hypergraph) -> StepHypergraphon:
    """The step hypergraphon W^H with ``t(F, W^H) = t(F, H)`` for every F.

    Vertices get equal intervals. For 2 <= j < k the level-j parts are the
    j-multisets of vertices; each cell sends all fiber mass to the multiset
    whose faces it lists, or to part 0 when no multiset fits (such cells
    have volume 0). The top table is the adjacency indicator.
    """
    k, n = H.k, H.n
    if n < 1:
        raise ValidationError("cannot embed a hypergraph with no vertices")
    if k == 1:
        return StepHypergraphon(None, np.asarray(len(H) / n))
    if k > 4:
        raise BudgetExceeded(f"embedding supports uniformity <= 4, got {k}", required=k)
    top_parts = math.comb(n + k - 2, k - 1)
    if top_parts ** k > EMBED_MAX_CELLS:
        raise BudgetExceeded(f"embedding needs {top_parts ** k} top cells", required=top_parts ** k)
    base = uniform_intervals(n)
    index = _multisets(n, 1)
    for j in range(2, k):
        upper = _multisets(n, j)
        by_faces = {}
        for s, i in upper.items():
            by_faces.setdefault(_face_key(s, index), i)
        q = len(index)
        splits = np.zeros((q,) * j + (len(upper),))
        for cell in itertools.combinations_with_replacement(range(q), j):
            splits[cell + (by_faces.get(cell, 0),)] = 1.0
        base = StepPartition.from_splits(base, symmetrize(splits, j))
        index = upper
    values = np.zeros((len(index),) * k)
    for e in H.edges:
        values[_face_key(e, index)] = 1.0
    return StepHypergraphon(base, symmetrize(values, k))


def _coordinate_sets(n: int, k: int) -> dict[int, np.ndarray]:
    return {j: np.asarray(list(itertools.combinations(range(n), j)), dtype=np.int64).reshape(-1, j)
            for j in range(1, k)}


def _k_subsets(n: int, k: int) -> np.ndarray:
    return np.asarray(list(itertools.combinations(range(n), k)), dtype=np.int64).reshape(-1, k)


def sample_gnw(W: StepFunction, n: int, seed: int) -> Hypergraph:
    """One draw of the W-random hypergraph on n vertices.

    A uniform coordinate is drawn for every vertex set of size < k (sizes
    ascending, lexicographic within a size), then every k-set, in
    lexicographic order, is kept when its coin falls below W at its point.
    """
    k = W.level
    if n < k:
        raise ValidationError(f"need n >= k, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    sets = _coordinate_sets(n, k)
    coords = {j: rng.random(len(sets[j])) for j in range(1, k)}
    top = _k_subsets(n, k)
    if k == 1:
        probs = np.full(len(top), float(W.values))
    else:
        probs = evaluate_sets(W, top, sets, coords)
    keep = rng.random(len(top)) < probs
    return hypergraph_from_rows(k, n, top[keep])


def triangle_hypergraph(n: int, p: float, q: float, seed: int) -> Hypergraph:
    """Triangles of G(n, p), each kept independently with probability q."""
    if n < 3:
        raise ValidationError(f"need n >= 3, got {n}")
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise ValidationError("p and q must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pairs = _k_subsets(n, 2)
    present = rng.random(len(pairs)) < p
    adj = np.zeros((n, n), dtype=bool)
    adj[pairs[present, 0], pairs[present, 1]] = True
    triples = _k_subsets(n, 3)
    a, b, c = triples.T
    tri = triples[adj[a, b] & adj[a, c] & adj[b, c]]
    keep = rng.random(len(tri)) < q
    return hypergraph_from_rows(3, n, tri[keep])
