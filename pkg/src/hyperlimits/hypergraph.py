"""Finite k-uniform hypergraphs, index subsets, homomorphism counts and
small-scale isomorphism classes.

Vertices are 0-based integers. An edge is stored as a sorted tuple and the
edge list of a :class:`Hypergraph` is strictly sorted, so two hypergraphs are
equal exactly when their canonical storage agrees.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .mc import mean_stderr, sample_blocks

DEFAULT_HOM_BUDGET = 10**8
CANONICAL_MAX_VERTICES = 8
ENUMERATE_MAX_VERTICES = 6
DENSE_LOOKUP_CELLS = 1 << 24


# ---------------------------------------------------------------------------
# Index subsets r(A), r_<(A), r(A, m)
# ---------------------------------------------------------------------------

def nonempty_subsets(ground: Iterable[int], max_size: int | None = None,
                     proper: bool = False) -> list[tuple[int, ...]]:
    """All nonempty subsets of ``ground`` of size at most ``max_size``.

    Ordered by size, then lexicographically. ``proper=True`` drops the full
    set. ``nonempty_subsets(range(k), proper=True)`` indexes the coordinates
    of a k-uniform hypergraphon.
    """
    elems = sorted(set(ground))
    top = len(elems) if max_size is None else min(max_size, len(elems))
    if proper:
        top = min(top, len(elems) - 1)
    out: list[tuple[int, ...]] = []
    for size in range(1, top + 1):
        out.extend(itertools.combinations(elems, size))
    return out


def subset_count(size: int, max_size: int) -> int:
    """|r(A, m)| for |A| = size."""
    return sum(math.comb(size, j) for j in range(1, min(size, max_size) + 1))


def subset_mask(subset: Iterable[int]) -> int:
    mask = 0
    for v in subset:
        mask |= 1 << v
    return mask


def mask_subset(mask: int) -> tuple[int, ...]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return tuple(out)


def permute_subset(sigma: Sequence[int], subset: Iterable[int]) -> tuple[int, ...]:
    """Image of ``subset`` under the permutation ``v -> sigma[v]``."""
    return tuple(sorted(sigma[v] for v in subset))


def faces(edge: Sequence[int]) -> list[tuple[int, ...]]:
    """The k faces of a k-set: face i omits the i-th element."""
    return [tuple(edge[:i]) + tuple(edge[i + 1:]) for i in range(len(edge))]


# ---------------------------------------------------------------------------
# Hypergraph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hypergraph:
    k: int
    n: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"uniformity must be >= 1, got {self.k}")
        if self.n < 0:
            raise ValidationError(f"vertex count must be >= 0, got {self.n}")
        for e in self.edges:
            if len(e) != self.k or list(e) != sorted(set(e)):
                raise ValidationError(f"edge {e} is not a sorted {self.k}-set")
            if e[0] < 0 or e[-1] >= self.n:
                raise ValidationError(f"edge {e} has a vertex outside 0..{self.n - 1}")
        if any(a >= b for a, b in zip(self.edges, self.edges[1:])):
            raise ValidationError("edge list must be strictly sorted")

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def vertices(self) -> range:
        return range(self.n)

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for e in self.edges:
            for v in e:
                deg[v] += 1
        return deg

    def relabel(self, sigma: Sequence[int]) -> "Hypergraph":
        """Image under the vertex permutation ``v -> sigma[v]``."""
        return Hypergraph(self.k, self.n,
                          tuple(sorted(permute_subset(sigma, e) for e in self.edges)))


def make_hypergraph(k: int, n: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
    """Validate and canonicalize an edge list; duplicate edges collapse."""
    if k < 1:
        raise ValidationError(f"uniformity must be >= 1, got {k}")
    if n < 0:
        raise ValidationError(f"vertex count must be >= 0, got {n}")
    canon = set()
    for raw in edges:
        e = tuple(raw)
        if len(e) != k:
            raise ValidationError(f"edge {e} has {len(e)} vertices, expected {k}")
        if len(set(e)) != k:
            raise ValidationError(f"edge {e} repeats a vertex")
        if any(not (0 <= v < n) for v in e):
            raise ValidationError(f"edge {e} has a vertex outside 0..{n - 1}")
        canon.add(tuple(sorted(int(v) for v in e)))
    return Hypergraph(k, n, tuple(sorted(canon)))


def hypergraph_from_rows(k: int, n: int, rows: np.ndarray) -> Hypergraph:
    """Hypergraph from an (m, k) integer array of edges, validated with numpy.

    Rows are sorted and deduplicated; intended for large sampled edge sets.
    """
    rows = np.sort(np.asarray(rows, dtype=np.int64).reshape(-1, k), axis=1)
    if rows.size:
        if rows.min() < 0 or rows.max() >= n:
            raise ValidationError(f"edge has a vertex outside 0..{n - 1}")
        if k > 1 and np.any(rows[:, 1:] == rows[:, :-1]):
            raise ValidationError("edge repeats a vertex")
    rows = np.unique(rows, axis=0)
    H = object.__new__(Hypergraph)
    object.__setattr__(H, "k", k)
    object.__setattr__(H, "n", n)
    object.__setattr__(H, "edges", tuple(map(tuple, rows.tolist())))
    return H


def complete_hypergraph(k: int, n: int) -> Hypergraph:
    return Hypergraph(k, n, tuple(itertools.combinations(range(n), k)))


def disjoint_union(F1: Hypergraph, F2: Hypergraph) -> Hypergraph:
    if F1.k != F2.k:
        raise ValidationError("disjoint union needs equal uniformity")
    shifted = [tuple(v + F1.n for v in e) for e in F2.edges]
    return make_hypergraph(F1.k, F1.n + F2.n, list(F1.edges) + shifted)


def shadow(F: Hypergraph) -> Hypergraph:
    """(k-1)-sets contained in some edge, on the same vertex set."""
    if F.k < 2:
        raise ValidationError("shadow is defined for uniformity >= 2")
    return make_hypergraph(F.k - 1, F.n, {f for e in F.edges for f in faces(e)})


# ---------------------------------------------------------------------------
# Homomorphisms
# ---------------------------------------------------------------------------

class HomCount(NamedTuple):
    count: int | None
    density: float
    stderr: float = 0.0
    samples: int | None = None


def _edge_keys(H: Hypergraph) -> np.ndarray:
    if not H.edges:
        return np.zeros(0, dtype=np.int64)
    arr = np.asarray(H.edges, dtype=np.int64)
    weights = H.n ** np.arange(H.k, dtype=np.int64)
    return np.sort(arr @ weights)


def _is_edge(rows: np.ndarray, keys: np.ndarray, n: int) -> np.ndarray:
    """Edge membership for each row of vertex images (rows: (..., k))."""
    if keys.size == 0:
        return np.zeros(rows.shape[:-1], dtype=bool)
    srt = np.sort(rows, axis=-1)
    distinct = np.all(srt[..., 1:] != srt[..., :-1], axis=-1)
    weights = n ** np.arange(rows.shape[-1], dtype=np.int64)
    key = srt.astype(np.int64) @ weights
    pos = np.clip(np.searchsorted(keys, key), 0, keys.size - 1)
    return distinct & (keys[pos] == key)


def _hom_plan(F: Hypergraph):
    deg = F.degrees()
    order = sorted(range(F.n), key=lambda v: (-deg[v], v))
    rank = {v: i for i, v in enumerate(order)}
    closing: list[list[tuple[int, ...]]] = [[] for _ in order]
    for e in F.edges:
        closing[max(rank[v] for v in e)].append(e)
    return order, closing


def hom_count(F: Hypergraph, H: Hypergraph, *, sample: bool = False,
              samples: int = 10**6, seed: int = 0,
              budget: int = DEFAULT_HOM_BUDGET, threads: int = 1) -> HomCount:
    """Number and density of homomorphisms F -> H.

    Exact enumeration assigns F's vertices in descending-degree order and
    prunes a partial map as soon as a fully mapped edge misses H. With
    ``sample=True`` the density is estimated from ``samples`` uniform maps.
    """
    if F.k != H.k:
        raise ValidationError(f"uniformity mismatch: F is {F.k}-uniform, H is {H.k}-uniform")
    if sample:
        lookup = _edge_lookup(H) if H.n else None
        values = sample_blocks(lambda rng, size: _hom_sample_block(F, H, lookup, rng, size),
                               samples, seed, threads=threads)
        mean, err = mean_stderr(values)
        return HomCount(None, mean, err, samples)

    total_maps = H.n ** F.n
    if total_maps > budget:
        raise BudgetExceeded(
            f"exact hom count needs {total_maps} maps (budget {budget}); use sampling",
            required=total_maps)
    if F.n == 0:
        return HomCount(1, 1.0)
    if H.n == 0:
        return HomCount(0, 0.0)

    order, closing = _hom_plan(F)
    n = H.n
    dense = None
    if n ** H.k <= DENSE_LOOKUP_CELLS:
        dense = _dense_adjacency(H)
    keys = _edge_keys(H)
    image = [0] * F.n
    candidates = np.arange(n)

    def valid_images(pos: int) -> np.ndarray:
        v = order[pos]
        ok = np.ones(n, dtype=bool)
        for e in closing[pos]:
            others = tuple(image[u] for u in e if u != v)
            if dense is not None:
                ok &= dense[others + (slice(None),)]
            else:
                rows = np.empty((n, H.k), dtype=np.int64)
                rows[:, :-1] = others
                rows[:, -1] = candidates
                ok &= _is_edge(rows, keys, n)
        return ok

    def rec(pos: int) -> int:
        ok = valid_images(pos)
        if pos == F.n - 1:
            return int(ok.sum())
        total = 0
        v = order[pos]
        for c in np.flatnonzero(ok):
            image[v] = int(c)
            total += rec(pos + 1)
        return total

    count = rec(0)
    return HomCount(count, count / total_maps)


def _dense_adjacency(H: Hypergraph) -> np.ndarray:
    dense = np.zeros((H.n,) * H.k, dtype=bool)
    if H.edges:
        arr = np.asarray(H.edges, dtype=np.int64)
        for p in itertools.permutations(range(H.k)):
            dense[tuple(arr[:, list(p)].T)] = True
    return dense


def _edge_lookup(H: Hypergraph):
    """Vectorized membership test for rows of vertex images, shape (..., k)."""
    n, k = H.n, H.k
    if n ** k <= DENSE_LOOKUP_CELLS:
        dense = _dense_adjacency(H)
        return lambda rows: dense[tuple(np.moveaxis(rows, -1, 0))]
    keys = _edge_keys(H)
    return lambda rows: _is_edge(rows, keys, n)


def _hom_sample_block(F: Hypergraph, H: Hypergraph, lookup, rng: np.random.Generator,
                      size: int) -> np.ndarray:
    if H.n == 0:
        return np.zeros(size) if F.n else np.ones(size)
    maps = rng.integers(0, H.n, size=(size, F.n))
    ok = np.ones(size, dtype=bool)
    for e in F.edges:
        ok &= lookup(maps[:, list(e)])
    return ok.astype(float)


def hom_density(F: Hypergraph, H: Hypergraph, **kwargs) -> float:
    return hom_count(F, H, **kwargs).density


# ---------------------------------------------------------------------------
# Canonical forms and enumeration
# ---------------------------------------------------------------------------

def canonical_form(F: Hypergraph) -> Hypergraph:
    """Lexicographically smallest relabeled edge list over all permutations."""
    if F.n > CANONICAL_MAX_VERTICES:
        raise BudgetExceeded(
            f"canonical form is brute force; {F.n} vertices exceeds {CANONICAL_MAX_VERTICES}",
            required=math.factorial(F.n))
    best = None
    for sigma in itertools.permutations(range(F.n)):
        cand = tuple(sorted(permute_subset(sigma, e) for e in F.edges))
        if best is None or cand < best:
            best = cand
    return Hypergraph(F.k, F.n, best if best is not None else ())


def is_isomorphic(F1: Hypergraph, F2: Hypergraph) -> bool:
    return (F1.k, F1.n, len(F1)) == (F2.k, F2.n, len(F2)) and \
        canonical_form(F1) == canonical_form(F2)


def enumerate_hypergraphs(k: int, n: int) -> list[Hypergraph]:
    """One canonical representative per isomorphism class on exactly n vertices.

    Sorted by edge count, then by edge list.
    """
    if not (1 <= k <= n):
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n > ENUMERATE_MAX_VERTICES:
        raise BudgetExceeded(f"enumeration limited to n <= {ENUMERATE_MAX_VERTICES}",
                             required=2 ** math.comb(n, k))
    slots = list(itertools.combinations(range(n), k))
    index = {s: i for i, s in enumerate(slots)}
    perms = np.array([[index[permute_subset(sigma, s)] for s in slots]
                      for sigma in itertools.permutations(range(n))], dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(len(slots), dtype=np.int64))
    seen = np.zeros(1 << len(slots), dtype=bool)
    classes = []
    for mask in range(1 << len(slots)):
        if seen[mask]:
            continue
        bits = np.array([(mask >> i) & 1 for i in range(len(slots))], dtype=np.int64)
        # orbit[p] = mask of the image of this edge set under permutation p
        images = np.zeros(len(perms), dtype=np.int64)
        for i in np.flatnonzero(bits):
            images |= weights[perms[:, i]]
        orbit = np.unique(images)
        seen[orbit] = True
        best = min(tuple(slots[i] for i in range(len(slots)) if (int(m) >> i) & 1)
                   for m in orbit)
        classes.append(Hypergraph(k, n, best))
    classes.sort(key=lambda h: (len(h.edges), h.edges))
    return classes


# ---------------------------------------------------------------------------
# .hg text format
# ---------------------------------------------------------------------------

def parse_hg(text: str) -> Hypergraph:
    """Parse the ``.hg`` format: header ``k n`` then one edge per line."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append((lineno, [int(tok) for tok in line.split()]))
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: non-integer token") from exc
    if not rows:
        raise ValidationError("missing 'k n' header")
    lineno, header = rows[0]
    if len(header) != 2:
        raise ValidationError(f"line {lineno}: header must be 'k n'")
    k, n = header
    return make_hypergraph(k, n, [r for _, r in rows[1:]])


def format_hg(H: Hypergraph) -> str:
    lines = [f"{H.k} {H.n}"] + [" ".join(map(str, e)) for e in H.edges]
    return "\n".join(lines) + "\n"


def read_hg(path) -> Hypergraph:
    with open(path, encoding="utf-8") as fh:
        return parse_hg(fh.read())


def write_hg(H: Hypergraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_hg(H))


# ---------------------------------------------------------------------------
# Named small hypergraphs
# ---------------------------------------------------------------------------

def named_hypergraph(name: str) -> Hypergraph:
    """Small named hypergraphs used in experiments and examples."""
    table = {
        "K2": (2, 2, [(0, 1)]),
        "P3": (2, 3, [(0, 1), (1, 2)]),
        "K3": (2, 3, [(0, 1), (0, 2), (1, 2)]),
        "C4": (2, 4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
        "K4": (2, 4, list(itertools.combinations(range(4), 2))),
        "edge3": (3, 3, [(0, 1, 2)]),
        "K4_3": (3, 4, list(itertools.combinations(range(4), 3))),
        "two_edges3": (3, 4, [(0, 1, 2), (0, 1, 3)]),
        "edge4": (4, 4, [(0, 1, 2, 3)]),
    }
    if name not in table:
        raise ValidationError(f"unknown hypergraph name {name!r}; known: {sorted(table)}")
    k, n, edges = table[name]
    return make_hypergraph(k, n, edges)
