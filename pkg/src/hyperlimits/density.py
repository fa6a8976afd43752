"""Homomorphism densities of colored hypergraphs in tuples of step hypergraphons."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .hypergraph import Hypergraph, enumerate_hypergraphs
from .mc import mean_stderr, sample_blocks
from .step import StepFunction, face_positions, locate_sets, partitions_equal

DEFAULT_TERM_BUDGET = 10**8
DENSE_FIRST = 10**6


@dataclass(frozen=True)
class DensityEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int


def check_tuple(ws: Sequence[StepFunction]) -> int:
    """Validate a hypergraphon tuple (common level, one base); returns the level."""
    if len(ws) == 0:
        raise ValidationError("hypergraphon tuple is empty")
    k = ws[0].level
    for w in ws[1:]:
        if w.level != k:
            raise ValidationError(f"tuple mixes levels {k} and {w.level}")
        if k > 1 and not partitions_equal(ws[0].base, w.base):
            raise ValidationError("tuple members do not share one base")
    return k


def _check_alpha(F: Hypergraph, alpha, m: int) -> list[int]:
    if alpha is None:
        return [0] * len(F)
    alpha = [int(a) for a in alpha]
    if len(alpha) != len(F):
        raise ValidationError(f"color map has {len(alpha)} entries for {len(F)} edges")
    if any(a < 0 or a >= m for a in alpha):
        raise ValidationError(f"colors must lie in 0..{m - 1}")
    return alpha


def density_network(F: Hypergraph, ws: Sequence[StepFunction], alpha=None):
    """Operands of the contraction whose value is ``t_alpha(F, ws)``.

    One summation index per vertex set of size < k inside an edge of F
    (the part containing its coordinate); factors are the fiber splits of
    each such set given its faces, and one value table per edge.
    """
    k = check_tuple(ws)
    if F.k != k:
        raise ValidationError(f"F is {F.k}-uniform but the hypergraphons have level {k}")
    alpha = _check_alpha(F, alpha, len(ws))
    if k == 1:
        return None, float(np.prod([float(ws[a].values) for a in alpha]))
    chain = ws[0].base.chain()
    closure: dict[tuple[int, ...], int] = {}
    for j in range(1, k):
        for e in F.edges:
            for s in itertools.combinations(e, j):
                closure.setdefault(s, len(closure))
    operands: list = []
    for s, idx in closure.items():
        table = chain[len(s) - 1].splits
        if len(s) == 1:
            operands += [table, [idx]]
        else:
            operands += [table, [closure[s[:i] + s[i + 1:]] for i in range(len(s))] + [idx]]
    for e, a in zip(F.edges, alpha):
        operands += [ws[a].values, [closure[e[:i] + e[i + 1:]] for i in range(k)]]
    return operands, None


def density_exact(F: Hypergraph, ws: Sequence[StepFunction], alpha=None, *,
                  budget: int = DEFAULT_TERM_BUDGET) -> float:
    """Exact ``t_alpha(F, ws)`` for a tuple of step hypergraphons.

    This is the sum over part assignments ``beta`` of the shadow, level by
    level down to the interval partition. ``alpha[i]`` is the tuple index
    used for ``F.edges[i]`` (default: all 0). Edgeless F has density 1.

    Small dense instances are contracted with ``np.einsum``; otherwise only
    assignments with nonzero weight are expanded, and a variable is summed
    out as soon as nothing left depends on it. ``budget`` caps the number
    of terms either way.
    """
    operands, scalar = density_network(F, ws, alpha)
    if scalar is not None:
        return scalar
    if len(F) == 0:
        return 1.0
    path, info = np.einsum_path(*operands, [], optimize="greedy")
    dense_cost = int(_path_cost(info))
    if dense_cost <= min(DENSE_FIRST, budget):
        value = float(np.einsum(*operands, [], optimize=path))
    else:
        try:
            value = _sparse_density(F, ws, _check_alpha(F, alpha, len(ws)), budget)
        except BudgetExceeded:
            if dense_cost > budget:
                raise BudgetExceeded(
                    f"exact density needs about {dense_cost} terms, budget is {budget}",
                    required=dense_cost) from None
            value = float(np.einsum(*operands, [], optimize=path))
    return min(max(value, 0.0), 1.0) if all(_in_unit(w) for w in ws) else value


def _sparse_density(F: Hypergraph, ws, alpha, budget: int) -> float:
    k = F.k
    chain = ws[0].base.chain()
    faces_of = lambda s: [s[:i] + s[i + 1:] for i in range(len(s))]
    consumers: dict[tuple, int] = {}
    for e in F.edges:
        for j in range(1, k):
            for s in itertools.combinations(e, j):
                consumers.setdefault(s, 0)
    for s in list(consumers):
        if len(s) > 1:
            for f in faces_of(s):
                consumers[f] += 1
    for e in F.edges:
        for f in faces_of(e):
            consumers[f] += 1

    cols: list[tuple] = []
    rows = np.zeros((1, 0), dtype=np.int64)
    weight = np.ones(1)
    work = 0
    pending = dict(consumers)

    def col(s):
        return rows[:, cols.index(s)]

    def retire(s):
        nonlocal rows, weight
        pending[s] -= 1
        if pending[s]:
            return
        c = cols.index(s)
        cols.pop(c)
        rows = np.delete(rows, c, axis=1)
        if rows.shape[1] == 0:
            weight = np.array([weight.sum()])
            rows = np.zeros((1, 0), dtype=np.int64)
            return
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        weight = np.bincount(inv.reshape(-1), weights=weight, minlength=len(uniq))
        rows = uniq

    placed = set()
    for e, a in zip(F.edges, alpha):
        for j in range(1, k):
            for s in itertools.combinations(e, j):
                if s in placed:
                    continue
                placed.add(s)
                table = chain[j - 1].splits
                if j == 1:
                    mat = np.broadcast_to(table, (len(rows), table.shape[0]))
                else:
                    mat = table[tuple(col(f) for f in faces_of(s))]
                r, v = np.nonzero(mat)
                if len(r) == 0:
                    return 0.0
                weight = weight[r] * mat[r, v]
                rows = np.column_stack([rows[r], v])
                cols.append(s)
                work += len(rows)
                if work > budget:
                    raise BudgetExceeded("sparse expansion exceeded the term budget", required=work)
                if j > 1:
                    for f in faces_of(s):
                        retire(f)
        val = ws[a].values[tuple(col(f) for f in faces_of(e))]
        keep = val != 0
        rows, weight = rows[keep], weight[keep] * val[keep]
        if len(rows) == 0:
            return 0.0
        for f in faces_of(e):
            retire(f)
    return float(weight.sum())


def _in_unit(w: StepFunction) -> bool:
    return bool(np.all(w.values >= 0) and np.all(w.values <= 1))


def _path_cost(info: str) -> float:
    for line in info.splitlines():
        if "Optimized FLOP count" in line:
            return float(line.split(":")[1])
    return 0.0


def _mc_plan(F: Hypergraph, k: int):
    sets = {j: np.asarray(list(itertools.combinations(range(F.n), j)), dtype=np.int64).reshape(-1, j)
            for j in range(1, k)}
    top = np.asarray(F.edges, dtype=np.int64).reshape(-1, k)
    pos = face_positions(top, sets[k - 1]) if k > 1 and len(F) else None
    return sets, top, pos


def density_mc(F: Hypergraph, ws: Sequence[StepFunction], alpha=None, *,
               samples: int = 10**5, seed: int = 0, threads: int = 1) -> DensityEstimate:
    """Monte Carlo estimate of ``t_alpha(F, ws)`` from uniform coordinate tables.

    Coordinates for every vertex set of size < k are drawn per sample, set
    sizes ascending and lexicographic within a size, in blocks of
    :data:`hyperlimits.mc.BLOCK` with one generator stream per block.
    """
    k = check_tuple(ws)
    if F.k != k:
        raise ValidationError(f"F is {F.k}-uniform but the hypergraphons have level {k}")
    alpha = _check_alpha(F, alpha, len(ws))
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    if k == 1 or len(F) == 0:
        value = density_exact(F, ws, alpha) if k == 1 else 1.0
        return DensityEstimate(value, 0.0, samples, seed)
    sets, top, pos = _mc_plan(F, k)
    base = ws[0].base
    tables = np.stack([ws[a].values for a in alpha])
    edge_index = np.arange(len(F))

    def draw(rng, size):
        coords = {j: rng.random((size, len(sets[j]))) for j in range(1, k)}
        locs = locate_sets(base, sets, coords)[k - 1]
        cells = tuple(locs[:, pos[:, i]] for i in range(k))
        vals = tables[(edge_index[None, :],) + cells]
        return vals.prod(axis=1)

    values = sample_blocks(draw, samples, seed, threads)
    mean, err = mean_stderr(values)
    return DensityEstimate(mean, err, samples, seed)


def default_family(k: int) -> list[Hypergraph]:
    """Isomorphism classes on k, k+1 and k+2 vertices, in canonical order."""
    out: list[Hypergraph] = []
    for n in range(k, k + 3):
        out.extend(enumerate_hypergraphs(k, n))
    return out


def delta_metric(W: StepFunction, W2: StepFunction, family: Sequence[Hypergraph] | None = None,
                 *, budget: int = DEFAULT_TERM_BUDGET) -> float:
    """Truncated density metric: sum of ``2^-i |t(F_i, W) - t(F_i, W2)|``, i from 1."""
    if W.level != W2.level:
        raise ValidationError(f"level mismatch: {W.level} vs {W2.level}")
    if family is None:
        family = default_family(W.level)
    if len(family) == 0:
        raise ValidationError("family must be nonempty")
    total = 0.0
    for i, F in enumerate(family, start=1):
        if F.k != W.level:
            raise ValidationError(f"family member {i} is {F.k}-uniform, expected {W.level}")
        gap = abs(density_exact(F, [W], budget=budget) - density_exact(F, [W2], budget=budget))
        total += 2.0 ** -i * gap
    return total
