"""Symmetric step partitions and step hypergraphons.

A :class:`StepPartition` of level k partitions ``[0,1]^{r[k]}``. Level 1 is a
partition of ``[0,1]`` into stacked pieces. For k >= 2 it sits over a base
partition of level k-1: a point's k faces (coordinates over ``r([k] - {i})``)
are located in the base, giving a cell ``f`` in ``[q']^k``, and the top
coordinate ``x_[k]`` is then located in the stack of pieces over that cell.

Pieces are the geometric atoms; ``labels`` assigns each piece to a part, so a
part may be a non-contiguous union of pieces. A partition built from plain
split vectors has one piece per part (identity labels). Merging parts only
relabels pieces and never moves them, which keeps co-refinements exact.

Cell tables are dense numpy arrays that are symmetric under permutations of
the cell axes. They are always built from sorted cell representatives, so
symmetry holds bit for bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

STOCHASTIC_TOL = 1e-9
SNAP_TOL = 1e-12
# rounding-level drift is left alone so that stored tables round-trip bit for bit
RENORMALIZE_TOL = 1e-12


# ---------------------------------------------------------------------------
# symmetric cell tables
# ---------------------------------------------------------------------------

def sorted_cells(q: int, k: int) -> list[tuple[int, ...]]:
    """Sorted representatives of [q]^k in lexicographic order."""
    return list(itertools.combinations_with_replacement(range(q), k))


def orbit_size(cell: Sequence[int]) -> int:
    """Number of ordered tuples with the same multiset as ``cell``."""
    counts = np.unique(np.asarray(cell), return_counts=True)[1]
    return math.factorial(len(cell)) // math.prod(math.factorial(int(c)) for c in counts)


def symmetrize(table: np.ndarray, k: int) -> np.ndarray:
    """Copy entries at sorted cells to every permutation of the first k axes."""
    if k <= 1:
        return np.array(table, copy=True)
    q = table.shape[0]
    grid = np.sort(np.indices((q,) * k), axis=0)
    return table[tuple(grid)]


def is_symmetric(table: np.ndarray, k: int) -> bool:
    return k <= 1 or np.array_equal(table, symmetrize(table, k))


def table_from_cells(q: int, k: int, cells: Mapping[tuple[int, ...], object],
                     tail: tuple[int, ...] = ()) -> np.ndarray:
    """Dense symmetric table from a mapping of sorted cells to entries."""
    out = np.zeros((q,) * k + tail)
    for cell in sorted_cells(q, k):
        if cell not in cells:
            raise ValidationError(f"cell {list(cell)} missing from table")
        out[cell] = cells[cell]
    return symmetrize(out, k)


def _onehot(index: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((len(index), width))
    out[np.arange(len(index)), index] = 1.0
    return out


def _lift(table: np.ndarray, k: int, index: np.ndarray) -> np.ndarray:
    """Re-index the first k axes of a cell table through ``index``."""
    if k == 0:
        return table
    return table[np.ix_(*([index] * k))]


def _aggregate(table: np.ndarray, k: int, onehot: np.ndarray) -> np.ndarray:
    """Sum a cell table over fibers of a part map, axis by axis."""
    for _ in range(k):
        table = np.tensordot(table, onehot, axes=([0], [0]))
    return table


# ---------------------------------------------------------------------------
# StepPartition
# ---------------------------------------------------------------------------

def _check_stochastic(pieces: np.ndarray, k: int) -> np.ndarray:
    pieces = np.asarray(pieces, dtype=float)
    if pieces.ndim != k + 1 and not (k == 0 and pieces.ndim == 1):
        raise ValidationError("piece table has the wrong number of axes")
    if np.any(pieces < -SNAP_TOL) or not np.all(np.isfinite(pieces)):
        bad = np.argwhere(pieces < -SNAP_TOL)
        cell = bad[0][:-1].tolist() if len(bad) else "?"
        raise ValidationError(f"negative fiber length in cell {cell}")
    pieces = np.clip(pieces, 0.0, None)
    sums = pieces.sum(axis=-1)
    dev = np.abs(sums - 1.0)
    if np.any(dev > STOCHASTIC_TOL):
        cell = np.unravel_index(int(np.argmax(dev)), sums.shape) if sums.ndim else ()
        raise ValidationError(
            f"fiber lengths in cell {list(map(int, cell))} sum to {float(sums.flat[int(np.argmax(dev))])!r}, expected 1")
    if np.any(dev > RENORMALIZE_TOL):
        pieces = pieces / sums[..., None]
    return pieces


@dataclass(frozen=True, eq=False)
class StepPartition:
    """Stacked symmetric partition of ``[0,1]^{r[level]}``.

    ``pieces`` has shape ``(base.parts,)*level + (n_pieces,)`` (just
    ``(n_pieces,)`` at level 1); ``labels[p]`` is the part holding piece p.
    """

    base: "StepPartition | None"
    pieces: np.ndarray
    labels: np.ndarray
    parts: int

    def __post_init__(self):
        k = 0 if self.base is None else self.level
        pieces = _check_stochastic(self.pieces, k)
        if k and pieces.shape[:-1] != (self.base.parts,) * k:
            raise ValidationError(
                f"piece table cells {pieces.shape[:-1]} do not match base with {self.base.parts} parts")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (pieces.shape[-1],):
            raise ValidationError("one label per piece required")
        if self.parts < 1 or (labels.size and (labels.min() < 0 or labels.max() >= self.parts)):
            raise ValidationError("labels must lie in 0..parts-1")
        if not is_symmetric(pieces, k):
            raise ValidationError("piece table is not symmetric under permuting cell axes")
        pieces.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_splits(cls, base: "StepPartition | None", splits) -> "StepPartition":
        """One piece per part, stacked in part order."""
        splits = np.asarray(splits, dtype=float)
        return cls(base, splits, np.arange(splits.shape[-1]), splits.shape[-1])

    @classmethod
    def from_cells(cls, base: "StepPartition", cells: Mapping[tuple[int, ...], Sequence[float]]):
        q = len(next(iter(cells.values())))
        k = base.level + 1
        return cls.from_splits(base, table_from_cells(base.parts, k, cells, (q,)))

    @property
    def level(self) -> int:
        return 1 if self.base is None else self.base.level + 1

    @property
    def n_pieces(self) -> int:
        return self.pieces.shape[-1]

    @cached_property
    def splits(self) -> np.ndarray:
        """Fiber mass of every part in every cell, shape cells + (parts,)."""
        out = self.pieces @ _onehot(self.labels, self.parts)
        out.setflags(write=False)
        return out

    @property
    def lengths(self) -> np.ndarray:
        if self.base is not None:
            raise ValidationError("lengths are defined for level-1 partitions")
        return self.splits

    @cached_property
    def _cum(self) -> np.ndarray:
        return np.cumsum(self.pieces, axis=-1)

    @cached_property
    def _last_positive(self) -> np.ndarray:
        pos = self.pieces > 0
        idx = self.n_pieces - 1 - np.argmax(pos[..., ::-1], axis=-1)
        return np.where(pos.any(axis=-1), idx, self.n_pieces - 1)

    def chain(self) -> list["StepPartition"]:
        """Partitions of levels 1..level, ending with self."""
        out = [self]
        while out[-1].base is not None:
            out.append(out[-1].base)
        return out[::-1]

    def nonempty(self) -> np.ndarray:
        """Parts with positive fiber mass in at least one cell."""
        axes = tuple(range(self.splits.ndim - 1))
        return self.splits.max(axis=axes) > 0 if axes else self.splits > 0

    def relabel(self, labels, parts: int) -> "StepPartition":
        """Same pieces grouped by new part labels (a coarsening or padding)."""
        return StepPartition(self.base, self.pieces, np.asarray(labels), parts)

    def __eq__(self, other):
        if not isinstance(other, StepPartition):
            return NotImplemented
        return partitions_equal(self, other)

    __hash__ = None


def partitions_equal(A: StepPartition, B: StepPartition) -> bool:
    """Structural equality: same bases, pieces and labels."""
    if A is B:
        return True
    if A.parts != B.parts or A.level != B.level:
        return False
    if not (np.array_equal(A.pieces, B.pieces) and np.array_equal(A.labels, B.labels)):
        return False
    return A.base is None or partitions_equal(A.base, B.base)


def uniform_intervals(q: int) -> StepPartition:
    """Level-1 partition of [0,1] into q intervals of length 1/q."""
    if q < 1:
        raise ValidationError("need at least one interval")
    return StepPartition.from_splits(None, np.full(q, 1.0 / q))


def interval_partition(lengths: Sequence[float]) -> StepPartition:
    return StepPartition.from_splits(None, np.asarray(lengths, dtype=float))


def trivial_partition(base: StepPartition | None) -> StepPartition:
    """The one-part partition, over ``base`` (``None`` for level 1)."""
    if base is None:
        return StepPartition.from_splits(None, np.ones(1))
    return StepPartition.from_splits(base, np.ones((base.parts,) * (base.level + 1) + (1,)))


# ---------------------------------------------------------------------------
# StepFunction / StepHypergraphon
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StepFunction:
    """Symmetric real-valued step function over the cells of ``base``.

    Level k has base of level k-1 and ``values`` of shape ``(base.parts,)*k``;
    level 1 has no base and a scalar value.
    """

    base: StepPartition | None
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        k = self.level
        expected = () if self.base is None else (self.base.parts,) * k
        if values.shape != expected:
            raise ValidationError(f"value table shape {values.shape}, expected {expected}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        if not is_symmetric(values, k):
            raise ValidationError("value table is not symmetric")
        self._check_range(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def _check_range(self, values):
        pass

    @property
    def level(self) -> int:
        return 1 if self.base is None else self.base.level + 1

    @classmethod
    def from_cells(cls, base: StepPartition, cells: Mapping[tuple[int, ...], float]):
        return cls(base, table_from_cells(base.parts, base.level + 1, cells))

    @classmethod
    def constant(cls, base: StepPartition | None, c: float, level: int | None = None):
        if base is None:
            return cls(None, np.asarray(float(c)))
        return cls(base, np.full((base.parts,) * (base.level + 1), float(c)))

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return functions_equal(self, other)

    __hash__ = None


class StepHypergraphon(StepFunction):
    """Step function with values in [0, 1]."""

    def _check_range(self, values):
        if np.any(values < 0) or np.any(values > 1):
            raise ValidationError("hypergraphon values must lie in [0, 1]")


def functions_equal(U: StepFunction, W: StepFunction) -> bool:
    if U.level != W.level or not np.array_equal(U.values, W.values):
        return False
    return U.base is None or partitions_equal(U.base, W.base)


def same_base(U: StepFunction, W: StepFunction) -> bool:
    if U.level != W.level:
        return False
    return U.base is None or partitions_equal(U.base, W.base)


def stack_hypergraphons(ws: Sequence[StepHypergraphon]) -> StepPartition:
    """Partition whose j-th part has fiber mass ``ws[j]`` over every cell."""
    if not ws:
        raise ValidationError("need at least one hypergraphon")
    first = ws[0]
    for w in ws[1:]:
        if not same_base(first, w):
            raise ValidationError("hypergraphons to stack must share one base")
    table = np.stack([np.asarray(w.values, dtype=float) for w in ws], axis=-1)
    sums = table.sum(axis=-1)
    dev = np.abs(sums - 1.0)
    if np.any(dev > STOCHASTIC_TOL):
        cell = np.unravel_index(int(np.argmax(dev)), sums.shape) if sums.ndim else ()
        raise ValidationError(
            f"values in cell {list(map(int, cell))} sum to {float(sums[cell])}, expected 1")
    return StepPartition.from_splits(first.base, table)


def part_hypergraphon(P: StepPartition, j: int) -> StepHypergraphon:
    """Fiber mass of part j as a hypergraphon over ``P.base``."""
    if not 0 <= j < P.parts:
        raise ValidationError(f"part index {j} outside 0..{P.parts - 1}")
    return StepHypergraphon(P.base, np.clip(P.splits[..., j], 0.0, 1.0))


def part_hypergraphons(P: StepPartition) -> list[StepHypergraphon]:
    return [part_hypergraphon(P, j) for j in range(P.parts)]


def complement(W: StepHypergraphon) -> StepHypergraphon:
    return StepHypergraphon(W.base, 1.0 - W.values)


# ---------------------------------------------------------------------------
# co-refinement and compaction
# ---------------------------------------------------------------------------

def _overlay(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Intersection lengths of two stackings, shape cells + (pa, pb).

    Breakpoints of ``b`` within SNAP_TOL of a breakpoint of ``a`` are moved
    onto it, so rounding in cumulative sums never creates slivers.
    """
    zeros = np.zeros(a.shape[:-1] + (1,))
    a_bd = np.concatenate([zeros, np.cumsum(a, axis=-1)], axis=-1)
    b_bd = np.concatenate([zeros, np.cumsum(b, axis=-1)], axis=-1)
    dist = np.abs(b_bd[..., :, None] - a_bd[..., None, :])
    nearest = np.argmin(dist, axis=-1)
    snapped = np.take_along_axis(a_bd, nearest, axis=-1)
    b_bd = np.where(np.min(dist, axis=-1) <= SNAP_TOL, snapped, b_bd)
    lo = np.maximum(a_bd[..., :-1, None], b_bd[..., None, :-1])
    hi = np.minimum(a_bd[..., 1:, None], b_bd[..., None, 1:])
    return np.clip(hi - lo, 0.0, None)


def co_refine(A: StepPartition, B: StepPartition):
    """Common refinement of two partitions of the same level.

    Returns ``(C, map_a, map_b)``. Part ``c`` of C is the intersection of
    part ``map_a[c]`` of A with part ``map_b[c]`` of B, indexed
    ``c = map_a[c] * B.parts + map_b[c]``; empty intersections are kept as
    empty parts. Bases are co-refined recursively; identical bases are
    shared as they are.
    """
    if A.level != B.level:
        raise ValidationError(f"cannot co-refine level {A.level} with level {B.level}")
    k = A.level
    if A.base is None:
        base = None
        pa, pb = A.pieces, B.pieces
    elif partitions_equal(A.base, B.base):
        base = A.base
        pa, pb = A.pieces, B.pieces
    else:
        base, ma, mb = co_refine(A.base, B.base)
        base, keep = compact(base)
        pa = _lift(A.pieces, k, ma[keep])
        pb = _lift(B.pieces, k, mb[keep])
    inter = _overlay(pa, pb)
    pieces = inter.reshape(inter.shape[:-2] + (-1,))
    labels = (A.labels[:, None] * B.parts + B.labels[None, :]).reshape(-1)
    used = pieces.reshape(-1, pieces.shape[-1]).max(axis=0) > 0
    C = StepPartition(base, pieces[..., used], labels[used], A.parts * B.parts)
    parts = np.arange(C.parts)
    return C, parts // B.parts, parts % B.parts


def compact(P: StepPartition):
    """Drop empty parts and zero-length pieces; returns ``(P', kept_parts)``."""
    keep = np.flatnonzero(P.nonempty())
    new_index = np.full(P.parts, -1, dtype=np.int64)
    new_index[keep] = np.arange(len(keep))
    flat = P.pieces.reshape(-1, P.n_pieces)
    used = (flat.max(axis=0) > 0) & (new_index[P.labels] >= 0)
    if keep.size == P.parts and used.all():
        return P, keep
    out = StepPartition(P.base, P.pieces[..., used], new_index[P.labels[used]], len(keep))
    return out, keep


def restrict_values(values: np.ndarray, k: int, keep: np.ndarray) -> np.ndarray:
    return _lift(values, k, keep)


def lift_function(U: StepFunction, base: StepPartition, part_map: np.ndarray) -> np.ndarray:
    """Values of U on the cells of a refinement ``base`` of ``U.base``."""
    return _lift(U.values, U.level, part_map)


# ---------------------------------------------------------------------------
# point location and evaluation
# ---------------------------------------------------------------------------

def _row_keys(rows: np.ndarray, radix: int) -> np.ndarray:
    weights = radix ** np.arange(rows.shape[-1], dtype=np.int64)
    return rows.astype(np.int64) @ weights


def face_positions(rows: np.ndarray, smaller: np.ndarray) -> np.ndarray:
    """Position in ``smaller`` of every face of every row.

    ``rows`` is (M, j) of sorted tuples, ``smaller`` is (M', j-1) sorted
    tuples containing every face; result is (M, j), column i locating the
    face that omits column i.
    """
    radix = int(max(rows.max(initial=0), smaller.max(initial=0))) + 1
    skeys = _row_keys(smaller, radix)
    order = np.argsort(skeys, kind="stable")
    out = np.empty(rows.shape, dtype=np.int64)
    for i in range(rows.shape[1]):
        face = np.delete(rows, i, axis=1)
        pos = np.searchsorted(skeys[order], _row_keys(face, radix))
        pos = np.clip(pos, 0, len(order) - 1)
        if not np.array_equal(skeys[order][pos], _row_keys(face, radix)):
            raise ValidationError("set family is not closed under taking faces")
        out[:, i] = order[pos]
    return out


def _locate_level(P: StepPartition, cells: tuple[np.ndarray, ...], x: np.ndarray) -> np.ndarray:
    """Part of P containing top coordinate x over the given cells."""
    if P.base is None:
        piece = np.searchsorted(P._cum, x, side="right")
        piece = np.minimum(piece, P._last_positive)
    else:
        cum = P._cum[cells]
        piece = (cum <= x[..., None]).sum(axis=-1)
        piece = np.minimum(piece, P._last_positive[cells])
    return P.labels[piece]


def locate_sets(P: StepPartition, sets: Mapping[int, np.ndarray],
                coords: Mapping[int, np.ndarray]) -> dict[int, np.ndarray]:
    """Vectorized point location for a down-closed family of vertex sets.

    ``sets[j]`` is an (M_j, j) array of sorted j-sets and ``coords[j]`` the
    matching coordinates, shape (..., M_j). Returns, for j = 1..P.level, the
    part of the level-j partition in P's chain containing each set's point.
    """
    locs: dict[int, np.ndarray] = {}
    for j, Pj in enumerate(P.chain(), start=1):
        x = np.asarray(coords[j], dtype=float)
        if j == 1:
            locs[1] = _locate_level(Pj, (), x)
            continue
        pos = face_positions(sets[j], sets[j - 1])
        cells = tuple(locs[j - 1][..., pos[:, i]] for i in range(j))
        locs[j] = _locate_level(Pj, cells, x)
    return locs


def _family(k: int, proper: bool):
    subsets = [s for s in itertools.chain.from_iterable(
        itertools.combinations(range(k), j) for j in range(1, k + (0 if proper else 1)))]
    sets = {}
    for s in subsets:
        sets.setdefault(len(s), []).append(s)
    return {j: np.asarray(v, dtype=np.int64).reshape(len(v), j) for j, v in sets.items()}


def _point_coords(point: Mapping, sets: Mapping[int, np.ndarray]) -> dict[int, np.ndarray]:
    norm = {tuple(sorted(key)) if not isinstance(key, int) else (key,): v
            for key, v in point.items()}
    coords = {}
    for j, rows in sets.items():
        vals = []
        for row in rows:
            key = tuple(int(v) for v in row)
            if key not in norm:
                raise ValidationError(f"missing coordinate for subset {list(key)}")
            x = float(norm[key])
            if not 0.0 <= x <= 1.0:
                raise ValidationError(f"coordinate for {list(key)} outside [0, 1]")
            vals.append(x)
        coords[j] = np.asarray(vals)
    return coords


def locate(P: StepPartition, point: Mapping) -> int:
    """Part of P containing a point of ``[0,1]^{r[k]}``.

    ``point`` maps subsets of ``range(k)`` (sorted tuples) to coordinates.
    Intervals are half-open; a coordinate at the top of a stack falls in the
    last piece of positive length.
    """
    sets = _family(P.level, proper=False)
    locs = locate_sets(P, sets, _point_coords(point, sets))
    return int(locs[P.level][0])


def evaluate(W: StepFunction, point: Mapping) -> float:
    """Value of W at a point of ``[0,1]^{r_<[k]}``."""
    k = W.level
    if k == 1:
        return float(W.values)
    sets = _family(k, proper=True)
    locs = locate_sets(W.base, sets, _point_coords(point, sets))
    top = np.arange(k - 1, -1, -1)  # face i (omitting i) sits at row k-1-i
    cell = tuple(int(locs[k - 1][r]) for r in top)
    return float(W.values[cell])


def evaluate_sets(W: StepFunction, top: np.ndarray, sets: Mapping[int, np.ndarray],
                  coords: Mapping[int, np.ndarray]) -> np.ndarray:
    """W evaluated on every k-set row of ``top`` (vectorized)."""
    k = W.level
    if k == 1:
        shape = np.asarray(coords.get(1, np.zeros(top.shape[0]))).shape if coords else (top.shape[0],)
        return np.full(shape[:-1] + (top.shape[0],), float(W.values))
    locs = locate_sets(W.base, sets, coords)
    pos = face_positions(top, sets[k - 1])
    cells = tuple(locs[k - 1][..., pos[:, i]] for i in range(k))
    return W.values[cells]


# ---------------------------------------------------------------------------
# volumes, quotients, stepping, norms
# ---------------------------------------------------------------------------

def joint_face_law(P: StepPartition, m: int, out_sets: Sequence[tuple[int, ...]] | None = None):
    """Joint law of the parts containing the level-sized subsets of m points.

    For uniform coordinates over ``r([m], P.level)``, returns the probability
    tensor of the parts of P containing each ``P.level``-subset of ``[m]``,
    with one axis per subset in ``out_sets`` (default: lexicographic order).
    Built level by level: vertex intervals, then fiber splits of each
    higher-level set given the parts of its faces.
    """
    L = P.level
    chain = P.chain()
    axis = {}
    for j in range(1, L + 1):
        for s in itertools.combinations(range(m), j):
            axis[s] = len(axis)
    operands: list = []
    for v in range(m):
        operands += [chain[0].splits, [axis[(v,)]]]
    for j in range(2, L + 1):
        table = chain[j - 1].splits
        for s in itertools.combinations(range(m), j):
            face_axes = [axis[s[:i] + s[i + 1:]] for i in range(j)]
            operands += [table, face_axes + [axis[s]]]
    if out_sets is None:
        out_sets = list(itertools.combinations(range(m), L))
    return np.einsum(*operands, [axis[tuple(s)] for s in out_sets], optimize="greedy")


def volumes(Q: StepPartition) -> np.ndarray:
    """Cell volumes ``v_f`` for f in ``[Q.parts]^k`` with ``k = Q.level + 1``.

    ``v[f]`` is the measure of the points of ``[0,1]^{r_<[k]}`` whose face
    omitting i lies in part ``f[i]`` for every i.
    """
    k = Q.level + 1
    out = [tuple(j for j in range(k) if j != i) for i in range(k)]
    v = joint_face_law(Q, k, out)
    return symmetrize(v, k)


@dataclass(frozen=True, eq=False)
class Quotient:
    """Volume and average tables of a function against a partition."""

    k: int
    q: int
    volume: np.ndarray
    average: np.ndarray

    def cells(self):
        """Sorted cells with orbit size, volume and average."""
        for cell in sorted_cells(self.q, self.k):
            yield cell, orbit_size(cell), float(self.volume[cell]), float(self.average[cell])


def quotient(W: StepFunction, R: StepPartition) -> Quotient:
    """Volumes and averages of W over the cells induced by R.

    Averages on zero-volume cells are 0.
    """
    if W.level != R.level + 1:
        raise ValidationError(f"level-{W.level} function cannot be quotiented by a level-{R.level} partition")
    k = W.level
    C, mw, mr = co_refine(W.base, R)
    C, keep = compact(C)
    mw, mr = mw[keep], mr[keep]
    vol = volumes(C)
    vals = _lift(W.values, k, mw)
    onehot = _onehot(mr, R.parts)
    v = _aggregate(vol, k, onehot)
    v_lift = _lift(v, k, mr)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(v_lift > 0, vol / np.where(v_lift > 0, v_lift, 1.0), 0.0)
    w = _aggregate(weight * vals, k, onehot)
    w = np.where(v > 0, w, 0.0)
    if isinstance(W, StepHypergraphon):
        w = np.clip(w, 0.0, 1.0)
    return Quotient(k, R.parts, symmetrize(v, k), symmetrize(w, k))


def step_avg(W: StepFunction, R: StepPartition) -> StepFunction:
    """The R-stepping of W: its cell averages as an R-step function."""
    quot = quotient(W, R)
    return type(W)(R, quot.average)


def d1(A: Quotient, B: Quotient) -> float:
    """Sum over ordered cells of |v - v'| + |v w - v' w'| (cells matched by index)."""
    if (A.k, A.q) != (B.k, B.q):
        raise ValidationError(f"quotient shapes differ: (k={A.k}, q={A.q}) vs (k={B.k}, q={B.q})")
    return float(np.abs(A.volume - B.volume).sum()
                 + np.abs(A.volume * A.average - B.volume * B.average).sum())


def merge_quotient(quot: Quotient, parent: np.ndarray, parts: int) -> Quotient:
    """Quotient against a coarsening, given the part map of the refinement."""
    onehot = _onehot(np.asarray(parent), parts)
    v = _aggregate(quot.volume, quot.k, onehot)
    mass = _aggregate(quot.volume * quot.average, quot.k, onehot)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(v > 0, mass / np.where(v > 0, v, 1.0), 0.0)
    return Quotient(quot.k, parts, v, w)


class Norms(tuple):
    __slots__ = ()

    def __new__(cls, inner, l1, l2sq):
        return super().__new__(cls, (inner, l1, l2sq))

    inner = property(lambda self: self[0])
    l1 = property(lambda self: self[1])
    l2sq = property(lambda self: self[2])


def common_cells(U: StepFunction, W: StepFunction):
    """Cell volumes and both value tables over a common refinement."""
    if U.level != W.level:
        raise ValidationError(f"level mismatch: {U.level} vs {W.level}")
    k = U.level
    if k == 1:
        return np.ones(()), U.values, W.values
    if partitions_equal(U.base, W.base):
        return volumes(U.base), U.values, W.values
    C, mu, mw = co_refine(U.base, W.base)
    C, keep = compact(C)
    return volumes(C), _lift(U.values, k, mu[keep]), _lift(W.values, k, mw[keep])


def norms(U: StepFunction, W: StepFunction) -> Norms:
    """Inner product <U, W>, ||U - W||_1 and ||U - W||_2^2."""
    vol, u, w = common_cells(U, W)
    diff = u - w
    return Norms(float((vol * u * w).sum()), float((vol * np.abs(diff)).sum()),
                 float((vol * diff * diff).sum()))


def l2sq(W: StepFunction) -> float:
    if W.level == 1:
        return float(W.values) ** 2
    return float((volumes(W.base) * W.values ** 2).sum())


def mean_value(W: StepFunction) -> float:
    """Integral of W (the density of a single edge)."""
    if W.level == 1:
        return float(W.values)
    return float((volumes(W.base) * W.values).sum())


def difference(U: StepFunction, W: StepFunction) -> StepFunction:
    """U - W over a common refinement of their bases."""
    if U.level == 1:
        return StepFunction(None, np.asarray(float(U.values) - float(W.values)))
    if partitions_equal(U.base, W.base):
        return StepFunction(U.base, U.values - W.values)
    C, mu, mw = co_refine(U.base, W.base)
    C, keep = compact(C)
    k = U.level
    return StepFunction(C, _lift(U.values, k, mu[keep]) - _lift(W.values, k, mw[keep]))
