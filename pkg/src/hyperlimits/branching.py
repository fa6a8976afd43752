"""Finite-depth branching partitions, their regularization, and convergence diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cutnorm import EXACT_MAX_TERMS
from .density import density_exact
from .errors import BudgetExceeded, ValidationError
from .hypergraph import Hypergraph
from .regularity import RegularityTranscript, weak_regularize
from .step import (StepHypergraphon, StepPartition, complement, d1, norms,
                   part_hypergraphons, quotient, stack_hypergraphons, step_avg,
                   trivial_partition)

ALPHA_CAP = 10**5


@dataclass(frozen=True, eq=False)
class BranchingPartition:
    """Nested partitions given by one finest partition and a degree vector.

    Part ``j`` of the finest partition has index tuple ``(i_1, ..., i_L)``
    read off ``j`` in mixed radix ``degrees``; level l groups parts by their
    first l indices, so siblings are contiguous blocks.
    """

    finest: StepPartition
    degrees: tuple[int, ...]

    def __post_init__(self):
        degrees = tuple(int(p) for p in self.degrees)
        if any(p < 1 for p in degrees):
            raise ValidationError("degrees must be positive")
        if math.prod(degrees) != self.finest.parts:
            raise ValidationError(
                f"degrees {list(degrees)} give {math.prod(degrees)} parts, finest has {self.finest.parts}")
        object.__setattr__(self, "degrees", degrees)

    @property
    def k(self) -> int:
        return self.finest.level

    @property
    def depth(self) -> int:
        return len(self.degrees)

    def parts_at(self, level: int) -> int:
        return math.prod(self.degrees[:level])

    def level(self, level: int) -> StepPartition:
        """The level-``level`` partition (level 0 is the one-part partition)."""
        if not 0 <= level <= self.depth:
            raise ValidationError(f"level {level} outside 0..{self.depth}")
        if level == self.depth:
            return self.finest
        block = math.prod(self.degrees[level:])
        return self.finest.relabel(self.finest.labels // block, self.parts_at(level))

    def members(self, level: int) -> list[StepHypergraphon]:
        return part_hypergraphons(self.level(level))

    def index_tuple(self, level: int, j: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(j, self.degrees[:level])) if level else ()


def branching(levels: Sequence[StepPartition], parents: Sequence[np.ndarray]) -> BranchingPartition:
    """Encode a nested chain ``levels[0] <= levels[1] <= ...`` (coarse to fine).

    ``parents[s]`` maps parts of ``levels[s]`` to parts of ``levels[s-1]``
    (``parents[0]`` maps to the one-part level and is ignored). The finest
    partition's pieces are kept; each level gets degree equal to its largest
    sibling count, and missing siblings become empty parts.
    """
    depth = len(levels)
    finest = levels[-1]
    codes = [np.zeros(1, dtype=np.int64)]
    degrees = []
    for s in range(depth):
        parent = np.zeros(levels[s].parts, dtype=np.int64) if s == 0 else np.asarray(parents[s])
        prev = codes[-1][parent]
        local = np.zeros(levels[s].parts, dtype=np.int64)
        counts: dict[int, int] = {}
        for j, p in enumerate(parent.tolist()):
            local[j] = counts.get(p, 0)
            counts[p] = local[j] + 1
        deg = max(counts.values()) if counts else 1
        degrees.append(deg)
        codes.append(prev * deg + local)
    return BranchingPartition(finest.relabel(codes[-1][finest.labels], math.prod(degrees)),
                              tuple(degrees))


def from_hypergraphon(W: StepHypergraphon, depth: int = 1) -> BranchingPartition:
    """Level 1 splits into W and its complement; deeper levels are trivial."""
    if depth < 1:
        raise ValidationError("depth must be at least 1")
    if W.level < 1:
        raise ValidationError("hypergraphon level must be at least 1")
    return BranchingPartition(stack_hypergraphons([W, complement(W)]), (2,) + (1,) * (depth - 1))


def pad_to_degrees(seq: Sequence[BranchingPartition],
                   degrees: Sequence[int] | None = None) -> list[BranchingPartition]:
    """Re-encode every element with common (elementwise maximal) degrees."""
    if not seq:
        return []
    depth = seq[0].depth
    if any(P.depth != depth for P in seq):
        raise ValidationError("branching partitions have different depths")
    if degrees is None:
        degrees = tuple(max(P.degrees[l] for P in seq) for l in range(depth))
    out = []
    for P in seq:
        if any(a > b for a, b in zip(P.degrees, degrees)):
            raise ValidationError("target degrees are smaller than the input's")
        idx = np.unravel_index(np.arange(P.finest.parts), P.degrees)
        code = np.ravel_multi_index(idx, tuple(degrees))
        out.append(BranchingPartition(P.finest.relabel(code[P.finest.labels], math.prod(degrees)),
                                      tuple(degrees)))
    return out


def default_eps_seq(depth: int) -> list[float]:
    return [1.0 / s for s in range(1, depth + 1)]


def degree_bound_log2(k: int, degrees: Sequence[int], eps: float, s: int) -> float:
    """log2 of ``2^(k p_1...p_s / eps^2)``, the per-level degree bound."""
    return k * math.prod(degrees[:s]) / eps ** 2


@dataclass
class BranchRegularization:
    Q: BranchingPartition
    levels: list[StepPartition]
    parents: list[np.ndarray]
    transcripts: list[RegularityTranscript]
    bounds_log2: list[float]
    within_bounds: list[bool]

    def as_dict(self) -> dict:
        return {"degrees": list(self.Q.degrees),
                "level_parts": [L.parts for L in self.levels],
                "degree_bounds_log2": self.bounds_log2,
                "within_bounds": self.within_bounds,
                "transcripts": [t.as_dict() for t in self.transcripts]}


def regularize_branching(P: BranchingPartition, eps_seq: Sequence[float] | None = None,
                         depth: int | None = None, *, restarts: int = 8, seed: int = 0,
                         max_terms: int = EXACT_MAX_TERMS) -> BranchRegularization:
    """Nested weak regularity partitions for the levels of P.

    Level s is obtained by weakly regularizing every part of P at levels
    1..s, starting from level s-1 of the result, with tolerance ``eps_seq[s-1]``.
    """
    if P.k < 2:
        raise ValidationError("branching regularization needs level >= 2")
    depth = P.depth if depth is None else depth
    if not 1 <= depth <= P.depth:
        raise ValidationError(f"depth must lie in 1..{P.depth}")
    eps_seq = default_eps_seq(depth) if eps_seq is None else list(eps_seq)
    if len(eps_seq) < depth or any(e <= 0 for e in eps_seq):
        raise ValidationError("need a positive eps for every level")
    base = P.finest.base
    current = trivial_partition(base.base)
    levels, parents, transcripts = [], [], []
    bounds, within = [], []
    for s in range(1, depth + 1):
        members = [w for l in range(1, s + 1) for w in P.members(l)]
        Qs, tr = weak_regularize(members, current, eps_seq[s - 1], restarts=restarts,
                                 seed=seed, max_terms=max_terms)
        counts = np.bincount(tr.parent, minlength=current.parts)
        bound = degree_bound_log2(P.k, P.degrees, eps_seq[s - 1], s)
        bounds.append(bound)
        within.append(math.log2(max(int(counts.max()), 1)) <= bound)
        levels.append(Qs)
        parents.append(tr.parent)
        transcripts.append(tr)
        current = Qs
    return BranchRegularization(branching(levels, parents), levels, parents, transcripts,
                                bounds, within)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    """Named trajectories over a sequence, with gap statistics."""

    trajectories: dict[str, list] = field(default_factory=dict)
    last_gap: dict[str, float | None] = field(default_factory=dict)
    max_gap_after_burn_in: dict[str, float | None] = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    burn_in: int = 0

    def add(self, key: str, values: list):
        self.trajectories[key] = values
        nums = [v for v in values if v is not None]
        gaps = [abs(b - a) for a, b in zip(nums, nums[1:])]
        self.last_gap[key] = gaps[-1] if gaps else 0.0
        tail = gaps[self.burn_in:] if self.burn_in < len(gaps) else gaps[-1:]
        self.max_gap_after_burn_in[key] = max(tail) if tail else 0.0

    def as_dict(self) -> dict:
        return {"burn_in": self.burn_in,
                "trajectories": self.trajectories, "last_gap": self.last_gap,
                "max_gap_after_burn_in": self.max_gap_after_burn_in,
                "sections": {k: (v.as_dict() if isinstance(v, ConvergenceReport) else v)
                             for k, v in self.sections.items()}}


def _check_sequence(seq: Sequence[BranchingPartition], depth: int):
    if not seq:
        raise ValidationError("sequence is empty")
    first = seq[0]
    for P in seq[1:]:
        if P.k != first.k or P.degrees != first.degrees:
            raise ValidationError(
                f"degree mismatch: {list(first.degrees)} vs {list(P.degrees)} (pad first)")
    if not 1 <= depth <= first.depth:
        raise ValidationError(f"depth must lie in 1..{first.depth}")


def left_convergence_trajectory(seq: Sequence[BranchingPartition], F_list: Sequence[Hypergraph],
                                depth: int, *, alphas: Sequence[Sequence[int]] | None = None,
                                names: Sequence[str] | None = None,
                                burn_in: int | None = None,
                                cap: int = ALPHA_CAP) -> ConvergenceReport:
    """Colored densities ``t_alpha(F, level-l parts)`` along the sequence.

    Every coloring of F's edges by level-l parts is used unless ``alphas``
    lists them; the total number of colorings is capped.
    """
    _check_sequence(seq, depth)
    names = list(names) if names is not None else [f"F{i}" for i in range(len(F_list))]
    report = ConvergenceReport(burn_in=len(seq) // 2 if burn_in is None else burn_in)
    plan = []
    for fi, F in enumerate(F_list):
        if F.k != seq[0].k:
            raise ValidationError(f"{names[fi]} is {F.k}-uniform, expected {seq[0].k}")
        for l in range(1, depth + 1):
            q = seq[0].parts_at(l)
            if alphas is not None:
                chosen = [tuple(a) for a in alphas if len(a) == len(F) and max(a, default=0) < q]
            else:
                chosen = list(itertools.product(range(q), repeat=len(F)))
            plan.append((fi, F, l, chosen))
    total = sum(len(c) for *_, c in plan)
    if total > cap:
        raise BudgetExceeded(f"{total} colorings exceed the cap {cap}; list alphas explicitly",
                             required=total)
    for fi, F, l, chosen in plan:
        members = [P.members(l) for P in seq]
        for a in chosen:
            key = f"{names[fi]}|l={l}|alpha={','.join(map(str, a))}"
            report.add(key, [density_exact(F, m, a) for m in members])
    return report


def partitionable_diagnostics(seq: Sequence[BranchingPartition], depth: int,
                              eps_seq: Sequence[float] | None = None, *,
                              recursion: int = 1, restarts: int = 8, seed: int = 0,
                              burn_in: int | None = None,
                              max_terms: int = EXACT_MAX_TERMS) -> ConvergenceReport:
    """Finite-depth probes of the partitionable-convergence conditions.

    Sections: ``a`` per-level deviations against eps; ``c`` d1 between
    consecutive elements' quotients by their own level-s partitions
    (trajectory keys ``d1|s|l|i``, first entry None); ``d`` per element, the
    L1 error of stepping each part by level s, s = 1..depth; ``b`` the same
    report for the regularizing sequence, ``recursion`` levels down.
    """
    _check_sequence(seq, depth)
    eps_seq = default_eps_seq(depth) if eps_seq is None else list(eps_seq)
    report = ConvergenceReport(burn_in=len(seq) // 2 if burn_in is None else burn_in)
    regs = [regularize_branching(P, eps_seq, depth, restarts=restarts, seed=seed,
                                 max_terms=max_terms) for P in seq]
    qs = pad_to_degrees([r.Q for r in regs])
    report.sections["a"] = [
        [{"level": s + 1, "eps": eps_seq[s], "reason": tr.reason,
          "max_deviation": max(tr.final_deviations), "exact": all(tr.final_exact),
          "parts": tr.partition.parts, "within_degree_bound": r.within_bounds[s]}
         for s, tr in enumerate(r.transcripts)]
        for r in regs]

    members = [[(l, i, w) for l in range(1, depth + 1) for i, w in enumerate(P.members(l))]
               for P in seq]
    for s in range(1, depth + 1):
        levels = [Q.level(s) for Q in qs]
        quots = [[quotient(w, L) for (_, _, w) in mem] for mem, L in zip(members, levels)]
        for idx, (l, i, _) in enumerate(members[0]):
            traj = [None] + [d1(quots[n][idx], quots[n + 1][idx]) for n in range(len(seq) - 1)]
            report.add(f"d1|s={s}|l={l}|i={i}", traj)

    report.sections["d"] = [
        {f"l={l}|i={i}": [norms(step_avg(w, Q.level(s)), w).l1 for s in range(1, depth + 1)]
         for (l, i, w) in mem}
        for mem, Q in zip(members, qs)]

    if recursion > 0 and qs[0].k >= 2:
        report.sections["b"] = partitionable_diagnostics(
            qs, depth, eps_seq, recursion=recursion - 1, restarts=restarts, seed=seed,
            burn_in=burn_in, max_terms=max_terms)
    return report
