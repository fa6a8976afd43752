"""Weak regularity by energy increment, and counting-lemma checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cutnorm import EXACT_MAX_TERMS, CutWitness, restricted_cutnorm
from .density import check_tuple, density_exact
from .errors import BudgetExceeded, HardAssertionFailure, ValidationError
from .hypergraph import Hypergraph, shadow
from .step import (StepFunction, StepPartition, _lift, co_refine, compact, d1, difference,
                   l2sq, norms, part_hypergraphons, quotient, step_avg)

SLACK = 1e-12
PAD_MAX_PARTS = 10**6
BETA_MAX_TERMS = 10**5


@dataclass(frozen=True)
class IterationRecord:
    member: int
    witness: CutWitness
    deviation: float
    exact: bool
    energy_before: float
    energy_after: float
    parts: int
    partition: StepPartition | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {"member": self.member, "deviation": self.deviation, "exact": self.exact,
                "energy_before": self.energy_before, "energy_after": self.energy_after,
                "parts": self.parts, "witness": self.witness.as_dict()}


@dataclass
class RegularityTranscript:
    eps: float
    members: int
    records: list[IterationRecord] = field(default_factory=list)
    reason: str = ""
    final_deviations: list[float] = field(default_factory=list)
    final_exact: list[bool] = field(default_factory=list)
    parent: np.ndarray | None = None
    partition: StepPartition | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def bound(self) -> int:
        return math.ceil(self.members / self.eps ** 2)

    def as_dict(self) -> dict:
        return {"eps": self.eps, "members": self.members, "iteration_bound": self.bound,
                "iterations": self.iterations, "reason": self.reason,
                "final_parts": None if self.partition is None else self.partition.parts,
                "final_deviations": self.final_deviations,
                "final_exact": self.final_exact,
                "norm": "restricted cut norm",
                "records": [r.as_dict() for r in self.records]}


def energy(ws: Sequence[StepFunction], R: StepPartition) -> float:
    """Sum over members of the squared L2 norm of their R-stepping."""
    return float(sum(l2sq(step_avg(w, R)) for w in ws))


def stepping_residual(W: StepFunction, R: StepPartition) -> StepFunction:
    """``W - W_R`` over the common refinement of W's base and R."""
    C, mw, mr = co_refine(W.base, R)
    C, keep = compact(C)
    k = W.level
    avg = quotient(W, R).average
    return StepFunction(C, _lift(W.values, k, mw[keep]) - _lift(avg, k, mr[keep]))


def deviation(W: StepFunction, R: StepPartition, *, restarts: int = 8, seed: int = 0,
              max_terms: int = EXACT_MAX_TERMS) -> tuple[CutWitness, bool, StepFunction]:
    """Restricted cut norm of ``W - W_R``, with witness and exactness flag."""
    D = stepping_residual(W, R)
    witness, exact = restricted_cutnorm(D, D.base, restarts=restarts, seed=seed,
                                        max_terms=max_terms)
    return witness, exact, D


def _refine(T: StepPartition, t_to_r: np.ndarray, witness: CutWitness):
    """Split R's parts by the witness test sets, keeping T's geometry."""
    sig = np.column_stack([t_to_r] + [c.astype(np.int64) for c in witness.c])
    uniq, part_of_t = np.unique(sig, axis=0, return_inverse=True)
    part_of_t = part_of_t.reshape(-1)
    refined = StepPartition(T.base, T.pieces, part_of_t[T.labels], len(uniq))
    return refined, uniq[:, 0]


def weak_regularize(ws: Sequence[StepFunction], Q0: StepPartition, eps: float, *,
                    restarts: int = 8, seed: int = 0, max_terms: int = EXACT_MAX_TERMS,
                    max_parts: int | None = None, pad: bool = False):
    """Refine Q0 until every member is weakly eps-regular for the restricted norm.

    Each round finds the member with the largest restricted deviation
    ``||W_i - (W_i)_R||``; if it exceeds eps, R is refined by the witness's
    test sets, which raises the energy by more than eps^2. Returns
    ``(Q, transcript)``; ``transcript.parent`` maps Q's parts to Q0's.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    k = check_tuple(ws)
    if Q0.level != k - 1:
        raise ValidationError(f"level-{k} tuple needs a level-{k - 1} starting partition")
    m = len(ws)
    transcript = RegularityTranscript(eps=eps, members=m)
    R, parent = Q0, np.arange(Q0.parts)
    bound = transcript.bound
    current = energy(ws, R)
    while True:
        found = []
        for i, w in enumerate(ws):
            witness, exact, _ = deviation(w, R, restarts=restarts, seed=seed + i,
                                          max_terms=max_terms)
            found.append((witness, exact))
        devs = [wit.value for wit, _ in found]
        i = int(np.argmax(devs))
        if devs[i] <= eps:
            all_exact = all(ex for _, ex in found)
            transcript.reason = "regular" if all_exact else "regular (restricted, heuristic)"
            transcript.final_deviations = devs
            transcript.final_exact = [ex for _, ex in found]
            break
        if transcript.iterations >= bound:
            raise HardAssertionFailure(
                f"refinement count exceeds the bound {bound} for m={m}, eps={eps}")
        witness, exact = found[i]
        C, _, mr = co_refine(ws[i].base, R)
        C, keep = compact(C)
        refined, to_r = _refine(C, mr[keep], witness)
        if max_parts is not None and refined.parts > max_parts:
            transcript.reason = "budget"
            transcript.final_deviations = devs
            transcript.final_exact = [ex for _, ex in found]
            break
        after = energy(ws, refined)
        transcript.records.append(IterationRecord(i, witness, devs[i], exact, current, after,
                                                  refined.parts, refined))
        R, parent, current = refined, parent[to_r], after
    if pad:
        R, parent = pad_partition(R, parent, Q0.parts, padded_size(k, m, eps))
    transcript.parent = parent
    transcript.partition = R
    return R, transcript


def padded_size(k: int, m: int, eps: float) -> int:
    """Parts per original part in the padded statement: ceil(2^(k m / eps^2))."""
    exponent = k * m / eps ** 2
    if exponent > math.log2(PAD_MAX_PARTS):
        raise BudgetExceeded(f"padding needs 2^{exponent:.4g} parts per original part",
                             required=math.inf)
    return math.ceil(2 ** exponent)


def pad_partition(R: StepPartition, parent: np.ndarray, q0: int, per_part: int):
    """Reindex R so each original part owns exactly ``per_part`` slots."""
    slots = np.empty(R.parts, dtype=np.int64)
    counts = np.zeros(q0, dtype=np.int64)
    for j in range(R.parts):
        p = int(parent[j])
        if counts[p] >= per_part:
            raise HardAssertionFailure("refinement exceeds the padded part count")
        slots[j] = p * per_part + counts[p]
        counts[p] += 1
    padded = R.relabel(slots[R.labels], q0 * per_part)
    return padded, np.repeat(np.arange(q0), per_part)


# ---------------------------------------------------------------------------
# counting lemmas
# ---------------------------------------------------------------------------

@dataclass
class CountingReport:
    lhs: float
    rhs: float
    holds: bool
    status: str
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "status": self.status,
                **self.details}


def check_counting_I(F: Hypergraph, alpha, U: Sequence[StepFunction],
                     W: Sequence[StepFunction], eps: float | None = None, *,
                     restarts: int = 8, seed: int = 0,
                     max_terms: int = EXACT_MAX_TERMS) -> CountingReport:
    """Check ``|t(F,U) - t(F,W)| <= |F| max_i ||U_i - W_i||`` (restricted norm).

    A restricted norm never exceeds the true one, so a bound that holds with
    it is verified. A failure is a violation only when the norm is known to
    be exact (k = 2, exhaustive search); otherwise it is inconclusive. The
    L1 form of the bound is checked as well.
    """
    if len(U) != len(W):
        raise ValidationError(f"tuples have {len(U)} and {len(W)} members")
    k = check_tuple(U)
    if check_tuple(W) != k:
        raise ValidationError("tuples have different levels")
    gap = abs(density_exact(F, U, alpha) - density_exact(F, W, alpha))
    cut, l1, exact = [], [], []
    for u, w in zip(U, W):
        D = difference(u, w)
        if k == 1:
            cut.append(abs(float(D.values)))
            exact.append(True)
        else:
            wit, ex = restricted_cutnorm(D, D.base, restarts=restarts, seed=seed,
                                         max_terms=max_terms)
            cut.append(wit.value)
            exact.append(ex)
        l1.append(norms(u, w).l1)
    rhs = len(F) * max(cut)
    holds = gap <= rhs + SLACK
    l1_holds = gap <= len(F) * max(l1) + SLACK
    if holds:
        status = "verified"
    elif k <= 2 and all(exact):
        status = "violated"
    else:
        status = "inconclusive (restricted norm)"
    details = {"cut_norms": cut, "exact": exact, "l1_norms": l1,
               "l1_bound": len(F) * max(l1), "l1_holds": l1_holds,
               "norm": "restricted cut norm"}
    if eps is not None:
        details["within_eps"] = max(cut) <= eps
        details["eps_bound"] = len(F) * eps
    return CountingReport(gap, rhs, holds, status, details)


def beta_maps(F: Hypergraph, q: int) -> itertools.product:
    return itertools.product(range(q), repeat=len(F))


def check_counting_II(F: Hypergraph, alpha, U: Sequence[StepFunction],
                      W: Sequence[StepFunction], Q: StepPartition, R: StepPartition,
                      delta: float, *, max_terms: int = BETA_MAX_TERMS) -> CountingReport:
    """Check ``|t(F,U_Q) - t(F,W_R)| <= |F| delta + sum_beta |t_beta(dF,Q) - t_beta(dF,R)|``.

    Requires ``d1(U_i/Q, W_i/R) <= delta`` for every i and raises
    ValidationError naming the first member that breaks it.
    """
    if Q.parts != R.parts:
        raise ValidationError(f"partitions have {Q.parts} and {R.parts} parts")
    if len(U) != len(W):
        raise ValidationError(f"tuples have {len(U)} and {len(W)} members")
    k = check_tuple(U)
    if check_tuple(W) != k or Q.level != k - 1 or R.level != k - 1:
        raise ValidationError("levels of tuples and partitions do not match")
    dists = []
    for i, (u, w) in enumerate(zip(U, W)):
        dist = d1(quotient(u, Q), quotient(w, R))
        if dist > delta + SLACK:
            raise ValidationError(f"precondition fails for member {i}: d1 = {dist!r} > delta = {delta!r}")
        dists.append(dist)
    UQ = [step_avg(u, Q) for u in U]
    WR = [step_avg(w, R) for w in W]
    lhs = abs(density_exact(F, UQ, alpha) - density_exact(F, WR, alpha))
    dF = shadow(F)
    terms = Q.parts ** len(dF)
    if terms > max_terms:
        raise BudgetExceeded(f"beta sum has {terms} terms, cap is {max_terms}", required=terms)
    qparts, rparts = part_hypergraphons(Q), part_hypergraphons(R)
    beta_sum = 0.0
    for beta in beta_maps(dF, Q.parts):
        beta_sum += abs(density_exact(dF, qparts, beta) - density_exact(dF, rparts, beta))
    rhs = len(F) * delta + beta_sum
    holds = lhs <= rhs + SLACK
    details = {"d1": dists, "beta_sum": beta_sum, "delta": delta, "beta_terms": terms}
    return CountingReport(lhs, rhs, holds, "verified" if holds else "violated", details)
