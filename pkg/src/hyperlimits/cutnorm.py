"""Restricted (k-1)-cut norm of step functions.

Test sets are unions of parts of a reference partition T of level k-1, so a
test tuple is k 0/1 vectors over T's parts and the objective is the
multilinear form ``sum_f M[f] c_1[f_1] ... c_k[f_k]`` with ``M`` the cell
masses of the integrand against T. For k = 2 and T the integrand's own base
this is the cut norm; for k >= 3 it is a lower bound on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .step import StepFunction, StepPartition, partitions_equal, quotient, volumes

EXACT_MAX_TERMS = 1 << 22


@dataclass(frozen=True, eq=False)
class CutWitness:
    """Selection vectors ``c[i]`` over the parts of T, a sign and ``|objective|``."""

    c: tuple[np.ndarray, ...]
    sign: int
    value: float

    def as_dict(self) -> dict:
        return {"c": [v.astype(int).tolist() for v in self.c], "sign": self.sign,
                "value": self.value}


def cut_masses(D: StepFunction, T: StepPartition | None = None) -> np.ndarray:
    """Integral of D over every cell of T, shape ``(T.parts,)*k``."""
    if D.level < 2:
        raise ValidationError("cut norm needs level >= 2")
    if T is None or partitions_equal(T, D.base):
        return volumes(D.base) * D.values
    if T.level != D.level - 1:
        raise ValidationError(f"reference partition has level {T.level}, expected {D.level - 1}")
    quot = quotient(D, T)
    return quot.volume * quot.average


def _contract(M: np.ndarray, c) -> np.ndarray:
    """Contract every axis but the last with the given selection vectors."""
    for v in c:
        M = np.tensordot(v, M, axes=([0], [0]))
    return M


def cut_objective(D: StepFunction, witness: CutWitness, T: StepPartition | None = None) -> float:
    """Signed integral of D against the witness's test sets."""
    M = cut_masses(D, T)
    if len(witness.c) != M.ndim or any(len(v) != M.shape[0] for v in witness.c):
        raise ValidationError("witness shape does not match the reference partition")
    return float(_contract(M, witness.c))


def _expand(c: np.ndarray, keep: np.ndarray, q: int) -> np.ndarray:
    out = np.zeros(q, dtype=np.int8)
    out[keep] = c
    return out


def _compacted(D: StepFunction, T: StepPartition | None):
    M = cut_masses(D, T)
    q = M.shape[0]
    axes = tuple(range(1, M.ndim))
    keep = np.flatnonzero(np.abs(M).max(axis=axes) > 0) if M.size else np.arange(0)
    return M[np.ix_(*([keep] * M.ndim))], keep, q


def exact_terms(k: int, q: int) -> int:
    return 2 ** (q * (k - 1))


def cutnorm_exact(D: StepFunction, T: StepPartition | None = None, *,
                  max_terms: int = EXACT_MAX_TERMS) -> CutWitness:
    """Maximizing witness over all test tuples measurable for T.

    All 0/1 choices of ``c_1..c_{k-1}`` are enumerated; the last vector is
    then optimal coordinatewise. Parts carrying no mass are left out of the
    enumeration (and unselected in the witness).
    """
    M, keep, q = _compacted(D, T)
    k = M.ndim
    r = len(keep)
    terms = exact_terms(k, r)
    if terms > max_terms:
        raise BudgetExceeded(
            f"exact cut norm needs {terms} selections over {r} parts; use the heuristic",
            required=terms)
    if r == 0:
        zero = np.zeros(q, dtype=np.int8)
        return CutWitness(tuple(zero.copy() for _ in range(k)), 1, 0.0)
    cube = ((np.arange(2 ** r)[:, None] >> np.arange(r)) & 1).astype(float)
    best = [-1.0, None, 1]

    def search(Mr: np.ndarray, prefix: list):
        if Mr.ndim == 2:
            G = cube @ Mr
            for sign in (1, -1):
                gains = np.clip(sign * G, 0.0, None).sum(axis=1)
                i = int(np.argmax(gains))
                if gains[i] > best[0]:
                    last = (sign * G[i] > 0).astype(float)
                    best[:] = [float(gains[i]), prefix + [cube[i], last], sign]
            return
        for c in cube:
            search(np.tensordot(c, Mr, axes=([0], [0])), prefix + [c])

    search(M, [])
    value, c, sign = best
    witness = tuple(_expand(v.astype(np.int8), keep, q) for v in c)
    return CutWitness(witness, sign, value)


def _ascend(M: np.ndarray, c: list[np.ndarray], sign: int) -> list[np.ndarray]:
    """Blockwise greedy updates until no block changes; ties select 0."""
    k = M.ndim
    changed = True
    while changed:
        changed = False
        for i in range(k):
            others = [c[j] for j in range(k) if j != i]
            Mi = np.moveaxis(M, i, -1)
            g = sign * _contract(Mi, others)
            new = (g > 0).astype(float)
            if not np.array_equal(new, c[i]):
                c[i] = new
                changed = True
    return c


def cutnorm_heuristic(D: StepFunction, T: StepPartition | None = None, *,
                      restarts: int = 8, seed: int = 0) -> CutWitness:
    """Best blockwise-optimal witness over random starts: a lower bound.

    Each (restart, sign) pair draws its own random start from the stream
    ``default_rng([seed, restart])``. Ties between equal values go to the
    lexicographically smallest witness.
    """
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    M, keep, q = _compacted(D, T)
    k = M.ndim
    r = len(keep)
    best = None
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        for sign in (1, -1):
            c = [rng.integers(0, 2, size=r).astype(float) for _ in range(k)]
            c = _ascend(M, c, sign)
            value = sign * float(_contract(M, c)) if r else 0.0
            key = (-value, tuple(np.concatenate(c).astype(int).tolist()), -sign)
            if best is None or key < best[0]:
                best = (key, c, sign, value)
    _, c, sign, value = best
    witness = tuple(_expand(v.astype(np.int8), keep, q) for v in c)
    return CutWitness(witness, sign, max(value, 0.0))


def restricted_cutnorm(D: StepFunction, T: StepPartition | None = None, *,
                       restarts: int = 8, seed: int = 0,
                       max_terms: int = EXACT_MAX_TERMS) -> tuple[CutWitness, bool]:
    """Exact witness when affordable, else the heuristic; flag says which."""
    M, keep, _ = _compacted(D, T)
    if exact_terms(M.ndim, len(keep)) <= max_terms:
        return cutnorm_exact(D, T, max_terms=max_terms), True
    return cutnorm_heuristic(D, T, restarts=restarts, seed=seed), False
