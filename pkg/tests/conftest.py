import itertools

import numpy as np
import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str):
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_hom(F, H):
    """Count edge-preserving maps by trying every vertex map."""
    edges = {frozenset(e) for e in H.edges}
    count = 0
    for phi in itertools.product(range(H.n), repeat=F.n):
        if all(len({phi[v] for v in e}) == F.k and frozenset(phi[v] for v in e) in edges
               for e in F.edges):
            count += 1
    return count


def direct_density(F, ws, alpha=None):
    """t_alpha(F, W) by summing over every joint assignment of parts to the
    sets of r(V(F), k-1), weighted by the product of their fiber masses."""
    k = ws[0].level
    alpha = [0] * len(F.edges) if alpha is None else list(alpha)
    if not F.edges:
        return 1.0
    base = ws[0].base
    chain = base.chain()
    sets = [s for j in range(1, k) for s in itertools.combinations(range(F.n), j)]
    pos = {s: i for i, s in enumerate(sets)}
    grids = [np.arange(chain[len(s) - 1].parts) for s in sets]
    assign = np.stack([g.reshape(-1) for g in np.meshgrid(*grids, indexing="ij")], axis=1)
    prob = np.ones(len(assign))
    for s in sets:
        P = chain[len(s) - 1]
        if len(s) == 1:
            prob *= P.splits[assign[:, pos[s]]]
        else:
            faces = tuple(assign[:, pos[s[:i] + s[i + 1:]]] for i in range(len(s)))
            prob *= P.splits[faces + (assign[:, pos[s]],)]
    integrand = np.ones(len(assign))
    for e, a in zip(F.edges, alpha):
        e = tuple(sorted(e))
        faces = tuple(assign[:, pos[e[:i] + e[i + 1:]]] for i in range(k))
        integrand *= ws[a].values[faces]
    return float((prob * integrand).sum())
