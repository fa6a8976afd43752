"""End-to-end acceptance suite: one test per criterion, each with a runtime target."""

import itertools
import math
import os
import subprocess
import sys
import time

import numpy as np

from conftest import direct_density
from hyperlimits.cutnorm import cutnorm_exact, cutnorm_heuristic
from hyperlimits.density import density_exact, density_mc
from hyperlimits.experiments import ExperimentConfig, run_experiment
from hyperlimits.generators import (random_hypergraph, random_hypergraphon, random_partition,
                                    random_signed)
from hyperlimits.hypergraph import hom_count, named_hypergraph
from hyperlimits.io import function_doc, partition_doc, save_json
from hyperlimits.regularity import (check_counting_I, check_counting_II, weak_regularize)
from hyperlimits.sampling import embed, sample_gnw
from hyperlimits.step import (StepFunction, StepHypergraphon, _lift, co_refine, compact, d1,
                              interval_partition, merge_quotient, norms, quotient, step_avg,
                              symmetrize, trivial_partition, uniform_intervals, volumes)


def _triangle_summary(p, q):
    cfg = ExperimentConfig(model="triangles", n=[150], F=["edge3", "K4_3"], seeds=[0, 1, 2, 3, 4],
                           p=p, q=q, samples=10**6)
    report = run_experiment(cfg)
    return {row["F"]: row for row in report["summary"]}


def test_criterion_01_triangle_model_limits(record):
    start = time.perf_counter()
    summary = _triangle_summary(0.5, 1.0)
    elapsed = time.perf_counter() - start
    edge, k4 = summary["edge3"], summary["K4_3"]
    ok = (abs(edge["mean_estimate"] - 1 / 8) <= 0.02 and abs(k4["mean_estimate"] - 1 / 64) <= 0.01
          and elapsed < 60)
    record(1, ok, f"edge {edge['mean_estimate']:.5f} (1/8), K4 {k4['mean_estimate']:.6f} (1/64), "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_02_separation(record):
    start = time.perf_counter()
    a = _triangle_summary(0.5, 1.0)
    b = _triangle_summary(1.0, 0.125)
    elapsed = time.perf_counter() - start
    edge_gap = abs(a["edge3"]["mean_estimate"] - b["edge3"]["mean_estimate"])
    k4_gap = abs(a["K4_3"]["mean_estimate"] - b["K4_3"]["mean_estimate"])
    ok = edge_gap <= 0.02 and k4_gap >= 0.01 and elapsed < 60
    record(2, ok, f"edge gap {edge_gap:.5f}, K4 gap {k4_gap:.5f}, {elapsed:.1f}s")
    assert ok


def _random_small_graph(rng, k, n_max):
    n = int(rng.integers(k, n_max + 1))
    while True:
        H = random_hypergraph(rng, k, n, float(rng.uniform(0.3, 0.9)))
        if H.edges:
            return H


def test_criterion_03_embedding_identity(record):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 4))
        H = random_hypergraph(rng, k, int(rng.integers(k, 7)), float(rng.uniform(0.2, 0.9)))
        F = _random_small_graph(rng, k, 4)
        worst = max(worst, abs(density_exact(F, [embed(H)]) - hom_count(F, H).density))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30
    record(3, ok, f"max |t(F,H) - t(F,W^H)| = {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_density_oracles(record):
    rng = np.random.default_rng(4)
    graphs = [named_hypergraph("edge3"), named_hypergraph("K4_3")]
    start = time.perf_counter()
    worst, worst_z = 0.0, 0.0
    for i in range(50):
        B = random_partition(rng, 2, [int(rng.integers(1, 4)), int(rng.integers(1, 4))])
        W = random_hypergraphon(rng, B)
        for j, F in enumerate(graphs):
            exact = density_exact(F, [W])
            worst = max(worst, abs(exact - direct_density(F, [W])))
            est = density_mc(F, [W], samples=10**5, seed=1000 * i + j, threads=1)
            if est.stderr > 0:
                worst_z = max(worst_z, abs(est.mean - exact) / est.stderr)
            else:
                worst_z = max(worst_z, 0.0 if abs(est.mean - exact) <= 1e-12 else math.inf)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and worst_z <= 3 and elapsed < 60
    record(4, ok, f"max oracle gap {worst:.2e}, max MC z-score {worst_z:.2f}, {elapsed:.1f}s")
    assert ok


def _recomputed_energy(ws, R):
    """Sum of v_f w_f^2 from per-cell masses accumulated with np.add.at."""
    total = 0.0
    for w in ws:
        k = w.level
        C, mw, mr = co_refine(w.base, R)
        C, keep = compact(C)
        vol = volumes(C)
        vals = _lift(w.values, k, mw[keep])
        cell_v = np.zeros((R.parts,) * k)
        cell_m = np.zeros((R.parts,) * k)
        idx = tuple(np.meshgrid(*([mr[keep]] * k), indexing="ij"))
        np.add.at(cell_v, idx, vol)
        np.add.at(cell_m, idx, vol * vals)
        pos = cell_v > 0
        total += float((cell_m[pos] ** 2 / cell_v[pos]).sum())
    return total


def _recomputed_deviation(w, R):
    k = w.level
    C, mw, mr = co_refine(w.base, R)
    C, keep = compact(C)
    avg = quotient(w, R).average
    D = StepFunction(C, _lift(w.values, k, mw[keep]) - _lift(avg, k, mr[keep]))
    return cutnorm_exact(D).value


def _random_tuple(rng, k, m):
    if k == 2:
        base = interval_partition(rng.dirichlet(np.ones(int(rng.integers(2, 7)))))
    else:
        base = random_partition(rng, 2, [int(rng.integers(2, 4)), int(rng.integers(2, 4))])
    return [random_hypergraphon(rng, base, binary=bool(rng.random() < 0.7)) for _ in range(m)]


def test_criterion_05_weak_regularity(record):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    bad, refinements, min_gain_margin, worst_dev = [], 0, math.inf, 0.0
    for t in range(50):
        k = int(rng.integers(2, 4))
        m = int(rng.integers(1, 4))
        eps = float(rng.choice([0.2, 0.3]))
        ws = _random_tuple(rng, k, m)
        Q0 = trivial_partition(ws[0].base.base)
        R, tr = weak_regularize(ws, Q0, eps, seed=t)
        if tr.iterations > math.ceil(m / eps ** 2):
            bad.append((t, "iterations"))
        prev = Q0
        for rec in tr.records:
            gain = _recomputed_energy(ws, rec.partition) - _recomputed_energy(ws, prev)
            min_gain_margin = min(min_gain_margin, gain - eps ** 2)
            if gain < eps ** 2:
                bad.append((t, "gain"))
            prev = rec.partition
            refinements += 1
        if tr.reason.startswith("regular"):
            dev = max(_recomputed_deviation(w, R) for w in ws)
            worst_dev = max(worst_dev, dev - eps)
            if dev > eps:
                bad.append((t, "deviation"))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 120
    record(5, ok, f"{refinements} refinements, min gain - eps^2 = {min_gain_margin:.3g}, "
                  f"max post-hoc deviation - eps = {worst_dev:.3g}, {elapsed:.1f}s, failures {bad[:5]}")
    assert ok


def test_criterion_06_counting_lemma_one(record):
    rng = np.random.default_rng(6)
    graphs = [named_hypergraph(n) for n in ("K3", "C4", "P3")]
    start = time.perf_counter()
    violations, tightest = 0, -math.inf
    for _ in range(200):
        base = interval_partition(rng.dirichlet(np.ones(int(rng.integers(1, 9)))))
        U = random_hypergraphon(rng, base)
        W = random_hypergraphon(rng, base)
        for F in graphs:
            rep = check_counting_I(F, None, [U], [W])
            assert all(rep.details["exact"])
            tightest = max(tightest, rep.lhs - rep.rhs)
            violations += not rep.holds
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 60
    record(6, ok, f"{violations} violations over 600 checks, max lhs - rhs = {tightest:.3g}, "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_07_counting_lemma_two(record):
    rng = np.random.default_rng(7)
    graphs = [named_hypergraph(n) for n in ("edge3", "two_edges3", "K4_3")]
    start = time.perf_counter()
    violations, tightest = 0, -math.inf
    for _ in range(50):
        q = int(rng.integers(1, 3))
        m = int(rng.integers(1, 3))
        U = _random_tuple(rng, 3, m)
        W = _random_tuple(rng, 3, m)
        Q = random_partition(rng, 2, [int(rng.integers(1, 3)), q])
        R = random_partition(rng, 2, [int(rng.integers(1, 3)), q])
        delta = max(d1(quotient(u, Q), quotient(w, R)) for u, w in zip(U, W))
        F = graphs[int(rng.integers(len(graphs)))]
        alpha = [int(a) for a in rng.integers(0, m, size=len(F))]
        rep = check_counting_II(F, alpha, U, W, Q, R, delta)
        tightest = max(tightest, rep.lhs - rep.rhs)
        violations += not rep.holds
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 120
    record(7, ok, f"{violations} violations over 50 instances, max lhs - rhs = {tightest:.3g}, "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_08_quotient_suite(record):
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    worst = {"volume": 0.0, "inner": 0.0, "merge": 0.0}
    exact_idempotent = True
    for _ in range(500):
        k = int(rng.integers(2, 4))
        level = k - 1
        sizes = [int(rng.integers(1, 4)) for _ in range(level)]
        W = random_hypergraphon(rng, random_partition(rng, level, sizes))
        Q = random_partition(rng, level, [int(rng.integers(1, 4)) for _ in range(level)])
        quot = quotient(W, Q)
        worst["volume"] = max(worst["volume"], abs(quot.volume.sum() - 1))
        WQ = step_avg(W, Q)
        exact_idempotent &= np.array_equal(step_avg(WQ, Q).values, WQ.values)
        Uq = StepFunction(Q, symmetrize(rng.uniform(-1, 1, size=(Q.parts,) * k), k))
        worst["inner"] = max(worst["inner"], abs(norms(W, Uq).inner - norms(WQ, Uq).inner))
        extra = random_partition(rng, level, [int(rng.integers(1, 3)) for _ in range(level)])
        fine, to_q, _ = co_refine(Q, extra)
        fine, keep = compact(fine)
        merged = merge_quotient(quotient(W, fine), to_q[keep], Q.parts)
        gap = max(np.abs(merged.volume - quot.volume).max(),
                  np.abs(merged.volume * merged.average - quot.volume * quot.average).max())
        worst["merge"] = max(worst["merge"], gap)
    elapsed = time.perf_counter() - start
    ok = (worst["volume"] <= 1e-9 and exact_idempotent and worst["inner"] <= 1e-9
          and worst["merge"] <= 1e-9 and elapsed < 30)
    record(8, ok, f"volume {worst['volume']:.2e}, idempotent {exact_idempotent}, "
                  f"inner {worst['inner']:.2e}, merge {worst['merge']:.2e}, {elapsed:.1f}s")
    assert ok


def _brute_cutnorm_k2(D):
    lengths = D.base.lengths
    M = np.outer(lengths, lengths) * D.values
    r = len(lengths)
    best = 0.0
    for S in itertools.product((0, 1), repeat=r):
        for T in itertools.product((0, 1), repeat=r):
            best = max(best, abs(float(np.array(S) @ M @ np.array(T))))
    return best


def test_criterion_09_cutnorm_oracles(record):
    rng = np.random.default_rng(9)
    start = time.perf_counter()
    above = 0
    for t in range(200):
        k = int(rng.integers(2, 4))
        base = random_partition(rng, k - 1, [int(rng.integers(1, 5))] * (k - 1))
        D = random_signed(rng, base)
        exact = cutnorm_exact(D).value
        heur = cutnorm_heuristic(D, restarts=4, seed=t).value
        above += heur > exact + 1e-12
    checker = StepFunction(uniform_intervals(2), np.array([[1.0, -1.0], [-1.0, 1.0]]))
    checker_value = cutnorm_exact(checker).value
    brute_gap = 0.0
    for _ in range(100):
        base = interval_partition(rng.dirichlet(np.ones(int(rng.integers(1, 6)))))
        D = random_signed(rng, base)
        brute_gap = max(brute_gap, abs(cutnorm_exact(D).value - _brute_cutnorm_k2(D)))
    elapsed = time.perf_counter() - start
    ok = above == 0 and checker_value == 0.25 and brute_gap <= 1e-12 and elapsed < 60
    record(9, ok, f"heuristic above exact {above}/200, checkerboard {checker_value!r}, "
                  f"brute-force gap {brute_gap:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_10_gnw_convergence(record):
    base = random_partition(np.random.default_rng(10), 2, [2, 2])
    W = StepHypergraphon(base, symmetrize(np.array([[[0.9, 0.2], [0.2, 0.5]],
                                                    [[0.2, 0.5], [0.5, 0.1]]]), 3))
    edge = named_hypergraph("edge3")
    target = density_exact(edge, [W])
    start = time.perf_counter()
    gaps = [abs(hom_count(edge, sample_gnw(W, 200, seed)).density - target) for seed in range(5)]
    elapsed = time.perf_counter() - start
    ok = float(np.mean(gaps)) <= 0.03 and elapsed < 60
    record(10, ok, f"mean |t_hat - t| = {np.mean(gaps):.5f} (t = {target:.5f}), {elapsed:.1f}s")
    assert ok


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "hyperlimits", *args], cwd=cwd,
                          capture_output=True, check=False)


def test_criterion_11_determinism(record, tmp_path):
    rng = np.random.default_rng(11)
    base = random_partition(rng, 2, [2, 2])
    for name in ("W1", "W2"):
        save_json(function_doc(random_hypergraphon(rng, base, binary=True)), tmp_path / f"{name}.json")
    save_json(function_doc(random_signed(rng, base)), tmp_path / "D.json")
    save_json(partition_doc(base), tmp_path / "T.json")
    save_json({"model": "triangles", "n": [30, 40], "F": ["edge3", "K4_3"], "seeds": [0, 1],
               "samples": 20000}, tmp_path / "exp.json")
    commands = [
        ["density", "--F", "K4_3", "--W", "W1.json"],
        ["mc-density", "--F", "K4_3", "--W", "W1.json", "--samples", "50000", "--seed", "3"],
        ["cutnorm", "--D", "D.json", "--mode", "heuristic", "--seed", "2"],
        ["cutnorm", "--U", "W1.json", "--W", "W2.json", "--T", "T.json"],
        ["regularize", "--W", "W1.json", "W2.json", "--eps", "0.2", "--seed", "1"],
        ["sample-gnw", "--W", "W1.json", "--n", "20", "--seed", "5"],
        ["triangles", "--n", "25", "--seed", "7"],
        ["experiment", "--config", "exp.json", "--format", "tsv"],
        ["diagnose", "--W", "W1.json", "W2.json", "W1.json", "--F", "edge3", "--seed", "4"],
        ["delta", "--W", "W1.json", "--W2", "W2.json"],
    ]
    many = str(max(2, os.cpu_count() or 2))
    start = time.perf_counter()
    mismatched = []
    for cmd in commands:
        outs = [_cli(cmd + ["--threads", t], tmp_path) for t in ("1", "1", many, many)]
        if any(o.returncode != 0 for o in outs):
            mismatched.append((cmd[0], "exit", [o.returncode for o in outs], outs[0].stderr[-300:]))
        elif len({o.stdout for o in outs}) != 1:
            mismatched.append((cmd[0], "output"))
    elapsed = time.perf_counter() - start
    ok = not mismatched
    record(11, ok, f"{len(commands)} commands x 4 runs (threads 1 and {many}), "
                   f"{elapsed:.1f}s, mismatches {mismatched}")
    assert ok
