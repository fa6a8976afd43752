import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperlimits.density import density_exact
from hyperlimits.errors import BudgetExceeded, ValidationError
from hyperlimits.experiments import (TSV_COLUMNS, ExperimentConfig, report_tsv, run_config_file,
                                     run_experiment)
from hyperlimits.generators import random_hypergraph, random_hypergraphon, random_partition
from hyperlimits.hypergraph import complete_hypergraph, hom_density, make_hypergraph, named_hypergraph
from hyperlimits.io import function_doc, save_json
from hyperlimits.sampling import embed, sample_gnw, triangle_hypergraph
from hyperlimits.step import StepHypergraphon, uniform_intervals

seeds = st.integers(0, 2**32 - 1)


def test_embed_shapes():
    W = embed(named_hypergraph("K3"))
    assert W.base.parts == 3
    assert W.values.tolist() == [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
    assert float(embed(make_hypergraph(1, 4, [(0,), (2,), (3,)])).values) == 0.75
    with pytest.raises(BudgetExceeded):
        embed(make_hypergraph(5, 5, [(0, 1, 2, 3, 4)]))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 4))
def test_embedding_identity(seed, k):
    rng = np.random.default_rng(seed)
    H = random_hypergraph(rng, k, int(rng.integers(k, k + 2)), 0.6)
    F = random_hypergraph(rng, k, int(rng.integers(k, k + 2)), 0.7)
    assert density_exact(F, [embed(H)]) == pytest.approx(hom_density(F, H), abs=1e-10)


def test_gnw_extremes_and_determinism():
    base = random_partition(np.random.default_rng(0), 2, 2)
    zero = StepHypergraphon.constant(base, 0.0)
    one = StepHypergraphon.constant(base, 1.0)
    assert len(sample_gnw(zero, 8, 1)) == 0
    assert sample_gnw(one, 8, 1) == complete_hypergraph(3, 8)
    W = random_hypergraphon(np.random.default_rng(1), base)
    assert sample_gnw(W, 30, 5) == sample_gnw(W, 30, 5)
    assert sample_gnw(W, 30, 5) != sample_gnw(W, 30, 6)


def test_gnw_edge_frequency_k2():
    W = StepHypergraphon(uniform_intervals(2), np.array([[0.8, 0.1], [0.1, 0.6]]))
    n = 300
    est = np.mean([len(sample_gnw(W, n, s)) / (n * (n - 1) / 2) for s in range(3)])
    assert est == pytest.approx(density_exact(named_hypergraph("K2"), [W]), abs=0.02)


def test_triangle_model():
    assert triangle_hypergraph(6, 1.0, 1.0, 0) == complete_hypergraph(3, 6)
    assert len(triangle_hypergraph(10, 0.0, 1.0, 0)) == 0
    assert len(triangle_hypergraph(10, 1.0, 0.0, 0)) == 0
    H = triangle_hypergraph(40, 0.5, 1.0, 3)
    assert H == triangle_hypergraph(40, 0.5, 1.0, 3)
    # every edge closes a triangle of the hidden graph, so the shadow is consistent
    pairs = {p for e in H.edges for p in itertools.combinations(e, 2)}
    for e in itertools.combinations(range(40), 3):
        if all(p in pairs for p in itertools.combinations(e, 2)):
            assert e in set(H.edges)
    with pytest.raises(ValidationError):
        triangle_hypergraph(5, 1.5, 1.0, 0)


def test_experiment_small_exact():
    cfg = ExperimentConfig(model="triangles", n=[6, 8], F=["edge3"], seeds=[0, 1], p=1.0, q=1.0)
    report = run_experiment(cfg)
    assert len(report["rows"]) == 4
    for row in report["rows"]:
        n = row["n"]
        assert row["stderr"] == 0.0
        assert row["estimate"] == pytest.approx(n * (n - 1) * (n - 2) / n**3)
        assert row["predicted"] == 1.0
    tsv = report_tsv(report).splitlines()
    assert tsv[0].split("\t") == list(TSV_COLUMNS)
    assert len(tsv) == 5


def test_experiment_gnw_file(tmp_path):
    rng = np.random.default_rng(2)
    W = random_hypergraphon(rng, random_partition(rng, 2, 2))
    save_json(function_doc(W), tmp_path / "w.json")
    save_json({"model": "gnw", "n": 12, "W": "w.json", "F": ["edge3"], "seeds": [3]},
              tmp_path / "cfg.json")
    cfg, report = run_config_file(tmp_path / "cfg.json", threads=2)
    assert cfg.n == [12]
    assert report["summary"][0]["predicted"] == pytest.approx(density_exact(named_hypergraph("edge3"), [W]))
    _, again = run_config_file(tmp_path / "cfg.json", threads=1)
    assert report_tsv(again) == report_tsv(report)


@pytest.mark.parametrize("doc", [
    {"model": "triangles"},
    {"model": "nope", "n": 5},
    {"model": "triangles", "n": 5, "colour": 1},
    {"model": "triangles", "n": 5, "p": 2.0},
    {"model": "gnw", "n": 5},
    {"model": "triangles", "n": 5, "seeds": []},
])
def test_config_validation(doc):
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict(doc)


def test_experiment_uniformity_mismatch():
    cfg = ExperimentConfig(model="triangles", n=[6], F=["K3"])
    with pytest.raises(ValidationError):
        run_experiment(cfg)
