import json

import numpy as np
import pytest

from hyperlimits.cli import run
from hyperlimits.generators import random_hypergraphon, random_partition
from hyperlimits.hypergraph import complete_hypergraph, parse_hg, write_hg
from hyperlimits.io import function_doc, partition_doc, quotient_doc, save_json
from hyperlimits.step import (StepFunction, StepHypergraphon, StepPartition, quotient,
                              trivial_partition, uniform_intervals)


@pytest.fixture
def files(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rng = np.random.default_rng(0)
    base = random_partition(rng, 2, 2)
    flat = StepPartition.from_splits(trivial_partition(None), np.ones((1, 1, 1)))
    save_json(function_doc(StepHypergraphon.constant(flat, 0.5)), "half.json")
    save_json(function_doc(random_hypergraphon(rng, base, binary=True)), "w1.json")
    save_json(function_doc(random_hypergraphon(rng, base, binary=True)), "w2.json")
    save_json(partition_doc(base), "base.json")
    checker = StepFunction(uniform_intervals(2), np.array([[1.0, -1.0], [-1.0, 1.0]]))
    save_json(function_doc(checker), "checker.json")
    g = random_hypergraphon(rng, uniform_intervals(2))
    save_json(function_doc(g), "g.json")
    save_json(quotient_doc(quotient(g, uniform_intervals(1))), "qa.json")
    write_hg(complete_hypergraph(3, 4), "k4.hg")
    return tmp_path


def out(capsys, argv):
    code = run(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_density_plain_and_formats(files, capsys):
    code, stdout, err = out(capsys, ["density", "--F", "k4.hg", "--W", "half.json"])
    assert code == 0 and stdout == "0.0625\n"
    assert err.startswith("config: {")
    code, stdout, _ = out(capsys, ["density", "--F", "K4_3", "--W", "half.json", "--format", "json"])
    assert json.loads(stdout) == {"density": 0.0625}
    code, stdout, _ = out(capsys, ["density", "--F", "K4_3", "--W", "half.json", "--format", "tsv"])
    assert stdout == "density\n0.0625\n"


def test_mc_density(files, capsys):
    argv = ["mc-density", "--F", "edge3", "--W", "half.json", "--samples", "5000", "--format", "json"]
    code, stdout, _ = out(capsys, argv)
    doc = json.loads(stdout)
    assert code == 0 and doc["mean"] == 0.5 and doc["stderr"] == 0.0


def test_cutnorm_checkerboard(files, capsys):
    code, stdout, _ = out(capsys, ["cutnorm", "--D", "checker.json", "--format", "json"])
    doc = json.loads(stdout)
    assert code == 0 and doc["value"] == 0.25 and doc["method"] == "exact"
    code, stdout, _ = out(capsys, ["cutnorm", "--D", "checker.json", "--mode", "heuristic"])
    assert stdout == "0.25\n"
    code, _, err = out(capsys, ["cutnorm", "--T", "base.json"])
    assert code == 1 and "error: usage:" in err


def test_regularize_and_quotient(files, capsys):
    code, stdout, _ = out(capsys, ["regularize", "--W", "w1.json", "w2.json", "--eps", "0.1"])
    doc = json.loads(stdout)
    assert code == 0 and doc["transcript"]["reason"] == "regular"
    assert doc["transcript"]["iterations"] <= doc["transcript"]["iteration_bound"]
    code, stdout, _ = out(capsys, ["regularize", "--W", "w1.json", "--eps", "0.1", "--format", "tsv"])
    assert stdout.splitlines()[0].startswith("iteration\tmember")
    code, stdout, _ = out(capsys, ["quotient", "--W", "w1.json", "--R", "base.json", "--format", "tsv"])
    assert code == 0 and stdout.splitlines()[0] == "cell\torbit\tvolume\taverage"


def test_d1_embed_enumerate(files, capsys):
    code, stdout, _ = out(capsys, ["d1", "--A", "qa.json", "--B", "qa.json"])
    assert code == 0 and stdout == "0\n"
    code, stdout, _ = out(capsys, ["embed", "--H", "K3"])
    assert json.loads(stdout)["level"] == 2
    code, stdout, _ = out(capsys, ["enumerate", "--k", "2", "--n", "4", "--format", "json"])
    assert json.loads(stdout)["count"] == 11


def test_samplers_write_hg(files, capsys):
    code, stdout, _ = out(capsys, ["sample-gnw", "--W", "w1.json", "--n", "10", "--seed", "3"])
    H = parse_hg(stdout)
    assert code == 0 and (H.k, H.n) == (3, 10)
    code, stdout, _ = out(capsys, ["triangles", "--n", "7", "--p", "1", "--q", "1"])
    assert parse_hg(stdout) == complete_hypergraph(3, 7)


def test_out_flag(files, capsys):
    code, stdout, _ = out(capsys, ["triangles", "--n", "5", "--out", "t.hg"])
    assert code == 0 and stdout == ""
    assert parse_hg((files / "t.hg").read_text()).n == 5


def test_experiment_and_delta(files, capsys):
    save_json({"model": "triangles", "n": [6], "F": ["edge3"], "seeds": [0, 1]}, "exp.json")
    code, stdout, _ = out(capsys, ["experiment", "--config", "exp.json", "--format", "tsv"])
    assert code == 0 and len(stdout.splitlines()) == 3
    code, stdout, _ = out(capsys, ["delta", "--W", "half.json", "--W2", "half.json"])
    assert stdout == "0\n"


def test_diagnose(files, capsys):
    code, stdout, _ = out(capsys, ["diagnose", "--W", "w1.json", "w2.json", "--F", "edge3",
                                   "--eps-seq", "0.3"])
    doc = json.loads(stdout)
    assert code == 0 and set(doc) == {"left_convergence", "partitionable"}


def test_check_counting(files, capsys):
    code, stdout, _ = out(capsys, ["check-counting", "--F", "edge3", "--U", "w1.json",
                                   "--W", "w2.json"])
    assert code == 0 and json.loads(stdout)["holds"] is True
    code, _, err = out(capsys, ["check-counting", "--lemma", "2", "--F", "edge3",
                                "--U", "w1.json", "--W", "w2.json"])
    assert code == 1


@pytest.mark.parametrize("argv,code,kind", [
    (["density", "--F", "K4_3", "--W", "missing.json"], 2, "validation"),
    (["density", "--F", "K3", "--W", "half.json"], 2, "validation"),
    (["density", "--F", "K4_3", "--W", "half.json", "--budget", "1"], 3, "budget"),
    (["density", "--F", "K4_3"], 1, "usage"),
    (["frobnicate"], 1, "usage"),
    (["density", "--F", "K4_3", "--W", "half.json", "--threads", "0"], 1, "usage"),
    (["regularize", "--W", "w1.json", "--eps", "-1"], 2, "validation"),
])
def test_error_exit_codes(files, capsys, argv, code, kind):
    got, stdout, err = out(capsys, argv)
    assert got == code
    assert err.strip().splitlines()[-1].startswith(f"error: {kind}: ")
    assert stdout == ""
