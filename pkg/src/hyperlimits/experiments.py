"""Scripted convergence experiments for the random hypergraph models."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .density import density_exact
from .errors import ValidationError
from .hypergraph import Hypergraph, hom_count, shadow
from .io import _number, function_from_doc, hypergraph_from_spec, load_json
from .sampling import sample_gnw, triangle_hypergraph
from .step import StepFunction

MODELS = ("triangles", "gnw")
EXPERIMENT_EXACT_BUDGET = 10**6
TSV_COLUMNS = ("model", "n", "seed", "F", "estimate", "stderr", "predicted", "gap")


@dataclass
class ExperimentConfig:
    model: str
    n: list[int]
    F: list = field(default_factory=lambda: ["edge3"])
    seeds: list[int] = field(default_factory=lambda: [0])
    p: float = 0.5
    q: float = 1.0
    W: object = None
    samples: int = 10**6
    exact_budget: int = EXPERIMENT_EXACT_BUDGET
    output: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ValidationError("experiment config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValidationError(f"unknown config fields: {unknown}")
        if "model" not in doc or "n" not in doc:
            raise ValidationError("config needs 'model' and 'n'")
        cfg = cls(**doc)
        cfg.n = [int(v) for v in (cfg.n if isinstance(cfg.n, list) else [cfg.n])]
        cfg.seeds = [int(v) for v in cfg.seeds]
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ValidationError(f"model must be one of {list(MODELS)}, got {self.model!r}")
        if not self.n or not self.seeds or not self.F:
            raise ValidationError("config needs nonempty n, seeds and F lists")
        if not (0 <= self.p <= 1 and 0 <= self.q <= 1):
            raise ValidationError("p and q must lie in [0, 1]")
        if self.samples < 1:
            raise ValidationError("samples must be at least 1")
        if self.model == "gnw" and self.W is None:
            raise ValidationError("the gnw model needs W (a file path or an inline document)")


def _cell_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def load_model(cfg: ExperimentConfig, root: Path | None) -> tuple[int, StepFunction | None]:
    if cfg.model == "triangles":
        return 3, None
    doc = cfg.W
    if isinstance(doc, str):
        path = Path(doc) if root is None or Path(doc).is_absolute() else root / doc
        doc = load_json(path)
    W = function_from_doc(doc)
    return W.level, W


def predicted(cfg: ExperimentConfig, F: Hypergraph, W: StepFunction | None) -> float:
    if cfg.model == "triangles":
        return cfg.q ** len(F) * cfg.p ** len(shadow(F))
    return density_exact(F, [W])


def estimate(F: Hypergraph, H: Hypergraph, cfg: ExperimentConfig, seed: int,
             threads: int = 1) -> tuple[float, float]:
    if H.n ** F.n <= cfg.exact_budget:
        return hom_count(F, H).density, 0.0
    res = hom_count(F, H, sample=True, samples=cfg.samples, seed=seed, threads=threads)
    return res.density, res.stderr


def run_experiment(cfg: ExperimentConfig, *, root: Path | None = None, threads: int = 1) -> dict:
    """Rows for every (n, seed, F) cell plus per-(n, F) seed averages."""
    cfg.validate()
    k, W = load_model(cfg, root)
    graphs = [hypergraph_from_spec(spec, root) for spec in cfg.F]
    for name, F in graphs:
        if F.k != k:
            raise ValidationError(f"{name} is {F.k}-uniform but the model is {k}-uniform")
    for n in cfg.n:
        if n < k:
            raise ValidationError(f"n = {n} is below the uniformity {k}")
    preds = [predicted(cfg, F, W) for _, F in graphs]
    rows = []
    for n in cfg.n:
        for seed in cfg.seeds:
            hseed = _cell_seed(seed, n)
            if cfg.model == "triangles":
                H = triangle_hypergraph(n, cfg.p, cfg.q, hseed)
            else:
                H = sample_gnw(W, n, hseed)
            for fidx, (name, F) in enumerate(graphs):
                est, err = estimate(F, H, cfg, _cell_seed(seed, n, fidx), threads)
                rows.append({"model": cfg.model, "n": n, "seed": seed, "F": name,
                             "estimate": est, "stderr": err, "predicted": preds[fidx],
                             "gap": abs(est - preds[fidx])})
    summary = []
    for n in cfg.n:
        for fidx, (name, _) in enumerate(graphs):
            cell = [r for r in rows if r["n"] == n and r["F"] == name]
            mean = float(np.mean([r["estimate"] for r in cell]))
            summary.append({"model": cfg.model, "n": n, "F": name, "seeds": len(cell),
                            "mean_estimate": mean, "predicted": preds[fidx],
                            "gap": abs(mean - preds[fidx])})
    return {"config": asdict(cfg), "rows": rows, "summary": summary}


def report_tsv(report: dict) -> str:
    lines = ["\t".join(TSV_COLUMNS)]
    for r in report["rows"]:
        lines.append("\t".join(_number(r[c]) if not isinstance(r[c], str) else r[c]
                               for c in TSV_COLUMNS))
    return "\n".join(lines) + "\n"


def run_config_file(path, *, threads: int = 1) -> tuple[ExperimentConfig, dict]:
    path = Path(path)
    cfg = ExperimentConfig.from_dict(load_json(path))
    return cfg, run_experiment(cfg, root=path.parent, threads=threads)
