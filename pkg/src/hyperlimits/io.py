"""JSON documents for step structures, quotients and reports.

Numbers are written with 17 significant digits so that reading a file back
reproduces every double exactly; cells are sorted representatives (0-based
part indices) in lexicographic order.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hypergraph import Hypergraph, make_hypergraph, named_hypergraph, read_hg
from .step import (Quotient, StepFunction, StepHypergraphon, StepPartition, sorted_cells,
                   symmetrize)


# ---------------------------------------------------------------------------
# writer
# ---------------------------------------------------------------------------

def _number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("cannot write a non-finite number")
    return format(x, ".17g")


def _flat(obj) -> bool:
    return isinstance(obj, (list, tuple)) and all(
        not isinstance(v, (dict, list, tuple)) for v in obj)


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON text; scalar lists and small dicts stay on one line."""
    pad = "  " * indent
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return _number(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if _flat(obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        inner = ",\n".join(pad + "  " + dumps(v, indent + 1) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        if all(not isinstance(v, (dict, list, tuple)) or _flat(v) for v in obj.values()) \
                and len(obj) <= 4:
            return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
        inner = ",\n".join(f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 1)}'
                           for k, v in obj.items())
        return "{\n" + inner + "\n" + pad + "}"
    if hasattr(obj, "as_dict"):
        return dumps(obj.as_dict(), indent)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# step structures to documents
# ---------------------------------------------------------------------------

def partition_doc(P: StepPartition) -> dict:
    identity = P.n_pieces == P.parts and np.array_equal(P.labels, np.arange(P.parts))
    if P.base is None:
        doc: dict = {"intervals": P.pieces.tolist()}
        if not identity:
            doc["labels"] = P.labels.tolist()
            doc["parts"] = P.parts
        return doc
    k = P.level
    doc = {"level": k, "base": partition_doc(P.base), "parts": P.parts}
    if not identity:
        doc["labels"] = P.labels.tolist()
    doc["splits"] = [{"cell": list(c), "split": P.pieces[c].tolist()}
                     for c in sorted_cells(P.base.parts, k)]
    return doc


def function_doc(W: StepFunction) -> dict:
    if W.base is None:
        return {"level": 1, "value": float(W.values)}
    k = W.level
    return {"level": k, "base": partition_doc(W.base),
            "values": [{"cell": list(c), "value": float(W.values[c])}
                       for c in sorted_cells(W.base.parts, k)]}


def quotient_doc(Qt: Quotient) -> dict:
    return {"k": Qt.k, "q": Qt.q,
            "cells": [{"cell": list(c), "orbit": o, "volume": v, "average": w}
                      for c, o, v, w in Qt.cells()]}


# ---------------------------------------------------------------------------
# documents to step structures
# ---------------------------------------------------------------------------

def _require(doc: dict, key: str, what: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ValidationError(f"{what} document lacks field '{key}'")
    return doc[key]


def _cell_table(entries, q: int, k: int, key: str, width: int | None, what: str) -> np.ndarray:
    tail = () if width is None else (width,)
    table = np.full((q,) * k + tail, np.nan)
    seen = set()
    for entry in entries:
        cell = tuple(int(x) for x in _require(entry, "cell", what))
        if len(cell) != k or any(not 0 <= x < q for x in cell):
            raise ValidationError(f"{what} cell {list(cell)} is not a {k}-tuple over 0..{q - 1}")
        if list(cell) != sorted(cell):
            raise ValidationError(f"{what} cell {list(cell)} is not sorted")
        if cell in seen:
            raise ValidationError(f"{what} cell {list(cell)} listed twice")
        seen.add(cell)
        value = np.asarray(_require(entry, key, what), dtype=float)
        if value.shape != tail:
            raise ValidationError(f"{what} cell {list(cell)} has an entry of the wrong length")
        table[cell] = value
    for cell in sorted_cells(q, k):
        if cell not in seen:
            raise ValidationError(f"{what} cell {list(cell)} missing")
    return symmetrize(table, k)


def partition_from_doc(doc: dict) -> StepPartition:
    if isinstance(doc, dict) and "intervals" in doc:
        pieces = np.asarray(doc["intervals"], dtype=float)
        if pieces.ndim != 1 or pieces.size == 0:
            raise ValidationError("intervals must be a nonempty list of numbers")
        labels = doc.get("labels", list(range(len(pieces))))
        parts = int(doc.get("parts", len(pieces)))
        return StepPartition(None, pieces, np.asarray(labels), parts)
    k = int(_require(doc, "level", "partition"))
    if k < 2:
        raise ValidationError("level-1 partitions use the 'intervals' form")
    base = partition_from_doc(_require(doc, "base", "partition"))
    if base.level != k - 1:
        raise ValidationError(f"level-{k} partition has a level-{base.level} base")
    parts = int(_require(doc, "parts", "partition"))
    labels = doc.get("labels")
    width = parts if labels is None else len(labels)
    table = _cell_table(_require(doc, "splits", "partition"), base.parts, k, "split", width,
                        "partition")
    if labels is None:
        labels = list(range(parts))
    return StepPartition(base, table, np.asarray(labels), parts)


def function_from_doc(doc: dict, cls=StepHypergraphon) -> StepFunction:
    k = int(_require(doc, "level", "hypergraphon"))
    if k == 1:
        return cls(None, np.asarray(float(_require(doc, "value", "hypergraphon"))))
    base = partition_from_doc(_require(doc, "base", "hypergraphon"))
    if base.level != k - 1:
        raise ValidationError(f"level-{k} hypergraphon has a level-{base.level} base")
    table = _cell_table(_require(doc, "values", "hypergraphon"), base.parts, k, "value", None,
                        "hypergraphon")
    return cls(base, table)


def quotient_from_doc(doc: dict) -> Quotient:
    k, q = int(_require(doc, "k", "quotient")), int(_require(doc, "q", "quotient"))
    cells = _require(doc, "cells", "quotient")
    vol = _cell_table(cells, q, k, "volume", None, "quotient")
    avg = _cell_table(cells, q, k, "average", None, "quotient")
    return Quotient(k, q, vol, avg)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def save_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def read_partition(path) -> StepPartition:
    return partition_from_doc(load_json(path))


def read_hypergraphon(path) -> StepHypergraphon:
    return function_from_doc(load_json(path))


def read_quotient(path) -> Quotient:
    return quotient_from_doc(load_json(path))


def hypergraph_doc(H: Hypergraph) -> dict:
    return {"k": H.k, "n": H.n, "edges": [list(e) for e in H.edges]}


def hypergraph_from_spec(spec, root: Path | None = None) -> tuple[str, Hypergraph]:
    """A named hypergraph, a path to a .hg file, or an inline ``{k, n, edges}`` object."""
    if isinstance(spec, str):
        try:
            return spec, named_hypergraph(spec)
        except ValidationError:
            path = Path(spec) if root is None or Path(spec).is_absolute() else root / spec
            if path.suffix == ".hg" or path.exists():
                return Path(spec).stem, read_hypergraph(path)
            raise
    if isinstance(spec, dict):
        H = make_hypergraph(int(_require(spec, "k", "hypergraph")),
                            int(_require(spec, "n", "hypergraph")),
                            _require(spec, "edges", "hypergraph"))
        return str(spec.get("name", f"H{len(H)}")), H
    raise ValidationError(f"cannot interpret hypergraph entry {spec!r}")


def read_hypergraph(path) -> Hypergraph:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    return read_hg(path)
