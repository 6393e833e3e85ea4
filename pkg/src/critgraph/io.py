"""Edge lists, criticality CSVs, corpus directories and model documents."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import TrainingCorpus
from .graph import Graph
from .metrics import RobustnessMetric
from .model import GnnHyperparams, GnnModel
from .oracle import CriticalityTable, ElementKind

MODEL_FORMAT = "critgraph-model"
MODEL_FORMAT_VERSION = 1
TABLE_HEADER = ["element_id", "raw_score", "rank"]


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass
class IngestionReport:
    self_loops: int = 0
    duplicates: int = 0
    id_map: dict[int, int] = field(default_factory=dict)
    extra_columns: int = 0

    def summary(self) -> str:
        return (
            f"{len(self.id_map)} nodes; dropped {self.self_loops} self-loop(s); "
            f"merged {self.duplicates} duplicate link(s)"
        )


def parse_edge_list(text: str) -> tuple[Graph, IngestionReport]:
    """Build a simple undirected graph from ``u v`` lines.

    ``#`` lines and blank lines are skipped, columns after the second are
    ignored, ``(u, v)``/``(v, u)`` repeats are merged and self-loops
    dropped.  Node ids are compacted to ``0..N-1`` in ascending order of
    the original ids; nodes that only carry self-loops disappear.
    """
    report = IngestionReport()
    raw: list[tuple[int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) < 2:
            raise DataError(f"line {lineno}: expected two node ids, got {stripped!r}")
        if len(tokens) > 2:
            report.extra_columns += 1
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise DataError(f"line {lineno}: malformed node id in {stripped!r}") from None
        if u < 0 or v < 0:
            raise DataError(f"line {lineno}: node ids must be non-negative")
        raw.append((u, v))
    seen: set[tuple[int, int]] = set()
    for u, v in raw:
        if u == v:
            report.self_loops += 1
            continue
        e = (u, v) if u < v else (v, u)
        if e in seen:
            report.duplicates += 1
            continue
        seen.add(e)
    if not seen:
        raise DataError("empty document: no links")
    ids = sorted({x for e in seen for x in e})
    report.id_map = {old: new for new, old in enumerate(ids)}
    m = report.id_map
    return Graph.from_edges(len(ids), ((m[u], m[v]) for u, v in seen)), report


def format_edge_list(g: Graph) -> str:
    out = io.StringIO()
    out.write(f"# nodes {g.node_count} links {g.edge_count}\n")
    for u, v in g.edges:
        out.write(f"{u} {v}\n")
    return out.getvalue()


def read_graph(path: str | Path) -> tuple[Graph, IngestionReport]:
    return parse_edge_list(Path(path).read_text())


def write_graph(path: str | Path, g: Graph) -> None:
    Path(path).write_text(format_edge_list(g))


def write_table(path: str | Path, table: CriticalityTable) -> None:
    """CSV with columns ``element_id, raw_score, rank`` in element-id order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_HEADER)
        for i in np.argsort(table.ids, kind="stable"):
            w.writerow([int(table.ids[i]), repr(float(table.scores[i])), int(table.ranks[i])])


def read_table(
    path: str | Path,
    kind: ElementKind | str,
    metric: RobustnessMetric | str | None = None,
    base_value: float = float("nan"),
    universe: int | None = None,
) -> CriticalityTable:
    """Load a table CSV; ids below ``universe`` that are absent become skips."""
    ids, scores, ranks = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TABLE_HEADER:
            raise DataError(f"{path}: expected header {','.join(TABLE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ids.append(int(row[0]))
                scores.append(float(row[1]))
                ranks.append(int(row[2]))
            except (ValueError, IndexError):
                raise DataError(f"{path}: malformed row on line {lineno}") from None
    if sorted(ranks) != list(range(1, len(ranks) + 1)):
        raise DataError(f"{path}: ranks are not a permutation of 1..{len(ranks)}")
    table = CriticalityTable(
        ElementKind(kind), RobustnessMetric(metric) if metric else None, base_value, ids, scores, ranks
    )
    if universe is not None:
        present = set(ids)
        if any(not 0 <= i < universe for i in present):
            raise DataError(f"{path}: element id outside 0..{universe - 1}")
        table.skipped = [(x, "not sampled") for x in range(universe) if x not in present]
    return table


def save_corpus(directory: str | Path, corpus: TrainingCorpus, meta: dict | None = None) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for idx, (g, t) in enumerate(corpus.pairs):
        gname, tname = f"graph_{idx:03d}.edges", f"truth_{idx:03d}.csv"
        write_graph(d / gname, g)
        write_table(d / tname, t)
        entries.append({"graph": gname, "truth": tname, "nodes": g.node_count, "base_value": t.base_value})
    manifest = {
        "kind": corpus.kind.value,
        "metric": corpus.metric.value,
        "family": corpus.family,
        "digest": corpus.digest(),
        "graphs": entries,
    }
    if meta:
        manifest["meta"] = meta
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_corpus(directory: str | Path) -> TrainingCorpus:
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text())
    except FileNotFoundError:
        raise DataError(f"{d}: no manifest.json") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{d}/manifest.json: {exc}") from None
    kind, metric = ElementKind(manifest["kind"]), RobustnessMetric(manifest["metric"])
    pairs = []
    for e in manifest["graphs"]:
        g, _ = read_graph(d / e["graph"])
        universe = g.node_count if kind is ElementKind.NODE else g.edge_count
        t = read_table(d / e["truth"], kind, metric, float(e.get("base_value", "nan")), universe)
        pairs.append((g, t))
    return TrainingCorpus(pairs, kind, metric, manifest.get("family", "unknown"))


def model_to_dict(model: GnnModel) -> dict:
    shapes = model.hyper.parameter_shapes()
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "hyperparameters": model.hyper.to_dict(),
        "metric": model.metric.value,
        "family": model.family,
        "provenance": model.provenance,
        "tensors": [
            {"name": name, "shape": list(shape), "values": model.params[name].ravel().tolist()}
            for name, shape in shapes.items()
        ],
    }


def save_model(path: str | Path, model: GnnModel) -> None:
    """JSON document; floats use shortest round-trip decimals, so reload is bit-exact."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def model_from_dict(doc: dict) -> GnnModel:
    if doc.get("format") != MODEL_FORMAT:
        raise DataError("not a critgraph model document")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {version!r} (expected {MODEL_FORMAT_VERSION})")
    hyper = GnnHyperparams.from_dict(doc["hyperparameters"])
    tensors = {t.get("name"): t for t in doc.get("tensors", [])}
    params = {}
    for name, shape in hyper.parameter_shapes().items():
        t = tensors.get(name)
        if t is None:
            raise DataError(f"model document is missing tensor {name}")
        values = t.get("values")
        if tuple(t.get("shape", ())) != shape or not isinstance(values, list) or len(values) != int(np.prod(shape)):
            raise DataError(f"tensor {name} is corrupt: expected shape {shape}")
        try:
            arr = np.array(values, dtype=float).reshape(shape)
        except (TypeError, ValueError):
            raise DataError(f"tensor {name} is corrupt: non-numeric values") from None
        if not np.all(np.isfinite(arr)):
            raise DataError(f"tensor {name} is corrupt: non-finite values")
        params[name] = arr
    return GnnModel(hyper, params, doc["metric"], doc.get("family", "unknown"), doc.get("provenance", {}))


def load_model(path: str | Path) -> GnnModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: truncated or corrupt model document ({exc.msg} at char {exc.pos})") from None
    return model_from_dict(doc)
