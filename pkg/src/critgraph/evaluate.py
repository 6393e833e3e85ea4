"""Top-N% overlap, pairwise ordering accuracy, and model-vs-oracle timing."""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .graph import Graph
from .metrics import RobustnessMetric
from .model import GnnModel, predict_table
from .oracle import CriticalityTable, ElementKind, rank_key, score_all, top_count, top_percent


def _check_universe(a: CriticalityTable, b: CriticalityTable) -> None:
    if len(a) != len(b) or set(a.ids.tolist()) != set(b.ids.tolist()):
        raise ValueError("tables cover different element sets")


def top_n_accuracy(predicted: CriticalityTable, truth: CriticalityTable, pct: float = 5.0) -> float:
    """``|top(pred) & top(truth)| / ceil(len * pct / 100)``."""
    _check_universe(predicted, truth)
    k = top_count(len(truth), pct)
    return len(top_percent(predicted, pct) & top_percent(truth, pct)) / k


def sample_pairs(n: int, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``count`` uniformly random ordered pairs of distinct indices below ``n``."""
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=count)
    j = (i + rng.integers(1, n, size=count)) % n
    return i, j


def ordering_agreement(pred: np.ndarray, truth: np.ndarray, i: np.ndarray, j: np.ndarray) -> float:
    """Fraction of pairs ordered as in ``truth``; pairs tied in truth always count."""
    t = np.sign(truth[i] - truth[j])
    p = np.sign(pred[i] - pred[j])
    return float(np.mean((t == 0) | (t == p)))


def pairwise_accuracy(
    predicted: CriticalityTable, truth: CriticalityTable, sample_pairs_count: int = 10_000, seed: int = 0
) -> float:
    """Sampled pairwise ordering accuracy over the elements of ``truth``.

    ``predicted`` must score every element of ``truth``; it may cover more.
    """
    if len(truth) < 2:
        raise ValueError("need at least two elements")
    pred_of = predicted.score_of()
    try:
        pred = np.array([pred_of[int(x)] for x in truth.ids])
    except KeyError as exc:
        raise ValueError(f"prediction lacks element {exc.args[0]}") from None
    # Compare on the same rounded keys that define ranks, so round-off ties stay ties.
    tkey, pkey = rank_key(truth.scores), rank_key(pred)
    i, j = sample_pairs(len(truth), sample_pairs_count, seed)
    return ordering_agreement(pkey, tkey, i, j)


@dataclass
class EvalReport:
    graph_id: str
    kind: str
    metric: str
    model_id: str
    top_pct: float
    top_accuracy: float
    pairwise_accuracy: float
    predict_seconds: float
    oracle_seconds: Optional[float] = None

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def write_reports(path: str | Path, reports: list[EvalReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EvalReport.header())
        for r in reports:
            row = asdict(r)
            w.writerow(["" if row[k] is None else row[k] for k in EvalReport.header()])


def read_reports(path: str | Path) -> list[EvalReport]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                EvalReport(
                    row["graph_id"],
                    row["kind"],
                    row["metric"],
                    row["model_id"],
                    float(row["top_pct"]),
                    float(row["top_accuracy"]),
                    float(row["pairwise_accuracy"]),
                    float(row["predict_seconds"]),
                    float(row["oracle_seconds"]) if row["oracle_seconds"] else None,
                )
            )
    return out


def timed_prediction(g: Graph, model: GnnModel, seed: int = 0) -> tuple[CriticalityTable, float]:
    start = time.perf_counter()
    table = predict_table(g, model, seed=seed)
    return table, time.perf_counter() - start


def benchmark(
    g: Graph,
    model: GnnModel,
    kind: ElementKind | str | None = None,
    metric: RobustnessMetric | str | None = None,
    pct: float = 5.0,
    truth: Optional[CriticalityTable] = None,
    with_oracle: bool = False,
    oracle_workers: int = 1,
    graph_id: str = "graph",
    model_id: str = "model",
    seed: int = 0,
    pair_samples: int = 10_000,
) -> EvalReport:
    """Time prediction (and optionally the oracle) on ``g`` and score agreement.

    The oracle runs sequentially unless ``oracle_workers`` says otherwise.
    Without an oracle run or a supplied ``truth`` the accuracy fields are
    ``nan``.
    """
    kind = ElementKind(kind) if kind is not None else model.kind
    metric = RobustnessMetric(metric) if metric is not None else model.metric
    if kind is not model.kind:
        raise ValueError(f"model scores {model.kind.value}s, not {kind.value}s")
    if metric is not model.metric:
        raise ValueError(f"model was trained for {model.metric.value}, not {metric.value}")
    predicted, predict_seconds = timed_prediction(g, model, seed)
    oracle_seconds = None
    if with_oracle:
        start = time.perf_counter()
        truth = score_all(g, kind, metric, workers=oracle_workers)
        oracle_seconds = time.perf_counter() - start
    if truth is not None:
        top = top_n_accuracy(predicted, truth, pct)
        pair = pairwise_accuracy(predicted, truth, pair_samples, seed)
    else:
        top = pair = float("nan")
    return EvalReport(graph_id, kind.value, metric.value, model_id, pct, top, pair, predict_seconds, oracle_seconds)

