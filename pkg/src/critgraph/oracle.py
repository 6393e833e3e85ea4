"""Exact criticality by exhaustive removal.

Each node (or link) is removed in turn, the robustness metric is recomputed
on the residual graph, and elements are ranked by the size of the change.
This is the slow reference every learned ranking is measured against.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .graph import Graph, GraphError, remove_link, remove_node
from .metrics import RobustnessMetric, metric_value


class ElementKind(str, Enum):
    NODE = "node"
    LINK = "link"


def worker_count(requested: Optional[int] = None) -> int:
    """Worker cap: explicit argument, else ``CRITGRAPH_THREADS``, else all cores."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("CRITGRAPH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


TIE_DIGITS = 10


def rank_key(scores: np.ndarray) -> np.ndarray:
    """Scores rounded to ``TIE_DIGITS`` relative to the largest finite one.

    Symmetric elements produce scores that differ only by eigensolver
    round-off; rounding makes them exact ties so the id tie-break applies.
    """
    scores = np.asarray(scores, dtype=float)
    finite = np.isfinite(scores)
    key = scores.copy()
    if finite.any():
        scale = np.max(np.abs(scores[finite]))
        if scale > 0:
            key[finite] = np.round(scores[finite] / scale, TIE_DIGITS)
    return key


def assign_ranks(ids: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Rank 1 for the largest score; ties broken by ascending element id."""
    # lexsort: last key is primary; +inf sorts first through negation.
    order = np.lexsort((ids, -rank_key(scores)))
    ranks = np.empty(len(ids), dtype=np.int64)
    ranks[order] = np.arange(1, len(ids) + 1)
    return ranks


@dataclass
class CriticalityTable:
    """Per-element scores and induced ranks for one graph.

    ``ids`` are node ids for ``NODE`` tables and link ids (positions in
    ``Graph.edges``) for ``LINK`` tables.  ``base_value`` is the metric of
    the intact graph; it is ``nan`` for model predictions.
    """

    kind: ElementKind
    metric: Optional[RobustnessMetric]
    base_value: float
    ids: np.ndarray
    scores: np.ndarray
    ranks: np.ndarray = None  # type: ignore[assignment]
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.scores = np.asarray(self.scores, dtype=float)
        if self.ranks is None:
            self.ranks = assign_ranks(self.ids, self.scores)
        else:
            self.ranks = np.asarray(self.ranks, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def entries(self) -> list[tuple[int, float, int]]:
        return [(int(i), float(s), int(r)) for i, s, r in zip(self.ids, self.scores, self.ranks)]

    def ranked_ids(self) -> np.ndarray:
        """Element ids ordered from rank 1 downwards."""
        return self.ids[np.argsort(self.ranks, kind="stable")]

    def score_of(self) -> dict[int, float]:
        return dict(zip(self.ids.tolist(), self.scores.tolist()))


def top_count(size: int, pct: float) -> int:
    if not 0 < pct <= 100:
        raise ValueError(f"percentage must lie in (0, 100], got {pct}")
    return min(size, math.ceil(size * pct / 100.0 - 1e-9))


def top_percent(table: CriticalityTable, pct: float) -> set[int]:
    """Ids of the ``ceil(len * pct / 100)`` best-ranked elements."""
    if len(table) == 0:
        raise ValueError("empty criticality table")
    k = top_count(len(table), pct)
    return set(table.ranked_ids()[:k].tolist())


def criticality_score(residual_value: float, base_value: float) -> float:
    """Absolute metric change caused by a removal.

    Using the magnitude lets both metrics rank "largest impact first"
    regardless of the direction in which each one moves.
    """
    return abs(residual_value - base_value)


def _residual_value(g: Graph, kind: ElementKind, metric: RobustnessMetric, element: int) -> float:
    if kind is ElementKind.NODE:
        residual, _ = remove_node(g, element)
    else:
        residual = remove_link(g, g.edges[element])
    return metric_value(residual, metric)


def score_subset(
    g: Graph,
    kind: ElementKind | str,
    metric: RobustnessMetric | str,
    elements,
    workers: Optional[int] = None,
) -> CriticalityTable:
    """Exact scores for the given elements only; the rest go to ``skipped``."""
    kind = ElementKind(kind)
    metric = RobustnessMetric(metric)
    count = g.node_count if kind is ElementKind.NODE else g.edge_count
    chosen = sorted({int(x) for x in elements})
    if chosen and not (0 <= chosen[0] and chosen[-1] < count):
        raise GraphError("element id out of range")
    table = _score(g, kind, metric, chosen, workers)
    picked = set(chosen)
    table.skipped = [(x, "not sampled") for x in range(count) if x not in picked]
    return table


def _score(g, kind, metric, elements, workers) -> CriticalityTable:
    if kind is ElementKind.NODE and g.node_count < 3:
        raise GraphError("node scoring needs at least 3 nodes")
    if kind is ElementKind.LINK and g.edge_count < 1:
        raise GraphError("link scoring needs at least 1 link")
    base = metric_value(g, metric)
    nworkers = min(worker_count(workers), max(1, len(elements)))
    if nworkers <= 1:
        residuals = [_residual_value(g, kind, metric, x) for x in elements]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            residuals = list(pool.map(lambda x: _residual_value(g, kind, metric, x), elements))
    scores = np.array([criticality_score(r, base) for r in residuals], dtype=float)
    return CriticalityTable(kind, metric, base, np.asarray(elements, dtype=np.int64), scores)


def score_all(
    g: Graph,
    kind: ElementKind | str,
    metric: RobustnessMetric | str,
    workers: Optional[int] = None,
) -> CriticalityTable:
    """Score every node or link of ``g`` by exhaustive removal.

    Residual evaluations are independent and fanned out over a thread pool
    (LAPACK releases the GIL); results are collected in element-id order,
    so the table does not depend on scheduling.  ``workers=1`` runs
    sequentially.
    """
    kind = ElementKind(kind)
    metric = RobustnessMetric(metric)
    count = g.node_count if kind is ElementKind.NODE else g.edge_count
    return _score(g, kind, metric, list(range(count)), workers)
