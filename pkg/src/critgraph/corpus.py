from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .graph import Graph
from .metrics import RobustnessMetric
from .oracle import CriticalityTable, ElementKind


@dataclass
class TrainingCorpus:
    """Graphs paired with their exact criticality tables.

    A table may cover only part of its graph (elements listed in
    ``skipped``); training pairs are then drawn from the labelled elements.
    """

    pairs: list[tuple[Graph, CriticalityTable]]
    kind: ElementKind
    metric: RobustnessMetric
    family: str = "unknown"

    def __post_init__(self) -> None:
        self.kind = ElementKind(self.kind)
        self.metric = RobustnessMetric(self.metric)
        for i, (g, t) in enumerate(self.pairs):
            if t.kind is not self.kind or (t.metric is not None and t.metric is not self.metric):
                raise ValueError(f"graph {i}: table kind/metric differs from the corpus")
            expected = g.node_count if self.kind is ElementKind.NODE else g.edge_count
            if len(t) + len(t.skipped) != expected:
                raise ValueError(
                    f"graph {i}: table has {len(t)} entries and {len(t.skipped)} skips, expected {expected}"
                )

    def __len__(self) -> int:
        return len(self.pairs)

    def subset(self, indices) -> "TrainingCorpus":
        return TrainingCorpus([self.pairs[i] for i in indices], self.kind, self.metric, self.family)

    def digest(self) -> str:
        """Stable SHA-256 over graphs and ground-truth scores."""
        h = hashlib.sha256()
        h.update(f"{self.kind.value}|{self.metric.value}".encode())
        for g, t in self.pairs:
            h.update(f"{g.node_count}:{g.edges}".encode())
            h.update(t.scores.tobytes())
        return h.hexdigest()
