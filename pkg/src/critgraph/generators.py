"""Preferential-attachment graph families and oracle-labelled corpora.

All randomness comes from numpy's PCG64 bit generator
(``numpy.random.default_rng``), so a seed reproduces the same graph on any
platform.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .corpus import TrainingCorpus
from .graph import Graph
from .metrics import RobustnessMetric
from .oracle import ElementKind, score_all, worker_count


class Family(str, Enum):
    POWER_LAW = "pl"
    POWER_LAW_CLUSTER = "plc"


@dataclass(frozen=True)
class GeneratorSpec:
    family: Family
    node_count: int
    m: int = 2
    p: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.node_count < 3:
            raise ValueError("node_count must be at least 3")
        if not 1 <= self.m < self.node_count:
            raise ValueError("edges per new node must satisfy 1 <= m < node_count")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("triad probability must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def generate(spec: GeneratorSpec) -> Graph:
    """Grow a graph by preferential attachment from a star on ``m + 1`` nodes.

    Each arriving node links to ``m`` distinct existing nodes picked with
    probability proportional to degree.  For the clustered family, after the
    first attachment each further link closes a triangle with probability
    ``p`` by joining a random neighbour of the last preferentially chosen
    node (Holme-Kim); otherwise it is another preferential pick.  The star
    seed gives exactly ``m * (node_count - m)`` links.
    """
    rng = np.random.default_rng(spec.seed)
    n, m = spec.node_count, spec.m
    clustered = spec.family is Family.POWER_LAW_CLUSTER
    adj: list[set[int]] = [set() for _ in range(n)]
    edges: list[tuple[int, int]] = []

    def link(u: int, v: int) -> None:
        adj[u].add(v)
        adj[v].add(u)
        edges.append((u, v))

    for leaf in range(1, m + 1):
        link(0, leaf)
    # Every link endpoint appears once per incident link: uniform draws are degree-proportional.
    repeated: list[int] = [0] * m + list(range(1, m + 1))

    def preferential(source: int) -> int:
        while True:
            t = repeated[int(rng.integers(len(repeated)))]
            if t not in adj[source]:
                return t

    for source in range(m + 1, n):
        chosen: list[int] = []
        target = preferential(source)
        link(source, target)
        chosen.append(target)
        while len(chosen) < m:
            if clustered and rng.random() < spec.p:
                candidates = sorted(adj[target] - adj[source] - {source})
                if candidates:
                    nbr = candidates[int(rng.integers(len(candidates)))]
                    link(source, nbr)
                    chosen.append(nbr)
                    continue
            target = preferential(source)
            link(source, target)
            chosen.append(target)
        repeated.extend(chosen)
        repeated.extend([source] * m)
    return Graph.from_edges(n, edges)


def make_corpus(
    count: int,
    size_range: tuple[int, int],
    family: Family | str,
    metric: RobustnessMetric | str,
    kind: ElementKind | str,
    seed: int,
    m: int = 2,
    p: float = 0.3,
    workers: Optional[int] = None,
) -> TrainingCorpus:
    """Sample ``count`` graphs with node counts uniform in ``size_range`` and label them exactly."""
    lo, hi = size_range
    if count < 1:
        raise ValueError("corpus needs at least one graph")
    if lo < 10 or hi < lo:
        raise ValueError("size range must satisfy 10 <= min <= max")
    family = Family(family)
    rng = np.random.default_rng(seed)
    specs = [
        GeneratorSpec(family, int(rng.integers(lo, hi + 1)), m, p, int(rng.integers(2**63)))
        for _ in range(count)
    ]
    graphs = [generate(s) for s in specs]
    # Parallelism lives at the graph level; each oracle call then runs sequentially.
    nworkers = min(worker_count(workers), count)

    def label(g: Graph):
        return score_all(g, kind, metric, workers=1)

    if nworkers <= 1:
        tables = [label(g) for g in graphs]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            tables = list(pool.map(label, graphs))
    return TrainingCorpus(
        list(zip(graphs, tables)),
        ElementKind(kind),
        RobustnessMetric(metric),
        family=family.value,
    )
