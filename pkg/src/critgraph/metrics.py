"""Spectral robustness metrics: effective graph resistance and weighted spectrum."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .graph import Graph, GraphError, LaplacianKind, connected_components


class RobustnessMetric(str, Enum):
    EGR = "egr"
    WS4 = "ws4"


def effective_graph_resistance(g: Graph) -> float:
    """Normalized effective graph resistance ``2/(N-1) * sum(1/lambda)``.

    The sum runs over the ``N - c`` nonzero combinatorial Laplacian
    eigenvalues, ``c`` being the component count.  An edgeless graph has no
    nonzero eigenvalue and yields ``math.inf`` ("no connectivity").
    """
    n = g.node_count
    if n < 2:
        raise GraphError("metric undefined below 2 nodes")
    c = connected_components(g)
    if n - c == 0:
        return math.inf
    vals = np.linalg.eigvalsh(g.laplacian(LaplacianKind.COMBINATORIAL))
    return float(2.0 / (n - 1) * np.sum(1.0 / vals[c:]))


def weighted_spectrum(g: Graph, n: int = 4) -> float:
    """``sum((1 - lambda)**n)`` over every normalized Laplacian eigenvalue."""
    if g.node_count == 0:
        raise GraphError("empty graph")
    if n < 1:
        raise ValueError("cycle order n must be positive")
    vals = np.linalg.eigvalsh(g.laplacian(LaplacianKind.NORMALIZED))
    return float(np.sum((1.0 - vals) ** n))


def metric_value(g: Graph, metric: RobustnessMetric | str) -> float:
    metric = RobustnessMetric(metric)
    if metric is RobustnessMetric.EGR:
        return effective_graph_resistance(g)
    return weighted_spectrum(g, 4)
