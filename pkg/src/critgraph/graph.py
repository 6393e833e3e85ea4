"""Undirected simple graphs, traversal and Laplacian spectra.

Graphs are immutable values: every operation returns a new graph and leaves
its input untouched, so instances can be shared freely between threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or invalid graph operations."""


class LaplacianKind(str, Enum):
    COMBINATORIAL = "combinatorial"
    NORMALIZED = "normalized"


def _canonical(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on nodes ``0..node_count-1``.

    ``edges`` holds each link once as ``(u, v)`` with ``u < v``, sorted
    lexicographically; the position of a link in this tuple is its link id.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        if node_count < 0:
            raise GraphError("node_count must be non-negative")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphError(f"edge ({u}, {v}) out of range for {node_count} nodes")
            e = _canonical(u, v)
            if e in canon:
                raise GraphError(f"duplicate edge {e}")
            canon.add(e)
        ordered = tuple(sorted(canon))
        nbrs: list[list[int]] = [[] for _ in range(node_count)]
        for u, v in ordered:
            nbrs[u].append(v)
            nbrs[v].append(u)
        adjacency = tuple(tuple(sorted(n)) for n in nbrs)
        return cls(node_count, ordered, adjacency)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=self.node_count)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return _canonical(u, v) in self._edge_index

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self._edge_index[_canonical(u, v)]
        except KeyError:
            raise GraphError(f"edge ({u}, {v}) not in graph") from None

    @property
    def _edge_index(self) -> dict[tuple[int, int], int]:
        cache = self.__dict__.get("_edge_index_cache")
        if cache is None:
            cache = {e: i for i, e in enumerate(self.edges)}
            object.__setattr__(self, "_edge_index_cache", cache)
        return cache

    def edge_array(self) -> np.ndarray:
        """Links as an ``(L, 2)`` integer array in link-id order."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        e = self.edge_array()
        a[e[:, 0], e[:, 1]] = 1.0
        a[e[:, 1], e[:, 0]] = 1.0
        return a

    def laplacian(self, kind: LaplacianKind | str = LaplacianKind.COMBINATORIAL) -> np.ndarray:
        """Dense Laplacian ``D - A`` or ``I - D^-1/2 A D^-1/2``.

        In the normalized form an isolated node gets a zero row and column,
        so it contributes a zero eigenvalue exactly like the combinatorial form.
        """
        kind = LaplacianKind(kind)
        deg = self.degrees().astype(float)
        a = self.adjacency_matrix()
        if kind is LaplacianKind.COMBINATORIAL:
            return np.diag(deg) - a
        inv_sqrt = np.zeros_like(deg)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        lap = -(inv_sqrt[:, None] * a * inv_sqrt[None, :])
        lap[np.diag_indices_from(lap)] = nz.astype(float)
        return lap

    def canonical_edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.node_count == other.node_count and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.node_count, self.edges))

    def relabel(self, perm: Iterable[int]) -> "Graph":
        """Return the isomorphic graph where node ``v`` becomes ``perm[v]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.node_count)):
            raise GraphError("relabelling must be a permutation of the node ids")
        return Graph.from_edges(self.node_count, ((perm[u], perm[v]) for u, v in self.edges))


def connected_components(g: Graph) -> int:
    """Number of connected components, found by breadth-first search."""
    return len(component_labels(g)[1])


def component_labels(g: Graph) -> tuple[np.ndarray, list[int]]:
    """Per-node component label and the size of each component."""
    labels = np.full(g.node_count, -1, dtype=np.int64)
    sizes: list[int] = []
    for start in range(g.node_count):
        if labels[start] >= 0:
            continue
        comp = len(sizes)
        labels[start] = comp
        queue = deque([start])
        size = 0
        while queue:
            u = queue.popleft()
            size += 1
            for w in g.adjacency[u]:
                if labels[w] < 0:
                    labels[w] = comp
                    queue.append(w)
        sizes.append(size)
    return labels, sizes


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    kind: LaplacianKind
    component_count: int
    eigenvectors: Optional[np.ndarray] = None

    @property
    def nonzero(self) -> np.ndarray:
        """Eigenvalues with the ``component_count`` smallest dropped."""
        return self.eigenvalues[self.component_count:]


def laplacian_spectrum(
    g: Graph,
    kind: LaplacianKind | str = LaplacianKind.COMBINATORIAL,
    vectors: bool = False,
) -> LaplacianSpectrum:
    """Full dense eigendecomposition of the graph Laplacian, ascending.

    The number of zero eigenvalues is taken from the traversal-derived
    component count rather than from a numerical threshold.
    """
    if g.node_count == 0:
        raise GraphError("empty graph")
    kind = LaplacianKind(kind)
    lap = g.laplacian(kind)
    if vectors:
        vals, vecs = np.linalg.eigh(lap)
    else:
        vals, vecs = np.linalg.eigvalsh(lap), None
    return LaplacianSpectrum(vals, kind, connected_components(g), vecs)


def remove_node(g: Graph, v: int) -> tuple[Graph, dict[int, int]]:
    """Residual graph without ``v`` and the old-id -> new-id mapping."""
    if not 0 <= v < g.node_count:
        raise GraphError(f"node {v} out of range for {g.node_count} nodes")
    mapping = {u: (u if u < v else u - 1) for u in range(g.node_count) if u != v}
    edges = [(mapping[a], mapping[b]) for a, b in g.edges if a != v and b != v]
    return Graph.from_edges(g.node_count - 1, edges), mapping


def remove_link(g: Graph, e: tuple[int, int]) -> Graph:
    """Residual graph on the same node set without link ``e``."""
    target = _canonical(int(e[0]), int(e[1]))
    if not g.has_edge(*target):
        raise GraphError(f"edge {target} not in graph")
    return Graph.from_edges(g.node_count, (x for x in g.edges if x != target))


# Small named graphs used throughout tests and examples.

def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def star_graph(n: int) -> Graph:
    """Star on ``n`` nodes with centre 0."""
    return Graph.from_edges(n, ((0, i) for i in range(1, n)))


def empty_graph(n: int) -> Graph:
    return Graph.from_edges(n, ())


def disjoint_union(*graphs: Graph) -> Graph:
    edges = []
    offset = 0
    for h in graphs:
        edges.extend((u + offset, v + offset) for u, v in h.edges)
        offset += h.node_count
    return Graph.from_edges(offset, edges)
