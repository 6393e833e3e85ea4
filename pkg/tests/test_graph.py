import numpy as np
import pytest

from critgraph.graph import (
    Graph,
    GraphError,
    complete_graph,
    connected_components,
    disjoint_union,
    empty_graph,
    laplacian_spectrum,
    path_graph,
    remove_link,
    remove_node,
    star_graph,
)

from conftest import random_graph


def test_from_edges_invariants(rng):
    g = random_graph(30, 0.2, rng)
    assert g.degrees().sum() == 2 * g.edge_count
    for u, v in g.edges:
        assert u < v
        assert v in g.adjacency[u] and u in g.adjacency[v]
    for v in range(g.node_count):
        assert list(g.adjacency[v]) == sorted(g.adjacency[v])
        assert g.degree(v) == len(g.adjacency[v])


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 5)]])
def test_from_edges_rejects_non_simple(edges):
    with pytest.raises(GraphError):
        Graph.from_edges(3, edges)


def test_connected_components_examples(k3, s4):
    assert connected_components(k3) == 1
    assert connected_components(disjoint_union(complete_graph(2), complete_graph(2))) == 2
    center_removed, _ = remove_node(s4, 0)
    assert connected_components(center_removed) == 3
    assert connected_components(empty_graph(0)) == 0


@pytest.mark.parametrize(
    "graph, expected",
    [
        (complete_graph(2), [0.0, 2.0]),
        (complete_graph(3), [0.0, 3.0, 3.0]),
        (path_graph(3), [0.0, 1.0, 3.0]),
    ],
)
def test_combinatorial_spectrum_by_hand(graph, expected):
    spec = laplacian_spectrum(graph, "combinatorial")
    np.testing.assert_allclose(spec.eigenvalues, expected, atol=1e-12)
    assert spec.component_count == 1


def test_normalized_spectrum_isolated_nodes():
    g = disjoint_union(complete_graph(2), empty_graph(2))
    spec = laplacian_spectrum(g, "normalized")
    np.testing.assert_allclose(spec.eigenvalues, [0, 0, 0, 2], atol=1e-12)
    assert spec.component_count == 3
    np.testing.assert_allclose(spec.nonzero, [2.0], atol=1e-12)


def test_spectrum_empty_graph_rejected():
    with pytest.raises(GraphError, match="empty graph"):
        laplacian_spectrum(empty_graph(0))


def test_trace_identity(rng):
    for n in (5, 40, 120, 200):
        g = random_graph(n, 0.1, rng)
        vals = laplacian_spectrum(g).eigenvalues
        assert abs(vals.sum() - g.degrees().sum()) <= 1e-8 * max(1, g.degrees().sum())


def test_zero_multiplicity_matches_components(rng):
    for trial in range(100):
        parts = int(rng.integers(1, 5))
        comps = []
        for _ in range(parts):
            size = int(rng.integers(1, 8))
            # spanning path keeps each planted part connected
            extra = random_graph(size, 0.4, rng).edges
            comps.append(Graph.from_edges(size, set(extra) | {(i, i + 1) for i in range(size - 1)}))
        g = disjoint_union(*comps)
        spec = laplacian_spectrum(g)
        assert spec.component_count == parts
        assert np.all(np.abs(spec.eigenvalues[:parts]) < 1e-9)
        if g.node_count > parts:
            assert spec.eigenvalues[parts] > 1e-9
        norm = laplacian_spectrum(g, "normalized").eigenvalues
        assert norm.min() > -1e-9 and norm.max() < 2 + 1e-9


def test_eigen_residuals(rng):
    g = random_graph(60, 0.15, rng)
    for kind in ("combinatorial", "normalized"):
        spec = laplacian_spectrum(g, kind, vectors=True)
        lap = g.laplacian(kind)
        for lam, x in zip(spec.eigenvalues, spec.eigenvectors.T):
            assert np.max(np.abs(lap @ x - lam * x)) <= 1e-7 * max(1.0, lam)
        assert abs(spec.eigenvalues[0]) < 1e-9


def test_remove_node_examples(s4, k3, p3):
    g, mapping = remove_node(s4, 0)
    assert g.node_count == 3 and g.edge_count == 0
    assert mapping == {1: 0, 2: 1, 3: 2}
    assert remove_node(k3, 1)[0] == complete_graph(2)
    g, _ = remove_node(p3, 1)
    assert g.node_count == 2 and g.edge_count == 0
    assert s4.edge_count == 3  # input untouched
    with pytest.raises(GraphError):
        remove_node(k3, 3)


def test_remove_link_examples(k3, k2):
    assert remove_link(k3, (0, 2)) == Graph.from_edges(3, [(0, 1), (1, 2)])
    g = remove_link(k2, (1, 0))
    assert g.node_count == 2 and g.edge_count == 0
    g = remove_link(path_graph(4), (1, 2))
    assert g == disjoint_union(complete_graph(2), complete_graph(2))
    with pytest.raises(GraphError):
        remove_link(path_graph(3), (0, 2))


def test_remove_node_commutes(rng):
    for _ in range(20):
        g = random_graph(15, 0.3, rng)
        a, b = sorted(rng.choice(15, 2, replace=False).tolist())
        # removing a first shifts b down by one
        first, _ = remove_node(g, a)
        ab, _ = remove_node(first, b - 1)
        second, _ = remove_node(g, b)
        ba, _ = remove_node(second, a)
        assert ab.canonical_edge_set() == ba.canonical_edge_set()


def test_relabel_roundtrip(rng):
    g = random_graph(12, 0.3, rng)
    perm = rng.permutation(12)
    inv = np.argsort(perm)
    assert g.relabel(perm).relabel(inv) == g
    assert star_graph(5).relabel([1, 0, 2, 3, 4]).degree(1) == 4
