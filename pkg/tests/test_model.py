import math

import numpy as np
import pytest

from critgraph.graph import Graph, complete_graph, cycle_graph, disjoint_union, empty_graph, path_graph, star_graph
from critgraph.model import (
    GnnHyperparams,
    GnnModel,
    aggregate,
    combine,
    embed_all,
    init_features,
    init_model,
    link_score,
    neighborhood,
    node_score,
    predict_scores,
    predict_table,
)

from conftest import random_graph

SMALL = GnnHyperparams(embedding_layer_dims=(5, 4, 3), regression_layer_dims=(3, 2, 1), input_feature_dim=4)


# ---- scalar-loop reference -------------------------------------------------

def _matvec(w, x):
    return [sum(w[r][c] * x[c] for c in range(len(x))) for r in range(len(w))]


def naive_embed(g, model):
    p = {k: v.tolist() for k, v in model.params.items()}
    hy = model.hyper
    deg = [len(a) for a in g.adjacency]
    top = max(deg) if deg else 0
    h0 = []
    for v in range(g.node_count):
        d = deg[v] if hy.raw_degree or top == 0 else deg[v] / top
        h0.append([d] + [1.0] * (hy.input_feature_dim - 1))
    prev2, prev = h0, h0
    for l in range(1, len(hy.embedding_layer_dims) + 1):
        q, a, w = p[f"embed{l}.Q"], p[f"embed{l}.a"], p[f"embed{l}.W"]
        dim = len(q)
        m = [_matvec(q, prev[v]) for v in range(g.node_count)]
        out = []
        for v in range(g.node_count):
            nbrs = g.adjacency[v]
            agg = [0.0] * dim
            if nbrs:
                logits = []
                for k in nbrs:
                    s = sum(a[i] * m[v][i] for i in range(dim)) + sum(a[dim + i] * m[k][i] for i in range(dim))
                    logits.append(s if s > 0 else hy.leaky_slope * s)
                top_logit = max(logits)
                ws = [math.exp(x - top_logit) for x in logits]
                total = sum(ws)
                for wk, k in zip(ws, nbrs):
                    for i in range(dim):
                        agg[i] += wk / total * m[k][i]
            cat = prev[v] + prev2[v] + agg
            out.append([max(0.0, x) for x in _matvec(w, cat)])
        prev2, prev = prev, out
    return prev


def naive_regress(x, model):
    n = len(model.hyper.regression_layer_dims)
    y = list(x)
    for j in range(1, n + 1):
        w = model.params[f"regress{j}.W"].tolist()
        b = model.params[f"regress{j}.b"].tolist()
        y = [s + bb for s, bb in zip(_matvec(w, y), b)]
        if j < n:
            y = [max(0.0, s) for s in y]
    return y[0]


# ---- features and neighbourhoods -----------------------------------------

def test_init_features_examples():
    s4 = star_graph(4)
    x = init_features(s4, 4)
    np.testing.assert_allclose(x[0], [1, 1, 1, 1])
    np.testing.assert_allclose(x[1], [1 / 3, 1, 1, 1])
    np.testing.assert_allclose(init_features(complete_graph(3), 3)[2], [1, 1, 1])
    np.testing.assert_allclose(init_features(s4, 4, raw_degree=True)[0], [3, 1, 1, 1])
    with pytest.raises(ValueError):
        init_features(s4, 1)


def test_neighborhood_examples():
    assert neighborhood(complete_graph(3), 0, 25) == [1, 2]
    hub = neighborhood(star_graph(101), 0, 25, seed=3, layer=1)
    assert len(hub) == 25 == len(set(hub)) and 0 not in hub
    assert hub == neighborhood(star_graph(101), 0, 25, seed=3, layer=1)
    assert hub != neighborhood(star_graph(101), 0, 25, seed=3, layer=2)
    assert neighborhood(disjoint_union(complete_graph(2), empty_graph(1)), 2, 25) == []


# ---- aggregation and combination -----------------------------------------

def test_aggregate_examples(rng):
    q = rng.normal(size=(3, 4))
    a = rng.normal(size=6)
    h_self = rng.normal(size=4)
    h1 = rng.normal(size=4)
    np.testing.assert_allclose(aggregate([h1], h_self, q, a), q @ h1)
    np.testing.assert_allclose(aggregate([h1, h1, h1], h_self, q, a), q @ h1)
    h2 = rng.normal(size=4)
    zero_a = np.zeros(6)
    np.testing.assert_allclose(aggregate([h1, h2], h_self, q, zero_a), 0.5 * (q @ h1 + q @ h2))
    np.testing.assert_array_equal(aggregate([], h_self, q, a), np.zeros(3))


def test_combine_examples(rng):
    w = rng.normal(size=(4, 9))
    np.testing.assert_array_equal(combine(np.zeros(3), np.zeros(3), np.zeros(3), w), np.zeros(4))
    sel = np.zeros((3, 9))
    sel[0, 0] = sel[1, 4] = sel[2, 8] = 1.0
    a, b, c = np.array([1.0, 2, 3]), np.array([4.0, 5, 6]), np.array([7.0, 8, 9])
    np.testing.assert_array_equal(combine(a, b, c, sel), [1.0, 5.0, 9.0])
    x = rng.normal(size=9)
    expected = [max(0.0, sum(w[r, k] * x[k] for k in range(9))) for r in range(4)]
    np.testing.assert_allclose(combine(x[:3], x[3:6], x[6:], w), expected, atol=1e-12)
    with pytest.raises(ValueError):
        combine(a, b, c[:2], w)


# ---- full forward ----------------------------------------------------------

def test_forward_matches_scalar_loop(rng):
    for trial in range(20):
        g = random_graph(int(rng.integers(2, 13)), 0.35, rng)
        for raw in (True, False):
            hy = GnnHyperparams(**{**SMALL.to_dict(), "raw_degree": raw})
            model = init_model(hy, seed=trial)
            for name in model.params:
                if name.endswith(".b"):
                    model.params[name] = rng.normal(size=model.params[name].shape)
            z = embed_all(g, model)
            np.testing.assert_allclose(z, naive_embed(g, model), atol=1e-9, rtol=0)
            scores = predict_scores(g, model)
            assert np.all(np.isfinite(scores))
            for v in range(g.node_count):
                assert abs(scores[v] - naive_regress(z[v], model)) <= 1e-9


def test_link_scores_match_scalar_loop(rng):
    hy = GnnHyperparams(**{**SMALL.to_dict(), "kind": "link"})
    for trial in range(5):
        g = random_graph(10, 0.4, rng)
        model = init_model(hy, seed=trial)
        z = naive_embed(g, model)
        scores = predict_scores(g, model)
        for lid, (u, v) in enumerate(g.edges):
            had = [a * b for a, b in zip(z[u], z[v])]
            assert abs(scores[lid] - naive_regress(had, model)) <= 1e-9


def test_two_node_path_hand_unrolled():
    hy = GnnHyperparams(embedding_layer_dims=(2, 2), regression_layer_dims=(1,), input_feature_dim=2)
    model = init_model(hy, seed=4)
    p = model.params
    x = np.array([1.0, 1.0])  # both endpoints: degree 1 (raw), then a one
    # With one neighbour the attention weight is 1: h_N = Q h_nbr, and by symmetry h_nbr = h_self.
    h1 = np.maximum(p["embed1.W"] @ np.concatenate([x, x, p["embed1.Q"] @ x]), 0)
    h2 = np.maximum(p["embed2.W"] @ np.concatenate([h1, x, p["embed2.Q"] @ h1]), 0)
    z = embed_all(path_graph(2), model)
    np.testing.assert_allclose(z[0], h2, atol=1e-9)
    np.testing.assert_allclose(z[1], h2, atol=1e-9)


def test_regular_graph_gives_identical_embeddings():
    model = init_model(GnnHyperparams(), seed=2)
    z = embed_all(cycle_graph(5), model)
    assert np.max(np.abs(z - z[0])) <= 1e-9


def test_permutation_equivariance(rng):
    model = init_model(GnnHyperparams(), seed=9)
    for _ in range(5):
        g = random_graph(15, 0.3, rng)
        perm = rng.permutation(15)
        z = embed_all(g, model)
        zp = embed_all(g.relabel(perm), model)
        np.testing.assert_allclose(zp[perm], z, atol=1e-7, rtol=0)


def test_isolated_nodes_stay_finite():
    model = init_model(GnnHyperparams(), seed=1)
    g = disjoint_union(path_graph(3), empty_graph(2))
    z = embed_all(g, model)
    assert np.all(np.isfinite(z))
    assert np.all(np.isfinite(predict_scores(g, model)))


# ---- regression head and link embedding ----------------------------------

def test_node_score_examples():
    hy = GnnHyperparams(embedding_layer_dims=(1,), regression_layer_dims=(1, 1), input_feature_dim=2)
    model = init_model(hy)
    for k in model.params:
        model.params[k] = np.zeros_like(model.params[k])
    assert node_score(np.zeros(1), model) == 0.0
    model.params["regress1.W"] = np.array([[1.0]])
    model.params["regress1.b"] = np.array([0.0])
    model.params["regress2.W"] = np.array([[2.0]])
    model.params["regress2.b"] = np.array([1.0])
    assert node_score(np.array([3.0]), model) == 7.0
    # final layer is linear: negative outputs survive
    assert node_score(np.array([-3.0]), model) == 1.0
    model.params["regress2.b"] = np.array([-5.0])
    assert node_score(np.array([1.0]), model) == -3.0
    with pytest.raises(ValueError):
        node_score(np.zeros(2), model)


def test_link_score_properties(rng):
    model = init_model(GnnHyperparams(kind="link"), seed=3)
    zu, zv = rng.random(16), rng.random(16)
    assert link_score(zu, zv, model) == link_score(zv, zu, model)
    assert link_score(np.zeros(16), zv, model) == node_score(np.zeros(16), model)
    assert node_score(zu, model) == node_score(zu.copy(), model)
    expected = naive_regress([a * b for a, b in zip(zu, zv)], model)
    assert abs(link_score(zu, zv, model) - expected) <= 1e-12
    with pytest.raises(ValueError):
        link_score(zu, zv[:5], model)


def test_model_validation():
    model = init_model(SMALL)
    bad = dict(model.params)
    bad["embed1.W"] = np.zeros((2, 2))
    with pytest.raises(ValueError, match="embed1.W"):
        GnnModel(SMALL, bad)
    missing = dict(model.params)
    del missing["regress1.b"]
    with pytest.raises(ValueError, match="regress1.b"):
        GnnModel(SMALL, missing)
    with pytest.raises(ValueError):
        GnnHyperparams(regression_layer_dims=(4, 2))


def test_predict_table_kind_check():
    model = init_model(GnnHyperparams(kind="link"))
    with pytest.raises(ValueError):
        predict_table(cycle_graph(5), model, kind="node")
    t = predict_table(cycle_graph(5), model, kind="link")
    assert len(t) == 5 and sorted(t.ranks.tolist()) == [1, 2, 3, 4, 5]
