"""Inductive attention GNN that scores nodes and links.

Each of the ``L`` embedding layers aggregates sampled 1-hop neighbours with
single-head additive attention and combines the result with the node's own
embeddings from the two previous layers::

    m_k      = Q^l h_k^{l-1}
    e_vk     = leaky_relu(a^l . [m_v || m_k])
    h_N(v)^l = sum_k softmax_k(e_vk) m_k
    h_v^l    = relu(W^l [h_v^{l-1} || h_v^{l-2} || h_N(v)^l])

with ``h^{-1} := h^0`` for the first layer.  A feed-forward regression head
maps the final embedding (or the Hadamard product of two endpoint
embeddings, for links) to an unbounded real score; only its last layer is
linear.

The forward pass records a tape of intermediates so that :func:`backward`
can return exact gradients for every parameter.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .metrics import RobustnessMetric
from .oracle import CriticalityTable, ElementKind


@dataclass(frozen=True)
class GnnHyperparams:
    embedding_layer_dims: tuple[int, ...] = (64, 32, 16)
    regression_layer_dims: tuple[int, ...] = (12, 8, 1)
    input_feature_dim: int = 8
    neighbor_sample_cap: int = 25
    kind: ElementKind = ElementKind.NODE
    raw_degree: bool = True
    leaky_slope: float = 0.2
    hops_per_layer: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "embedding_layer_dims", tuple(int(d) for d in self.embedding_layer_dims))
        object.__setattr__(self, "regression_layer_dims", tuple(int(d) for d in self.regression_layer_dims))
        object.__setattr__(self, "kind", ElementKind(self.kind))
        if not self.embedding_layer_dims or not self.regression_layer_dims:
            raise ValueError("need at least one embedding and one regression layer")
        if min(self.embedding_layer_dims + self.regression_layer_dims) < 1:
            raise ValueError("all layer widths must be >= 1")
        if self.regression_layer_dims[-1] != 1:
            raise ValueError("last regression layer must have width 1")
        if self.input_feature_dim < 2:
            raise ValueError("input_feature_dim must be >= 2")
        if self.neighbor_sample_cap < 1:
            raise ValueError("neighbor_sample_cap must be >= 1")
        if self.hops_per_layer != 1:
            raise ValueError("only one hop per layer is supported")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["embedding_layer_dims"] = list(self.embedding_layer_dims)
        d["regression_layer_dims"] = list(self.regression_layer_dims)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GnnHyperparams":
        return cls(**d)

    def parameter_shapes(self) -> dict[str, tuple[int, ...]]:
        """Name -> shape for every trainable tensor, in canonical order."""
        shapes: dict[str, tuple[int, ...]] = {}
        dims = (self.input_feature_dim,) + self.embedding_layer_dims
        for l in range(1, len(dims)):
            d_prev, d_prev2, d_out = dims[l - 1], dims[max(l - 2, 0)], dims[l]
            shapes[f"embed{l}.Q"] = (d_out, d_prev)
            shapes[f"embed{l}.a"] = (2 * d_out,)
            shapes[f"embed{l}.W"] = (d_out, d_prev + d_prev2 + d_out)
        widths = (self.embedding_layer_dims[-1],) + self.regression_layer_dims
        for m in range(1, len(widths)):
            shapes[f"regress{m}.W"] = (widths[m], widths[m - 1])
            shapes[f"regress{m}.b"] = (widths[m],)
        return shapes


@dataclass
class GnnModel:
    hyper: GnnHyperparams
    params: dict[str, np.ndarray]
    metric: RobustnessMetric = RobustnessMetric.EGR
    family: str = "unknown"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.metric = RobustnessMetric(self.metric)
        shapes = self.hyper.parameter_shapes()
        if set(shapes) != set(self.params):
            missing = sorted(set(shapes) - set(self.params))
            extra = sorted(set(self.params) - set(shapes))
            raise ValueError(f"parameter set mismatch: missing {missing}, unexpected {extra}")
        for name, shape in shapes.items():
            arr = np.asarray(self.params[name], dtype=float)
            if arr.shape != shape:
                raise ValueError(f"tensor {name}: shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"tensor {name}: non-finite values")
            self.params[name] = arr

    @property
    def kind(self) -> ElementKind:
        return self.hyper.kind

    @property
    def num_layers(self) -> int:
        return len(self.hyper.embedding_layer_dims)

    def copy(self) -> "GnnModel":
        return GnnModel(
            self.hyper,
            {k: v.copy() for k, v in self.params.items()},
            self.metric,
            self.family,
            dict(self.provenance),
        )


def init_model(
    hyper: GnnHyperparams,
    seed: int = 0,
    metric: RobustnessMetric | str = RobustnessMetric.EGR,
    family: str = "unknown",
) -> GnnModel:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in hyper.parameter_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
            continue
        if len(shape) == 1:
            fan_in, fan_out = shape[0] // 2, 1
        else:
            fan_out, fan_in = shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-limit, limit, size=shape)
    return GnnModel(hyper, params, RobustnessMetric(metric), family)


def init_features(g: Graph, dim: int, raw_degree: bool = False) -> np.ndarray:
    """Per-node input ``[degree, 1, ..., 1]`` of length ``dim``.

    The degree is divided by the maximum degree unless ``raw_degree``.
    """
    if dim < 2:
        raise ValueError("feature dimension must be >= 2")
    x = np.ones((g.node_count, dim))
    deg = g.degrees().astype(float)
    if not raw_degree:
        top = deg.max() if g.node_count else 0.0
        deg = deg / top if top > 0 else deg
    x[:, 0] = deg
    return x


def neighborhood(g: Graph, v: int, cap: int, seed: int = 0, layer: int = 0) -> list[int]:
    """1-hop neighbours of ``v``; a reproducible uniform sample of ``cap`` when larger."""
    nbrs = g.adjacency[v]
    if len(nbrs) <= cap:
        return list(nbrs)
    rng = np.random.default_rng([int(seed), int(v), int(layer)])
    picked = rng.choice(len(nbrs), size=cap, replace=False)
    return sorted(nbrs[i] for i in picked)


def neighborhood_arrays(g: Graph, cap: int, seed: int, layer: int) -> tuple[np.ndarray, np.ndarray]:
    """``(target, neighbour)`` message pairs for one layer, grouped by target."""
    if g.edge_count == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    deg = g.degrees()
    if deg.max() <= cap:
        e = g.edge_array()
        src = np.concatenate([e[:, 0], e[:, 1]])
        nbr = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((nbr, src))
        return src[order], nbr[order]
    srcs, nbrs = [], []
    for v in range(g.node_count):
        nb = neighborhood(g, v, cap, seed, layer)
        srcs.extend([v] * len(nb))
        nbrs.extend(nb)
    return np.asarray(srcs, dtype=np.int64), np.asarray(nbrs, dtype=np.int64)


def _leaky(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0, z, slope * z)


def _segment_softmax(e: np.ndarray, src: np.ndarray, n: int) -> np.ndarray:
    if len(e) == 0:
        return e.copy()
    emax = np.full(n, -np.inf)
    np.maximum.at(emax, src, e)
    ex = np.exp(e - emax[src])
    den = np.bincount(src, weights=ex, minlength=n)
    return ex / den[src]


def aggregate(h_nbrs: np.ndarray, h_self: np.ndarray, q: np.ndarray, a: np.ndarray, slope: float = 0.2) -> np.ndarray:
    """Attention-weighted sum of transformed neighbour embeddings for one node.

    Empty neighbourhoods give the zero vector.
    """
    d = q.shape[0]
    if len(h_nbrs) == 0:
        return np.zeros(d)
    m_self = q @ h_self
    m = np.asarray(h_nbrs) @ q.T
    logits = _leaky(m_self @ a[:d] + m @ a[d:], slope)
    w = np.exp(logits - logits.max())
    w /= w.sum()
    return w @ m


def combine(h_lm1: np.ndarray, h_lm2: np.ndarray, h_nbr: np.ndarray, w: np.ndarray) -> np.ndarray:
    c = np.concatenate([h_lm1, h_lm2, h_nbr])
    if w.shape[1] != c.shape[0]:
        raise ValueError(f"combination expects input width {w.shape[1]}, got {c.shape[0]}")
    return np.maximum(w @ c, 0.0)


@dataclass
class _LayerTape:
    hp: np.ndarray
    hp2: np.ndarray
    m: np.ndarray
    src: np.ndarray
    nbr: np.ndarray
    z: np.ndarray
    alpha: np.ndarray
    attn: sp.csr_matrix
    c: np.ndarray
    pre: np.ndarray


@dataclass
class Tape:
    """Forward intermediates needed by :func:`backward`."""

    n: int
    layers: list[_LayerTape]
    z: np.ndarray
    reg_inputs: list[np.ndarray] = field(default_factory=list)
    reg_pre: list[np.ndarray] = field(default_factory=list)
    link_ends: Optional[np.ndarray] = None


def _embed(g: Graph, model: GnnModel, seed: int, tape: Optional[Tape]) -> np.ndarray:
    hy = model.hyper
    p = model.params
    n = g.node_count
    h0 = init_features(g, hy.input_feature_dim, hy.raw_degree)
    hist = [h0, h0]  # h^{-1} := h^0
    for l in range(1, model.num_layers + 1):
        q, a, w = p[f"embed{l}.Q"], p[f"embed{l}.a"], p[f"embed{l}.W"]
        d = q.shape[0]
        hp, hp2 = hist[-1], hist[-2]
        src, nbr = neighborhood_arrays(g, hy.neighbor_sample_cap, seed, l)
        m = hp @ q.T
        z = (m @ a[:d])[src] + (m @ a[d:])[nbr]
        alpha = _segment_softmax(_leaky(z, hy.leaky_slope), src, n)
        attn = sp.csr_matrix((alpha, (src, nbr)), shape=(n, n))
        hn = attn @ m
        c = np.concatenate([hp, hp2, hn], axis=1)
        pre = c @ w.T
        h = np.maximum(pre, 0.0)
        if tape is not None:
            tape.layers.append(_LayerTape(hp, hp2, m, src, nbr, z, alpha, attn, c, pre))
        hist.append(h)
    return hist[-1]


def embed_all(g: Graph, model: GnnModel, seed: int = 0) -> np.ndarray:
    """Final embeddings ``z_v`` for every node, shape ``(N, d_L)``."""
    return _embed(g, model, seed, None)


def _regress(x: np.ndarray, model: GnnModel, tape: Optional[Tape]) -> np.ndarray:
    n_layers = len(model.hyper.regression_layer_dims)
    y = x
    for m in range(1, n_layers + 1):
        w, b = model.params[f"regress{m}.W"], model.params[f"regress{m}.b"]
        pre = y @ w.T + b
        if tape is not None:
            tape.reg_inputs.append(y)
            tape.reg_pre.append(pre)
        y = pre if m == n_layers else np.maximum(pre, 0.0)
    return y[:, 0]


def node_score(z_v: np.ndarray, model: GnnModel) -> float:
    z_v = np.asarray(z_v, dtype=float)
    expected = model.hyper.embedding_layer_dims[-1]
    if z_v.shape != (expected,):
        raise ValueError(f"embedding must have shape ({expected},), got {z_v.shape}")
    return float(_regress(z_v[None, :], model, None)[0])


def link_score(z_u: np.ndarray, z_v: np.ndarray, model: GnnModel) -> float:
    z_u, z_v = np.asarray(z_u, dtype=float), np.asarray(z_v, dtype=float)
    if z_u.shape != z_v.shape:
        raise ValueError("endpoint embeddings differ in shape")
    return node_score(z_u * z_v, model)


def forward(g: Graph, model: GnnModel, seed: int = 0, record: bool = False) -> tuple[np.ndarray, Optional[Tape]]:
    """Scores for every element of the model's kind, plus the tape if ``record``."""
    tape = Tape(g.node_count, [], np.zeros(0)) if record else None
    z = _embed(g, model, seed, tape)
    if model.kind is ElementKind.NODE:
        x = z
    else:
        ends = g.edge_array()
        x = z[ends[:, 0]] * z[ends[:, 1]]
        if tape is not None:
            tape.link_ends = ends
    if tape is not None:
        tape.z = z
    return _regress(x, model, tape), tape


def backward(tape: Tape, dscores: np.ndarray, model: GnnModel) -> dict[str, np.ndarray]:
    """Gradient of ``sum(dscores * scores)`` with respect to every parameter.

    Relu and leaky-relu derivatives at exactly 0 are taken as the left limit.
    """
    p = model.params
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    n_reg = len(model.hyper.regression_layer_dims)
    dy = np.asarray(dscores, dtype=float)[:, None]
    for m in range(n_reg, 0, -1):
        pre = tape.reg_pre[m - 1]
        dpre = dy if m == n_reg else dy * (pre > 0)
        grads[f"regress{m}.W"] = dpre.T @ tape.reg_inputs[m - 1]
        grads[f"regress{m}.b"] = dpre.sum(axis=0)
        dy = dpre @ p[f"regress{m}.W"]

    z = tape.z
    if tape.link_ends is None:
        dz = dy
    else:
        u, v = tape.link_ends[:, 0], tape.link_ends[:, 1]
        n = tape.n
        inc_u = sp.csr_matrix((np.ones(len(u)), (u, np.arange(len(u)))), shape=(n, len(u)))
        inc_v = sp.csr_matrix((np.ones(len(v)), (v, np.arange(len(v)))), shape=(n, len(v)))
        dz = inc_u @ (dy * z[v]) + inc_v @ (dy * z[u])

    slope = model.hyper.leaky_slope
    n_layers = len(tape.layers)
    dh = {n_layers: dz}
    for l in range(n_layers, 0, -1):
        t = tape.layers[l - 1]
        q, a, w = p[f"embed{l}.Q"], p[f"embed{l}.a"], p[f"embed{l}.W"]
        d = q.shape[0]
        dpre = dh.pop(l) * (t.pre > 0)
        grads[f"embed{l}.W"] = dpre.T @ t.c
        dc = dpre @ w
        d1, d2 = t.hp.shape[1], t.hp2.shape[1]
        dhp = dc[:, :d1]
        dhp2 = dc[:, d1:d1 + d2]
        dhn = dc[:, d1 + d2:]
        dm = t.attn.T @ dhn
        if len(t.src):
            dalpha = np.einsum("ij,ij->i", dhn[t.src], t.m[t.nbr])
            seg = np.bincount(t.src, weights=t.alpha * dalpha, minlength=tape.n)
            de = t.alpha * (dalpha - seg[t.src])
            dzl = de * np.where(t.z > 0, 1.0, slope)
            ds_self = np.bincount(t.src, weights=dzl, minlength=tape.n)
            ds_nbr = np.bincount(t.nbr, weights=dzl, minlength=tape.n)
            grads[f"embed{l}.a"] = np.concatenate([t.m.T @ ds_self, t.m.T @ ds_nbr])
            dm = dm + np.outer(ds_self, a[:d]) + np.outer(ds_nbr, a[d:])
        grads[f"embed{l}.Q"] = dm.T @ t.hp
        dhp = dhp + dm @ q
        # Layer inputs h^{l-1} and h^{l-2}; index 0 is the fixed feature matrix.
        if l - 1 >= 1:
            dh[l - 1] = dh.get(l - 1, 0) + dhp
        if l - 2 >= 1:
            dh[l - 2] = dh.get(l - 2, 0) + dhp2
    return grads


def predict_scores(g: Graph, model: GnnModel, seed: int = 0) -> np.ndarray:
    scores, _ = forward(g, model, seed)
    return scores


def predict_table(
    g: Graph, model: GnnModel, kind: ElementKind | str | None = None, seed: int = 0
) -> CriticalityTable:
    """Model-ranked criticality table; ``kind`` must match the model's."""
    if kind is not None and ElementKind(kind) is not model.kind:
        raise ValueError(f"model scores {model.kind.value}s, not {ElementKind(kind).value}s")
    scores = predict_scores(g, model, seed)
    return CriticalityTable(model.kind, model.metric, float("nan"), np.arange(len(scores)), scores)
