"""Pairwise learning-to-rank training of :class:`GnnModel` with Adam."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .corpus import TrainingCorpus
from .evaluate import ordering_agreement, sample_pairs
from .model import GnnHyperparams, GnnModel, backward, forward, init_model
from .oracle import rank_key

log = logging.getLogger(__name__)

CLAMP = 1e-12
LABEL_SCALINGS = ("minmax", "rank")


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite in epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    epochs: int = 60
    pairs_per_element: int = 20
    batches_per_graph: int = 4
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    early_stop_patience: int = 10
    validation_fraction: float = 0.1
    top_decile_share: float = 0.25
    validation_pairs: int = 4000
    label_scaling: str = "minmax"

    def __post_init__(self) -> None:
        if self.label_scaling not in LABEL_SCALINGS:
            raise ValueError(f"label_scaling must be one of {LABEL_SCALINGS}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0 or self.pairs_per_element < 1 or self.batches_per_graph < 1:
            raise ValueError("learning rate, pair count and batch count must be positive")
        if self.early_stop_patience < 0:
            raise ValueError("patience must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def ranking_loss(y_i, y_j, r_i, r_j):
    """Cross-entropy between ``sigmoid(r_i - r_j)`` and ``sigmoid(y_i - y_j)``.

    Probabilities are clamped to ``[1e-12, 1 - 1e-12]`` so the loss stays
    finite.  Accepts scalars or arrays.
    """
    target = _sigmoid(np.subtract(r_i, r_j))
    s = np.clip(_sigmoid(np.subtract(y_i, y_j)), CLAMP, 1.0 - CLAMP)
    out = -target * np.log(s) - (1.0 - target) * np.log(1.0 - s)
    return float(out) if np.ndim(out) == 0 else out


def ranking_loss_grad(y_i, y_j, r_i, r_j):
    """Derivative of :func:`ranking_loss` with respect to ``y_i - y_j``."""
    target = _sigmoid(np.subtract(r_i, r_j))
    raw = _sigmoid(np.subtract(y_i, y_j))
    s = np.clip(raw, CLAMP, 1.0 - CLAMP)
    return np.where(raw == s, s - target, 0.0)


def normalized_labels(scores: np.ndarray) -> np.ndarray:
    """Min-max scale finite oracle scores into [0, 1]; ``inf`` maps to 1.0.

    Only the ordering matters for ranking, and the scaling keeps the label
    sigmoid out of saturation whatever the graph size.
    """
    scores = np.asarray(scores, dtype=float)
    out = np.ones_like(scores)
    finite = np.isfinite(scores)
    if finite.any():
        lo, hi = scores[finite].min(), scores[finite].max()
        out[finite] = (scores[finite] - lo) / (hi - lo) if hi > lo else 0.0
    return out


def rank_labels(scores: np.ndarray) -> np.ndarray:
    """Scores replaced by their normalized rank position in [0, 1] (ties share the mean rank).

    Spreads the many near-zero scores that min-max scaling squashes together.
    """
    key = rank_key(scores)
    _, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
    # mean 0-based position of each tie group, from cumulative group sizes
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pos = (start + (counts - 1) / 2.0)[inverse]
    return pos / max(1.0, len(key) - 1.0)


@dataclass
class RankPair:
    graph: int
    i: int
    j: int
    label: float


@dataclass
class _Prepared:
    """Per-graph training view: labelled element ids and their labels."""

    ids: np.ndarray
    labels: np.ndarray
    top: np.ndarray
    truth_key: np.ndarray


def _prepare(corpus: TrainingCorpus, scaling: str = "minmax") -> list[_Prepared]:
    scale = rank_labels if scaling == "rank" else normalized_labels
    out = []
    for _, table in corpus.pairs:
        labels = scale(table.scores)
        k = max(2, int(np.ceil(0.1 * len(table))))
        top = np.argsort(table.ranks, kind="stable")[:k]
        out.append(_Prepared(table.ids, labels, top, rank_key(table.scores)))
    return out


def _draw_pairs(prep: _Prepared, count: int, share: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Local index pairs; ``share`` of them inside the top decile."""
    n = len(prep.ids)
    n_top = int(round(count * share)) if len(prep.top) >= 2 else 0
    i = rng.integers(0, n, size=count - n_top)
    j = (i + rng.integers(1, n, size=count - n_top)) % n
    if n_top:
        t = len(prep.top)
        a = rng.integers(0, t, size=n_top)
        b = (a + rng.integers(1, t, size=n_top)) % t
        i = np.concatenate([i, prep.top[a]])
        j = np.concatenate([j, prep.top[b]])
    return i, j


def sample_rank_pairs(
    corpus: TrainingCorpus, graph: int, count: int, seed: int, share: float = 0.25, scaling: str = "minmax"
) -> list[RankPair]:
    """Training pairs for one graph, labelled with ``sigmoid(r_i - r_j)`` on normalized scores."""
    prep = _prepare(corpus.subset([graph]), scaling)[0]
    i, j = _draw_pairs(prep, count, share, np.random.default_rng(seed))
    lab = _sigmoid(prep.labels[i] - prep.labels[j])
    return [RankPair(graph, int(prep.ids[a]), int(prep.ids[b]), float(l)) for a, b, l in zip(i, j, lab)]


def _graph_grad(model, g, ids_i, ids_j, r_i, r_j, nbr_seed):
    """Summed loss and gradients over pairs of one graph (element ids)."""
    scores, tape = forward(g, model, nbr_seed, record=True)
    y_i, y_j = scores[ids_i], scores[ids_j]
    loss = ranking_loss(y_i, y_j, r_i, r_j)
    dyhat = ranking_loss_grad(y_i, y_j, r_i, r_j)
    n = len(scores)
    dscores = np.bincount(ids_i, weights=dyhat, minlength=n) - np.bincount(ids_j, weights=dyhat, minlength=n)
    return float(np.sum(loss)), backward(tape, dscores, model)


def gradients(
    model: GnnModel, batch: list[RankPair], corpus: TrainingCorpus, seed: int = 0
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean ranking loss over ``batch`` and its exact parameter gradients.

    Pair labels are interpreted through the graph's normalized scores:
    ``r_i - r_j`` is recovered as ``logit(label)``.
    """
    total = {k: np.zeros_like(v) for k, v in model.params.items()}
    loss = 0.0
    by_graph: dict[int, list[RankPair]] = {}
    for p in batch:
        by_graph.setdefault(p.graph, []).append(p)
    for gi in sorted(by_graph):
        pairs = by_graph[gi]
        g = corpus.pairs[gi][0]
        ids_i = np.array([p.i for p in pairs])
        ids_j = np.array([p.j for p in pairs])
        lab = np.clip([p.label for p in pairs], CLAMP, 1 - CLAMP)
        r_diff = np.log(lab) - np.log1p(-lab)
        l, grads = _graph_grad(model, g, ids_i, ids_j, r_diff, np.zeros_like(r_diff), seed)
        loss += l
        for k in total:
            total[k] += grads[k]
    scale = 1.0 / max(1, len(batch))
    return loss * scale, {k: v * scale for k, v in total.items()}


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k in sorted(params):
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def validation_split(n_graphs: int, fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Whole-graph split ``(train, validation)``.

    A single-graph corpus validates on its own (held-out-pair) ordering.
    """
    if n_graphs == 1:
        return [0], [0]
    n_val = min(n_graphs - 1, max(1, int(round(fraction * n_graphs))))
    order = np.random.default_rng([seed, 0x5A11]).permutation(n_graphs)
    val = sorted(order[:n_val].tolist())
    return sorted(order[n_val:].tolist()), val


def _validation_score(model: GnnModel, corpus: TrainingCorpus, prepared, val_idx, cfg: TrainConfig) -> float:
    accs = []
    for gi in val_idx:
        prep = prepared[gi]
        if len(prep.ids) < 2:
            continue
        scores, _ = forward(corpus.pairs[gi][0], model, 0)
        i, j = sample_pairs(len(prep.ids), cfg.validation_pairs, cfg.seed + 7919 * gi)
        accs.append(ordering_agreement(rank_key(scores[prep.ids]), prep.truth_key, i, j))
    return float(np.mean(accs)) if accs else float("nan")


def training_accuracy(model: GnnModel, corpus: TrainingCorpus, pairs: int = 4000, seed: int = 0) -> float:
    """Mean pairwise ordering accuracy of ``model`` across the corpus graphs."""
    prepared = _prepare(corpus)
    cfg = TrainConfig(validation_pairs=pairs, seed=seed)
    return _validation_score(model, corpus, prepared, range(len(corpus)), cfg)


def _fit(model: GnnModel, corpus: TrainingCorpus, cfg: TrainConfig) -> tuple[GnnModel, list[dict]]:
    if len(corpus) == 0:
        raise ValueError("empty training corpus")
    if corpus.kind is not model.kind:
        raise ValueError(f"corpus holds {corpus.kind.value} labels but the model scores {model.kind.value}s")
    prepared = _prepare(corpus, cfg.label_scaling)
    train_idx, val_idx = validation_split(len(corpus), cfg.validation_fraction, cfg.seed)
    rng = np.random.default_rng([cfg.seed, 0x7EA1])
    opt = Adam(model.params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    best_score = _validation_score(model, corpus, prepared, val_idx, cfg)
    best_params = {k: v.copy() for k, v in model.params.items()}
    history: list[dict] = [{"epoch": 0, "loss": None, "val_pairwise_accuracy": best_score}]
    since_best = 0
    for epoch in range(1, cfg.epochs + 1):
        if since_best >= cfg.early_stop_patience:
            break
        losses, counts = 0.0, 0
        for gi in rng.permutation(train_idx):
            prep = prepared[gi]
            if len(prep.ids) < 2:
                continue
            g = corpus.pairs[gi][0]
            count = cfg.pairs_per_element * len(prep.ids)
            i, j = _draw_pairs(prep, count, cfg.top_decile_share, rng)
            for chunk in np.array_split(np.arange(count), cfg.batches_per_graph):
                if len(chunk) == 0:
                    continue
                ci, cj = i[chunk], j[chunk]
                nbr_seed = int(rng.integers(2**31))
                loss, grads = _graph_grad(
                    model, g, prep.ids[ci], prep.ids[cj], prep.labels[ci], prep.labels[cj], nbr_seed
                )
                if not np.isfinite(loss) or not all(np.all(np.isfinite(v)) for v in grads.values()):
                    raise TrainingDiverged(epoch)
                opt.step(model.params, {k: v / len(chunk) for k, v in grads.items()})
                losses += loss
                counts += len(chunk)
        mean_loss = losses / max(1, counts)
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(epoch)
        score = _validation_score(model, corpus, prepared, val_idx, cfg)
        history.append({"epoch": epoch, "loss": mean_loss, "val_pairwise_accuracy": score})
        log.info("epoch %d loss %.6f val %.4f", epoch, mean_loss, score)
        if score > best_score:
            best_score = score
            best_params = {k: v.copy() for k, v in model.params.items()}
            since_best = 0
        else:
            since_best += 1
    model.params = best_params
    return model, history


def train(
    corpus: TrainingCorpus, hyper: GnnHyperparams, cfg: TrainConfig
) -> tuple[GnnModel, list[dict]]:
    """Fit a fresh model; returns the best-on-validation model and the epoch log.

    Training stops after ``early_stop_patience`` consecutive epochs without
    a validation improvement; the initial model's score is the starting
    baseline, so a patience of 0 performs no update.
    """
    if hyper.kind is not corpus.kind:
        raise ValueError("hyperparameters and corpus disagree on element kind")
    model = init_model(hyper, cfg.seed, corpus.metric, corpus.family)
    model, history = _fit(model, corpus, cfg)
    model.provenance = {"training_seed": cfg.seed, "corpus_digest": corpus.digest()}
    return model, history


def fine_tune(base: GnnModel, corpus: TrainingCorpus, cfg: TrainConfig, hyper: Optional[GnnHyperparams] = None):
    """Continue training ``base`` on ``corpus``; the base model is left untouched."""
    if hyper is not None and hyper.parameter_shapes() != base.hyper.parameter_shapes():
        raise ValueError("base model shapes do not match the requested hyperparameters")
    model = base.copy()
    model.metric = corpus.metric
    model, history = _fit(model, corpus, cfg)
    model.provenance = dict(base.provenance)
    model.provenance.update({"fine_tune_seed": cfg.seed, "fine_tune_corpus_digest": corpus.digest()})
    return model, history
