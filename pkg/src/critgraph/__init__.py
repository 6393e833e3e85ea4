"""Critical node/link identification by spectral robustness.

An exact oracle scores every node or link by how much its removal changes
effective graph resistance or the weighted spectrum; an inductive attention
GNN trained with a pairwise ranking loss reproduces that ranking quickly on
unseen graphs.
"""

from .corpus import TrainingCorpus
from .evaluate import EvalReport, benchmark, pairwise_accuracy, top_n_accuracy
from .generators import Family, GeneratorSpec, generate, make_corpus
from .graph import Graph, GraphError
from .metrics import RobustnessMetric, effective_graph_resistance, metric_value, weighted_spectrum
from .model import GnnHyperparams, GnnModel, embed_all, init_model, predict_table
from .oracle import CriticalityTable, ElementKind, score_all, score_subset, top_percent
from .train import TrainConfig, TrainingDiverged, fine_tune, train

__version__ = "0.1.0"

__all__ = [
    "CriticalityTable",
    "ElementKind",
    "EvalReport",
    "Family",
    "GeneratorSpec",
    "GnnHyperparams",
    "GnnModel",
    "Graph",
    "GraphError",
    "RobustnessMetric",
    "TrainConfig",
    "TrainingCorpus",
    "TrainingDiverged",
    "benchmark",
    "effective_graph_resistance",
    "embed_all",
    "fine_tune",
    "generate",
    "init_model",
    "make_corpus",
    "metric_value",
    "pairwise_accuracy",
    "predict_table",
    "score_all",
    "score_subset",
    "top_n_accuracy",
    "top_percent",
    "train",
    "weighted_spectrum",
]
