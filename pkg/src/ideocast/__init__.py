"""Topic-aware ideological cascade simulation and embedding inference.

Simulates how items with topic mixtures propagate over a follower graph as
a function of per-node interests and per-topic polarities, and recovers
those embeddings from observed cascades by stochastic gradient ascent on an
approximate likelihood.
"""

from .cascades import (
    Activation,
    ActivationLog,
    CascadeExposures,
    DuplicateActivationError,
    compute_exposures,
)
from .evaluation import (
    EvaluationReport,
    FoldMetrics,
    MetricError,
    ScoredPair,
    SplitPlan,
    auc_roc,
    average_precision,
    build_test_pairs,
    evaluate,
    roc_points,
    score_pairs,
    split_items,
)
from .generator import (
    GenConfig,
    GraphSpec,
    draw_embeddings,
    draw_item_topics,
    generate_dataset,
    simulate_cascade,
)
from .graph import (
    DirectedGraph,
    GraphError,
    barabasi_albert_graph,
    build_graph,
    complete_graph,
    in_neighbors,
)
from .model import (
    EmbeddingTable,
    ExposurePrior,
    ItemTopics,
    PROB_EPS,
    UNIFORM_PRIOR,
    alignment_prob,
    approx_cascade_loglik,
    batch_pair_probs,
    exact_cascade_loglik,
    mixture_activation_prob,
    pair_activation_prob,
)
from .trainer import (
    TrainConfig,
    TrainExample,
    TrainingTrace,
    build_examples,
    example_gradient,
    example_prob,
    examples_loglik,
    fit,
)

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "ActivationLog",
    "CascadeExposures",
    "DirectedGraph",
    "DuplicateActivationError",
    "EmbeddingTable",
    "EvaluationReport",
    "ExposurePrior",
    "FoldMetrics",
    "GenConfig",
    "GraphError",
    "GraphSpec",
    "ItemTopics",
    "MetricError",
    "PROB_EPS",
    "ScoredPair",
    "SplitPlan",
    "TrainConfig",
    "TrainExample",
    "TrainingTrace",
    "UNIFORM_PRIOR",
    "alignment_prob",
    "approx_cascade_loglik",
    "auc_roc",
    "average_precision",
    "barabasi_albert_graph",
    "batch_pair_probs",
    "build_examples",
    "build_graph",
    "build_test_pairs",
    "complete_graph",
    "compute_exposures",
    "draw_embeddings",
    "draw_item_topics",
    "evaluate",
    "exact_cascade_loglik",
    "example_gradient",
    "example_prob",
    "examples_loglik",
    "fit",
    "generate_dataset",
    "in_neighbors",
    "mixture_activation_prob",
    "pair_activation_prob",
    "roc_points",
    "score_pairs",
    "simulate_cascade",
    "split_items",
]
