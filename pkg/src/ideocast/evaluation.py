"""Experimental protocol: item splits, test pairs, ranking metrics.

Items (not activations) are split between train and test so that no test
cascade leaks into training. The prediction task scores held-out
(item, activator, follower) pairs with the fitted embedding and ranks them;
quality is summarized by ROC AUC and average precision over the pooled
pairs (per-item macro averaging is available behind a flag).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cascades import ActivationLog
from .graph import DirectedGraph
from .model import EmbeddingTable, ItemTopics, batch_pair_probs
from .trainer import TrainConfig, TrainingTrace, _iter_pair_batches, _prepare_items, fit

#: sub-stream tags for evaluation randomness
_STREAM_SPLIT = 11
_STREAM_PAIRS = 12


class MetricError(ValueError):
    """Metric undefined for the given label mix."""


@dataclass(frozen=True)
class SplitPlan:
    """Item-level split: holdout(train_frac) or kfold(fold_count)."""

    mode: str = "holdout"
    train_frac: float = 0.9
    fold_count: int = 10

    def __post_init__(self):
        if self.mode not in ("holdout", "kfold"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if self.mode == "holdout" and not 0.0 < self.train_frac < 1.0:
            raise ValueError("train_frac must lie in (0, 1)")
        if self.mode == "kfold" and self.fold_count < 2:
            raise ValueError("fold_count must be >= 2")

    @staticmethod
    def holdout(train_frac: float = 0.9) -> "SplitPlan":
        return SplitPlan("holdout", train_frac=train_frac)

    @staticmethod
    def kfold(fold_count: int) -> "SplitPlan":
        return SplitPlan("kfold", fold_count=fold_count)


@dataclass(slots=True)
class ScoredPair:
    item: int
    v: int
    u: int
    label: int
    score: float = float("nan")


def split_items(
    item_ids: list[int], plan: SplitPlan, rng: np.random.Generator
) -> list[tuple[list[int], list[int]]]:
    """Deterministic (train_ids, test_ids) per fold; items disjoint, exhaustive."""
    ids = sorted(item_ids)
    n = len(ids)
    if n < 2:
        raise ValueError("need at least 2 items to split")
    perm = [ids[i] for i in rng.permutation(n)]
    if plan.mode == "holdout":
        n_train = int(round(plan.train_frac * n))
        n_train = min(max(n_train, 1), n - 1)
        return [(sorted(perm[:n_train]), sorted(perm[n_train:]))]
    if n < plan.fold_count:
        raise ValueError(f"cannot make {plan.fold_count} folds from {n} items")
    folds = [list(chunk) for chunk in np.array_split(perm, plan.fold_count)]
    out = []
    for i in range(plan.fold_count):
        test = sorted(int(x) for x in folds[i])
        train = sorted(int(x) for j, f in enumerate(folds) for x in f if j != i)
        out.append((train, test))
    return out


def build_test_pairs(
    g: DirectedGraph,
    items: list[ItemTopics],
    log: ActivationLog,
    negative_ratio: float,
    rng: np.random.Generator,
    seed_sample_size: int | None = None,
) -> list[ScoredPair]:
    """Labelled evaluation pairs, built by the trainer's pair construction.

    By default every activator of a test cascade is expanded (no activator
    subsampling); pass seed_sample_size to reproduce the trainer's stream.
    """
    wanted = {it.item_id for it in items}
    prepared = {i: e for i, e in _prepare_items(log).items() if i in wanted}
    item_order = sorted(prepared)
    pairs: list[ScoredPair] = []
    for item, v, pos, negs in _iter_pair_batches(
        g, item_order, prepared, seed_sample_size, negative_ratio, rng
    ):
        pairs.extend(ScoredPair(item=item, v=v, u=u, label=1) for u in pos)
        pairs.extend(ScoredPair(item=item, v=v, u=u, label=0) for u in negs)
    if not pairs:
        raise ValueError("no test pairs could be built from the given items")
    return pairs


def score_pairs(
    pairs: list[ScoredPair], items: list[ItemTopics], emb: EmbeddingTable
) -> None:
    """Fill pair scores with the model activation probability (in place)."""
    gamma_of = {it.item_id: it.gamma for it in items}
    gammas = np.stack([gamma_of[p.item] for p in pairs])
    us = np.fromiter((p.u for p in pairs), dtype=np.int64, count=len(pairs))
    vs = np.fromiter((p.v for p in pairs), dtype=np.int64, count=len(pairs))
    scores = batch_pair_probs(gammas, emb.theta[us], emb.phi[us], emb.phi[vs])
    for p, s in zip(pairs, scores):
        p.score = float(s)


def _labels_scores(pairs: list[ScoredPair]) -> tuple[np.ndarray, np.ndarray]:
    labels = np.fromiter((p.label for p in pairs), dtype=np.int8, count=len(pairs))
    scores = np.fromiter((p.score for p in pairs), dtype=np.float64, count=len(pairs))
    return labels, scores


def auc_roc(pairs: list[ScoredPair]) -> float:
    """Probability a random positive outscores a random negative; ties count 1/2."""
    labels, scores = _labels_scores(pairs)
    return auc_roc_from_arrays(labels, scores)


def auc_roc_from_arrays(labels: np.ndarray, scores: np.ndarray) -> float:
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs at least one positive and one negative")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(np.sum(ranks[labels == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(pairs: list[ScoredPair]) -> float:
    """Mean precision at each positive's rank, scores descending.

    Ties keep the input order (stable sort), so the result is deterministic
    for a fixed pair list.
    """
    labels, scores = _labels_scores(pairs)
    return average_precision_from_arrays(labels, scores)


def average_precision_from_arrays(labels: np.ndarray, scores: np.ndarray) -> float:
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise MetricError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    hits = np.cumsum(sorted_labels == 1)
    ranks = np.arange(1, len(labels) + 1)
    mask = sorted_labels == 1
    return float(np.sum(hits[mask] / ranks[mask]) / n_pos)


def roc_points(pairs: list[ScoredPair]) -> list[tuple[float, float]]:
    """(fpr, tpr) per distinct score threshold, descending, ends at (1, 1)."""
    labels, scores = _labels_scores(pairs)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    tps = np.cumsum(sorted_labels == 1)
    fps = np.cumsum(sorted_labels == 0)
    # keep the last point of each tied-score run
    keep = np.append(sorted_scores[1:] != sorted_scores[:-1], True)
    pts = [(0.0, 0.0)]
    pts.extend((float(f / n_neg), float(t / n_pos)) for f, t in zip(fps[keep], tps[keep]))
    return pts


@dataclass
class FoldMetrics:
    fold: int
    n_train_items: int
    n_test_items: int
    n_pairs: int
    n_positives: int
    auc: float
    ap: float
    seconds: float


@dataclass
class EvaluationReport:
    folds: list[FoldMetrics] = field(default_factory=list)
    pooled_pairs: list[ScoredPair] = field(default_factory=list)
    traces: list[TrainingTrace] = field(default_factory=list)

    @property
    def mean_auc(self) -> float:
        return float(np.mean([f.auc for f in self.folds]))

    @property
    def std_auc(self) -> float:
        return float(np.std([f.auc for f in self.folds]))

    @property
    def mean_ap(self) -> float:
        return float(np.mean([f.ap for f in self.folds]))

    @property
    def std_ap(self) -> float:
        return float(np.std([f.ap for f in self.folds]))


def evaluate(
    g: DirectedGraph,
    items: list[ItemTopics],
    log: ActivationLog,
    plan: SplitPlan,
    train_cfg: TrainConfig,
    eval_seed: int = 0,
    negative_ratio: float | None = None,
    macro_average: bool = False,
    keep_pairs: bool = True,
) -> EvaluationReport:
    """Fit on train items and score held-out pairs, per fold.

    The test pairs use a dedicated evaluation stream (derived from
    eval_seed) and the same 2:1 negative undersampling as training unless
    negative_ratio overrides it. macro_average reports the per-item mean
    AUC/AP instead of pooling all pairs into one ranking.
    """
    ratio = train_cfg.negative_ratio if negative_ratio is None else negative_ratio
    split_rng = np.random.default_rng(np.random.SeedSequence([eval_seed, _STREAM_SPLIT]))
    folds = split_items([it.item_id for it in items], plan, split_rng)
    items_by_id = {it.item_id: it for it in items}
    report = EvaluationReport()
    for fold_idx, (train_ids, test_ids) in enumerate(folds):
        t0 = time.perf_counter()
        train_items = [items_by_id[i] for i in train_ids]
        test_items = [items_by_id[i] for i in test_ids]
        emb, trace = fit(g, train_items, log.restricted_to(train_ids), train_cfg)
        pair_rng = np.random.default_rng(
            np.random.SeedSequence([eval_seed, _STREAM_PAIRS, fold_idx])
        )
        pairs = build_test_pairs(
            g, test_items, log.restricted_to(test_ids), ratio, pair_rng
        )
        score_pairs(pairs, test_items, emb)
        if macro_average:
            auc, ap = _macro_metrics(pairs)
        else:
            auc = auc_roc(pairs)
            ap = average_precision(pairs)
        seconds = time.perf_counter() - t0
        report.folds.append(
            FoldMetrics(
                fold=fold_idx,
                n_train_items=len(train_ids),
                n_test_items=len(test_ids),
                n_pairs=len(pairs),
                n_positives=sum(p.label for p in pairs),
                auc=auc,
                ap=ap,
                seconds=seconds,
            )
        )
        report.traces.append(trace)
        if keep_pairs:
            report.pooled_pairs.extend(pairs)
    return report


@dataclass
class SyntheticRunResult:
    graph: str
    polarization: float
    n_items: int
    data_seed: int
    auc: float
    ap: float
    gen_seconds: float
    fit_eval_seconds: float
    epoch_mean_logliks: list[float] = field(default_factory=list)


def run_synthetic_experiment(
    graph_kind: str,
    polarization: float,
    n_items: int,
    data_seed: int,
    train_cfg: TrainConfig,
    n_nodes: int = 100,
    ba_m: int = 10,
    n_topics: int = 4,
    alpha: float = 0.9,
    beta: float = 0.1,
    topic_concentration: float = 0.125,
    train_frac: float = 0.9,
) -> SyntheticRunResult:
    """Generate one synthetic dataset, fit on a 90/10 holdout, score the rest.

    The benchmark configuration: 100 nodes, K=4 axes, interests from
    Beta(0.9, 0.1) (92% of draws above 0.5), item topics from
    Dirichlet(1/8), either a complete graph or a symmetric
    preferential-attachment graph (m=10, density ~0.18).
    """
    from .generator import GenConfig, GraphSpec, generate_dataset

    if graph_kind == "complete":
        spec = GraphSpec.complete(n_nodes)
    elif graph_kind in ("ba", "barabasi_albert"):
        spec = GraphSpec.barabasi_albert(n_nodes, ba_m)
    else:
        raise ValueError(f"unknown graph kind {graph_kind!r}")
    cfg = GenConfig(
        n_topics=n_topics,
        polarization=polarization,
        alpha=alpha,
        beta=beta,
        topic_concentration=topic_concentration,
        n_items=n_items,
        graph_spec=spec,
        rng_seed=data_seed,
    )
    t0 = time.perf_counter()
    g, _, topics, log = generate_dataset(cfg)
    gen_seconds = time.perf_counter() - t0
    t0 = time.perf_counter()
    report = evaluate(
        g, topics, log, SplitPlan.holdout(train_frac), train_cfg,
        eval_seed=data_seed, keep_pairs=False,
    )
    fit_eval_seconds = time.perf_counter() - t0
    trace = report.traces[0]
    return SyntheticRunResult(
        graph=graph_kind,
        polarization=polarization,
        n_items=n_items,
        data_seed=data_seed,
        auc=report.mean_auc,
        ap=report.mean_ap,
        gen_seconds=gen_seconds,
        fit_eval_seconds=fit_eval_seconds,
        epoch_mean_logliks=[r.mean_loglik for r in trace.epochs],
    )


def _macro_metrics(pairs: list[ScoredPair]) -> tuple[float, float]:
    by_item: dict[int, list[ScoredPair]] = {}
    for p in pairs:
        by_item.setdefault(p.item, []).append(p)
    aucs = []
    aps = []
    for item_pairs in by_item.values():
        labels = {p.label for p in item_pairs}
        if labels == {0, 1}:
            aucs.append(auc_roc(item_pairs))
            aps.append(average_precision(item_pairs))
    if not aucs:
        raise MetricError("no item had both classes; macro metrics undefined")
    return float(np.mean(aucs)), float(np.mean(aps))
