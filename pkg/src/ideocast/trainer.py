"""Approximate maximum-likelihood inference of node embeddings.

Training treats each potential propagation (item i, activator v, follower u)
as an independent binary example: y=1 when u activated after v, y=0 for a
sampled inactive follower of v. Parameters ascend the per-example log-loss
gradient with per-parameter adaptive step sizes (accumulated squared
gradients) under a global learning rate that decays linearly across epochs.
Negatives are re-drawn every epoch at ``negative_ratio`` per positive; per
item and epoch only a fixed-size random subset of activators is expanded.

Updates are applied sequentially by a single writer in a deterministic
order fixed by (epoch, item id, activator time order, example order), so a
run is reproducible bit-for-bit from its config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .cascades import ActivationLog
from .graph import DirectedGraph
from .model import PROB_EPS, EmbeddingTable, ItemTopics, clamp_prob, pair_activation_prob

_ADAGRAD_EPS = 1e-8


@dataclass
class TrainConfig:
    epochs: int = 50
    lr_init: float = 0.1
    lr_floor: float = 0.01
    seed_sample_size: int = 10
    negative_ratio: float = 2.0
    clamp_eps: float = 1e-4
    n_restarts: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 < self.lr_floor <= self.lr_init:
            raise ValueError("need 0 < lr_floor <= lr_init")
        if self.seed_sample_size < 1:
            raise ValueError("seed_sample_size must be >= 1")
        if self.negative_ratio <= 0:
            raise ValueError("negative_ratio must be positive")
        if not 0 < self.clamp_eps < 0.5:
            raise ValueError("clamp_eps must lie in (0, 0.5)")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")


@dataclass(slots=True)
class TrainExample:
    """One potential propagation: did follower u adopt after activator v?"""

    gamma: np.ndarray
    item: int
    v: int
    u: int
    y: int


@dataclass(slots=True)
class SparseGradient:
    """Log-loss gradient of one example; only rows u and v are touched."""

    u: int
    v: int
    d_theta_u: np.ndarray
    d_phi_u: np.ndarray
    d_phi_v: np.ndarray


@dataclass
class EpochRecord:
    restart: int
    epoch: int
    n_examples: int
    loglik: float
    lr: float

    @property
    def mean_loglik(self) -> float:
        return self.loglik / self.n_examples if self.n_examples else float("nan")


@dataclass
class TrainingTrace:
    epochs: list[EpochRecord] = field(default_factory=list)
    restart_logliks: list[float] = field(default_factory=list)
    best_restart: int = 0


def _prepare_items(log: ActivationLog) -> dict[int, tuple[list[int], dict[int, int]]]:
    """item -> (active nodes in activation order, node -> timestamp)."""
    prepared = {}
    for item in log.item_ids():
        nodes = log.cascade_nodes(item)
        t_of = dict(zip(nodes, log.cascade_times(item)))
        prepared[item] = (nodes, t_of)
    return prepared


def _iter_pair_batches(
    g: DirectedGraph,
    item_order: list[int],
    prepared: dict[int, tuple[list[int], dict[int, int]]],
    seed_sample_size: int | None,
    negative_ratio: float,
    rng: np.random.Generator,
) -> Iterator[tuple[int, int, list[int], list[int]]]:
    """Yield (item, activator, positives, sampled negatives) batches.

    Activators are a uniform sample per item (all of them when
    ``seed_sample_size`` is None or >= cascade size), processed in
    activation order. Positives are exhaustive followers that activated
    strictly later; negatives are sampled without replacement from inactive
    followers at negative_ratio per positive, capped by availability.
    Activators with no positives are skipped entirely.
    """
    out_adj = g.out_adjacency
    for item in item_order:
        entry = prepared.get(item)
        if entry is None:
            continue
        nodes, t_of = entry
        n_active = len(nodes)
        if n_active < 2:
            continue
        if seed_sample_size is None or seed_sample_size >= n_active:
            chosen = range(n_active)
        else:
            idx = rng.permutation(n_active)[:seed_sample_size]
            idx.sort()
            chosen = idx.tolist()
        for ai in chosen:
            v = nodes[ai]
            tv = t_of[v]
            pos: list[int] = []
            pool: list[int] = []
            for u in out_adj[v]:
                tu = t_of.get(u)
                if tu is None:
                    pool.append(u)
                elif tu > tv:
                    pos.append(u)
            if not pos:
                continue
            want = int(round(negative_ratio * len(pos)))
            avail = len(pool)
            if want >= avail:
                negs = pool
            elif want > 0:
                negs = [pool[j] for j in rng.choice(avail, size=want, replace=False)]
            else:
                negs = []
            yield item, v, pos, negs


def build_examples(
    g: DirectedGraph,
    items: list[ItemTopics],
    log: ActivationLog,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Iterator[TrainExample]:
    """Stream one epoch of training examples in deterministic order."""
    gamma_of = {it.item_id: it.gamma for it in items}
    prepared = _prepare_items(log)
    item_order = sorted(i for i in prepared if i in gamma_of)
    for item, v, pos, negs in _iter_pair_batches(
        g, item_order, prepared, cfg.seed_sample_size, cfg.negative_ratio, rng
    ):
        gam = gamma_of[item]
        for u in pos:
            yield TrainExample(gamma=gam, item=item, v=v, u=u, y=1)
        for u in negs:
            yield TrainExample(gamma=gam, item=item, v=v, u=u, y=0)


def example_prob(x: TrainExample, emb: EmbeddingTable) -> float:
    """Model probability that the example's follower activates."""
    return pair_activation_prob(x.gamma, emb.theta[x.u], emb.phi[x.u], emb.phi[x.v])


def example_loglik(x: TrainExample, emb: EmbeddingTable) -> float:
    p = example_prob(x, emb)
    return math.log(clamp_prob(p)) if x.y else math.log(clamp_prob(1.0 - p))


def examples_loglik(examples: Iterable[TrainExample], emb: EmbeddingTable) -> float:
    """Summed log-loss objective of an example multiset at a frozen embedding."""
    return sum(example_loglik(x, emb) for x in examples)


def example_gradient(x: TrainExample, emb: EmbeddingTable) -> SparseGradient:
    """Analytic gradient of y*log(Pr) + (1-y)*log(1-Pr) for one example."""
    gam = np.asarray(x.gamma, dtype=np.float64)
    th_u = emb.theta[x.u]
    ph_u = emb.phi[x.u]
    ph_v = emb.phi[x.v]
    align = ph_u * ph_v + (1.0 - ph_u) * (1.0 - ph_v)
    pr = clamp_prob(float(np.sum(gam * th_u * align)))
    coef = 1.0 / pr if x.y else -1.0 / (1.0 - pr)
    return SparseGradient(
        u=x.u,
        v=x.v,
        d_theta_u=coef * gam * align,
        d_phi_u=coef * gam * th_u * (2.0 * ph_v - 1.0),
        d_phi_v=coef * gam * th_u * (2.0 * ph_u - 1.0),
    )


def _has_any_positive_pair(
    g: DirectedGraph, prepared: dict[int, tuple[list[int], dict[int, int]]]
) -> bool:
    out_adj = g.out_adjacency
    for nodes, t_of in prepared.values():
        for v in nodes:
            tv = t_of[v]
            for u in out_adj[v]:
                if t_of.get(u, -1) > tv:
                    return True
    return False


def _vector_loglik(theta, phi, gamma_mat, rows, us, vs, ys) -> float:
    g = gamma_mat[rows]
    pu = phi[us]
    pv = phi[vs]
    align = pu * pv + (1.0 - pu) * (1.0 - pv)
    pr = np.einsum("nk,nk,nk->n", g, theta[us], align)
    np.clip(pr, PROB_EPS, 1.0 - PROB_EPS, out=pr)
    return float(np.sum(np.where(ys == 1, np.log(pr), np.log(1.0 - pr))))


def fit(
    g: DirectedGraph,
    items: list[ItemTopics],
    log: ActivationLog,
    cfg: TrainConfig,
) -> tuple[EmbeddingTable, TrainingTrace]:
    """Estimate interests and polarities from cascades by gradient ascent.

    Runs ``cfg.n_restarts`` restarts from Uniform(0.4, 0.6) initializations
    (restart r uses stream (rng_seed, 101, r): first the theta draw, then
    phi, then the epoch example stream) and keeps the restart with the
    highest objective. With several restarts the comparison uses a common
    example multiset drawn from a dedicated stream; with one restart the
    final epoch objective is reported as-is.

    The per-epoch trace objective is the summed example log-loss re-evaluated
    at the end-of-epoch parameters over that epoch's example multiset.
    """
    n = g.node_count
    k_count = items[0].n_topics if items else 1
    gamma_of = {it.item_id: it.gamma for it in items}
    prepared = _prepare_items(log)
    item_order = sorted(i for i in prepared if i in gamma_of)
    if not item_order or not _has_any_positive_pair(
        g, {i: prepared[i] for i in item_order}
    ):
        raise ValueError("no propagation pairs in training data")

    gamma_mat = np.zeros((len(item_order), k_count))
    item_row = {}
    for r, item in enumerate(item_order):
        gamma_mat[r] = gamma_of[item]
        item_row[item] = r
    gamma_rows = [tuple(float(x) for x in row) for row in gamma_mat]

    trace = TrainingTrace()
    best: tuple[float, int, np.ndarray, np.ndarray] | None = None
    candidates: list[tuple[np.ndarray, np.ndarray, float]] = []
    for restart in range(cfg.n_restarts):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, 101, restart]))
        theta0 = rng.uniform(0.4, 0.6, size=(n, k_count))
        phi0 = rng.uniform(0.4, 0.6, size=(n, k_count))
        theta_m, phi_m, final_ll = _run_restart(
            g, item_order, prepared, gamma_rows, gamma_mat, item_row,
            theta0, phi0, cfg, rng, restart, trace,
        )
        candidates.append((theta_m, phi_m, final_ll))

    if cfg.n_restarts == 1:
        trace.restart_logliks = [candidates[0][2]]
        trace.best_restart = 0
    else:
        sel_rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, 202]))
        rows, us, vs, ys = _materialize_examples(
            g, item_order, prepared, item_row, cfg.seed_sample_size,
            cfg.negative_ratio, sel_rng,
        )
        trace.restart_logliks = [
            _vector_loglik(th, ph, gamma_mat, rows, us, vs, ys)
            for th, ph, _ in candidates
        ]
        trace.best_restart = int(np.argmax(trace.restart_logliks))
    th, ph, _ = candidates[trace.best_restart]
    return EmbeddingTable(theta=th, phi=ph), trace


def _materialize_examples(
    g, item_order, prepared, item_row, seed_sample_size, negative_ratio, rng
):
    rows: list[int] = []
    us: list[int] = []
    vs: list[int] = []
    n_pos = 0
    boundaries: list[tuple[int, int]] = []
    for item, v, pos, negs in _iter_pair_batches(
        g, item_order, prepared, seed_sample_size, negative_ratio, rng
    ):
        row = item_row[item]
        total = len(pos) + len(negs)
        rows.extend([row] * total)
        vs.extend([v] * total)
        us.extend(pos)
        us.extend(negs)
        boundaries.append((len(pos), len(negs)))
        n_pos += len(pos)
    ys = np.zeros(len(us), dtype=np.int8)
    at = 0
    for npos, nneg in boundaries:
        ys[at : at + npos] = 1
        at += npos + nneg
    return (
        np.asarray(rows, dtype=np.int64),
        np.asarray(us, dtype=np.int64),
        np.asarray(vs, dtype=np.int64),
        ys,
    )


def _run_restart(
    g, item_order, prepared, gamma_rows, gamma_mat, item_row,
    theta0, phi0, cfg, rng, restart, trace,
) -> tuple[np.ndarray, np.ndarray, float]:
    n = theta0.shape[0]
    k_count = theta0.shape[1]
    krange = range(k_count)
    theta = [list(map(float, row)) for row in theta0]
    phi = [list(map(float, row)) for row in phi0]
    acc_t = [[0.0] * k_count for _ in range(n)]
    acc_p = [[0.0] * k_count for _ in range(n)]
    lo = cfg.clamp_eps
    hi = 1.0 - cfg.clamp_eps
    sqrt = math.sqrt
    epochs = cfg.epochs
    final_ll = float("nan")
    checked_empty = False
    for epoch in range(epochs):
        if epochs > 1:
            lr = cfg.lr_init + (cfg.lr_floor - cfg.lr_init) * (epoch / (epochs - 1))
        else:
            lr = cfg.lr_init
        ex_rows: list[int] = []
        ex_us: list[int] = []
        ex_vs: list[int] = []
        batch_sizes: list[tuple[int, int]] = []
        for item, v, pos, negs in _iter_pair_batches(
            g, item_order, prepared, cfg.seed_sample_size, cfg.negative_ratio, rng
        ):
            row = item_row[item]
            gam = gamma_rows[row]
            ph_v = phi[v]
            acc_v = acc_p[v]
            for y, group in ((1, pos), (0, negs)):
                for u in group:
                    th_u = theta[u]
                    ph_u = phi[u]
                    pr = 0.0
                    gp = []
                    gt = []
                    for k in krange:
                        a = ph_u[k]
                        b = ph_v[k]
                        p_k = a * b + (1.0 - a) * (1.0 - b)
                        gk = gam[k]
                        gpk = gk * p_k
                        gp.append(gpk)
                        gt.append(gk * th_u[k])
                        pr += gpk * th_u[k]
                    if pr < PROB_EPS:
                        pr = PROB_EPS
                    elif pr > 1.0 - PROB_EPS:
                        pr = 1.0 - PROB_EPS
                    coef = 1.0 / pr if y else -1.0 / (1.0 - pr)
                    acc_u_t = acc_t[u]
                    acc_u_p = acc_p[u]
                    # all three gradient blocks use the pre-update parameters
                    for k in krange:
                        a = ph_u[k]
                        b = ph_v[k]
                        gtk = gt[k]
                        grad = coef * gp[k]
                        a2 = acc_u_t[k] + grad * grad
                        acc_u_t[k] = a2
                        x = th_u[k] + lr * grad / (sqrt(a2) + _ADAGRAD_EPS)
                        th_u[k] = lo if x < lo else (hi if x > hi else x)
                        grad = coef * gtk * (2.0 * b - 1.0)
                        a2 = acc_u_p[k] + grad * grad
                        acc_u_p[k] = a2
                        x = a + lr * grad / (sqrt(a2) + _ADAGRAD_EPS)
                        ph_u[k] = lo if x < lo else (hi if x > hi else x)
                        grad = coef * gtk * (2.0 * a - 1.0)
                        a2 = acc_v[k] + grad * grad
                        acc_v[k] = a2
                        x = b + lr * grad / (sqrt(a2) + _ADAGRAD_EPS)
                        ph_v[k] = lo if x < lo else (hi if x > hi else x)
            total = len(pos) + len(negs)
            ex_rows.extend([row] * total)
            ex_vs.extend([v] * total)
            ex_us.extend(pos)
            ex_us.extend(negs)
            batch_sizes.append((len(pos), len(negs)))
        n_examples = len(ex_us)
        if n_examples == 0 and not checked_empty:
            # distinguish unlucky sampling from structurally empty data
            if not _has_any_positive_pair(g, {i: prepared[i] for i in item_order}):
                raise ValueError("no propagation pairs in training data")
            checked_empty = True
        if n_examples:
            theta_np = np.array(theta)
            phi_np = np.array(phi)
            ys = np.zeros(n_examples, dtype=np.int8)
            at = 0
            for npos, nneg in batch_sizes:
                ys[at : at + npos] = 1
                at += npos + nneg
            ll = _vector_loglik(
                theta_np, phi_np, gamma_mat,
                np.asarray(ex_rows, dtype=np.int64),
                np.asarray(ex_us, dtype=np.int64),
                np.asarray(ex_vs, dtype=np.int64),
                ys,
            )
        else:
            ll = 0.0
        final_ll = ll
        trace.epochs.append(
            EpochRecord(restart=restart, epoch=epoch, n_examples=n_examples, loglik=ll, lr=lr)
        )
    return np.array(theta), np.array(phi), final_ll
