"""Synthetic cascade generation.

Ground-truth embeddings are drawn from Beta priors (interests from
Beta(alpha, beta), polarities from Beta(1/p, 1/p) where larger p pushes
polarities toward the extremes), item topic mixtures from a Dirichlet, and
cascades unfold in discrete rounds: a uniformly chosen seed activates at
t=0, and at each later round every not-yet-exposed node with a newly active
in-neighbor gets exactly one adoption attempt. Timestamps are round
indices, so simultaneous adoptions share a timestamp.

Per-attempt semantics: draw a topic from the item mixture; the node is
interested with probability theta; if interested, adoption succeeds with
the topic alignment probability between the node and its exposer. The
alignment event is drawn directly as one Bernoulli with that probability
(identical in law to drawing both attitudes and comparing them), which
makes generated data exactly invariant under a global polarity flip with
the same seed.

Every item draws from its own RNG stream derived from (master seed, item),
so output is independent of the order items are simulated in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cascades import Activation, ActivationLog
from .graph import DirectedGraph, barabasi_albert_graph, complete_graph
from .model import EmbeddingTable, ItemTopics

# sub-stream tags under the master seed
_STREAM_GRAPH = 0
_STREAM_EMBEDDINGS = 1
_STREAM_ITEM = 2


@dataclass(frozen=True)
class GraphSpec:
    """Graph family for an experiment: complete(n) or barabasi_albert(n, m)."""

    kind: str
    n: int
    m: int = 0

    def __post_init__(self):
        if self.kind not in ("complete", "barabasi_albert"):
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.kind == "barabasi_albert" and self.m < 1:
            raise ValueError("barabasi_albert spec requires m >= 1")

    @staticmethod
    def complete(n: int) -> "GraphSpec":
        return GraphSpec("complete", n)

    @staticmethod
    def barabasi_albert(n: int, m: int) -> "GraphSpec":
        return GraphSpec("barabasi_albert", n, m)

    def build(self, rng_seed: int) -> DirectedGraph:
        if self.kind == "complete":
            return complete_graph(self.n)
        return barabasi_albert_graph(self.n, self.m, rng_seed)


@dataclass
class GenConfig:
    n_topics: int = 4
    polarization: float = 4.0
    alpha: float = 0.9
    beta: float = 0.1
    topic_concentration: np.ndarray | float = 0.125
    n_items: int = 1000
    graph_spec: GraphSpec = field(default_factory=lambda: GraphSpec.complete(100))
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.polarization <= 0 or self.alpha <= 0 or self.beta <= 0:
            raise ValueError("polarization, alpha, beta must be positive")
        q = np.asarray(self.topic_concentration, dtype=np.float64)
        if q.ndim == 0:
            q = np.full(self.n_topics, float(q))
        if q.size != self.n_topics or np.any(q <= 0):
            raise ValueError("topic_concentration must be K positive reals")
        self.topic_concentration = q
        if self.n_items < 1:
            raise ValueError("n_items must be >= 1")


def draw_embeddings(cfg: GenConfig, n_nodes: int, rng: np.random.Generator) -> EmbeddingTable:
    """theta ~ Beta(alpha, beta), phi ~ Beta(1/p, 1/p), i.i.d. per node and topic."""
    shape = (n_nodes, cfg.n_topics)
    theta = rng.beta(cfg.alpha, cfg.beta, size=shape)
    inv_p = 1.0 / cfg.polarization
    phi = rng.beta(inv_p, inv_p, size=shape)
    return EmbeddingTable(theta=theta, phi=phi)


def draw_item_topics(cfg: GenConfig, rng: np.random.Generator, item_id: int = 0) -> ItemTopics:
    gamma = rng.dirichlet(cfg.topic_concentration)
    return ItemTopics(item_id=item_id, gamma=gamma)


def simulate_cascade(
    g: DirectedGraph,
    gamma,
    emb: EmbeddingTable,
    rng: np.random.Generator,
    item_id: int = 0,
) -> list[Activation]:
    """One round-based cascade; returns activations with exposer attribution.

    Each node gets at most one adoption attempt per item, attributed to one
    uniformly chosen predecessor among those newly active in the previous
    round.
    """
    if g.node_count < 1:
        raise ValueError("graph has no nodes")
    gvec = gamma.gamma if isinstance(gamma, ItemTopics) else np.asarray(gamma, dtype=np.float64)
    k_count = gvec.size
    gamma_cum = np.cumsum(gvec)
    theta, phi = emb.theta, emb.phi

    seed_node = int(rng.integers(g.node_count))
    events = [Activation(t=0, item=item_id, node=seed_node, exposer=None)]
    exposed = bytearray(g.node_count)
    exposed[seed_node] = 1
    newly = [seed_node]
    t = 0
    out_adj = g.out_adjacency
    while newly:
        t += 1
        candidates: dict[int, list[int]] = {}
        for v in newly:
            for u in out_adj[v]:
                if not exposed[u]:
                    candidates.setdefault(u, []).append(v)
        if not candidates:
            break
        targets = sorted(candidates)
        m = len(targets)
        for u in targets:
            exposed[u] = 1
        # one rng array per decision stage keeps the stream deterministic
        pick = rng.random(m)
        exposers = np.empty(m, dtype=np.int64)
        for i, u in enumerate(targets):
            cands = candidates[u]
            exposers[i] = cands[int(pick[i] * len(cands))]
        topics = np.minimum(
            np.searchsorted(gamma_cum, rng.random(m), side="right"), k_count - 1
        )
        t_arr = np.asarray(targets)
        interested = rng.random(m) < theta[t_arr, topics]
        phi_u = phi[t_arr, topics]
        phi_v = phi[exposers, topics]
        align = phi_u * phi_v + (1.0 - phi_u) * (1.0 - phi_v)
        success = interested & (rng.random(m) < align)
        newly = []
        for i, u in enumerate(targets):
            if success[i]:
                newly.append(u)
                events.append(Activation(t=t, item=item_id, node=u, exposer=int(exposers[i])))
    return events


def item_rng(master_seed: int, item_id: int) -> np.random.Generator:
    """Independent per-item stream; scheduling order cannot affect output."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, _STREAM_ITEM, item_id]))


def generate_dataset(
    cfg: GenConfig,
) -> tuple[DirectedGraph, EmbeddingTable, list[ItemTopics], ActivationLog]:
    """Graph + ground-truth embeddings + item topics + full activation log."""
    graph_seed = np.random.SeedSequence([cfg.rng_seed, _STREAM_GRAPH]).generate_state(1)[0]
    g = cfg.graph_spec.build(int(graph_seed))
    emb_rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, _STREAM_EMBEDDINGS]))
    emb = draw_embeddings(cfg, g.node_count, emb_rng)
    topics: list[ItemTopics] = []
    log = ActivationLog()
    for item in range(cfg.n_items):
        rng = item_rng(cfg.rng_seed, item)
        it = draw_item_topics(cfg, rng, item_id=item)
        topics.append(it)
        for a in simulate_cascade(g, it, emb, rng, item_id=item):
            log.add(a.t, a.item, a.node, a.exposer)
    return g, emb, topics, log
