"""Probability kernel: alignment, activation probabilities, cascade log-likelihoods.

Every node carries two vectors over the K topic axes: interests (theta,
probability of caring about an axis) and polarities (phi, probability of
positive leaning on an axis). An item carries a topic mixture gamma. All
probabilities derive from these three ingredients.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cascades import CascadeExposures

#: probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before any log,
#: since boundary embeddings make the likelihood -inf.
PROB_EPS = 1e-9


def clamp_prob(p: float) -> float:
    if p < PROB_EPS:
        return PROB_EPS
    if p > 1.0 - PROB_EPS:
        return 1.0 - PROB_EPS
    return p


@dataclass(frozen=True)
class ItemTopics:
    """Topic mixture of one item over the K ideological axes."""

    item_id: int
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        object.__setattr__(self, "gamma", g)
        if g.ndim != 1 or g.size < 1:
            raise ValueError("gamma must be a non-empty 1-d vector")
        if np.any(g < 0):
            raise ValueError(f"item {self.item_id}: negative topic weight")
        if abs(float(g.sum()) - 1.0) > 1e-9:
            raise ValueError(
                f"item {self.item_id}: topic weights sum to {g.sum()!r}, not 1"
            )

    @property
    def n_topics(self) -> int:
        return self.gamma.size


@dataclass
class EmbeddingTable:
    """Per-node interest (theta) and polarity (phi) matrices, |V| x K in [0, 1]."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.theta.shape != self.phi.shape or self.theta.ndim != 2:
            raise ValueError(
                f"theta/phi shape mismatch: {self.theta.shape} vs {self.phi.shape}"
            )
        for name, m in (("theta", self.theta), ("phi", self.phi)):
            if np.any(m < 0) or np.any(m > 1):
                raise ValueError(f"{name} entries must lie in [0, 1]")

    @property
    def n_nodes(self) -> int:
        return self.theta.shape[0]

    @property
    def n_topics(self) -> int:
        return self.theta.shape[1]

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.theta.copy(), self.phi.copy())

    def with_flipped_polarity(self, topic: int | None = None) -> "EmbeddingTable":
        """phi -> 1 - phi on one topic (or all); the model is invariant to this."""
        phi = self.phi.copy()
        if topic is None:
            phi = 1.0 - phi
        else:
            phi[:, topic] = 1.0 - phi[:, topic]
        return EmbeddingTable(self.theta.copy(), phi)


@dataclass(frozen=True)
class ExposurePrior:
    """Weights over a node's possible activators.

    kind "uniform" spreads weight evenly, "first_activator" puts all weight
    on the earliest activator, "custom" normalizes user-supplied per-node
    base weights. Realized weights are non-negative and sum to 1.
    """

    kind: str = "uniform"
    base_weights: Callable[[int], float] | None = None

    _KINDS = ("uniform", "first_activator", "custom")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}; expected one of {self._KINDS}")
        if self.kind == "custom" and self.base_weights is None:
            raise ValueError("custom prior requires base_weights")

    def weights_for(self, activators: Sequence[int]) -> np.ndarray:
        n = len(activators)
        if n == 0:
            raise ValueError("empty activator set")
        if self.kind == "uniform":
            return np.full(n, 1.0 / n)
        if self.kind == "first_activator":
            w = np.zeros(n)
            w[0] = 1.0
            return w
        raw = np.array([self.base_weights(v) for v in activators], dtype=np.float64)
        if np.any(raw < 0):
            raise ValueError("custom prior produced negative weight")
        s = raw.sum()
        if s <= 0:
            raise ValueError("custom prior weights sum to zero")
        return raw / s


UNIFORM_PRIOR = ExposurePrior("uniform")


def alignment_prob(phi_u_k: float, phi_v_k: float) -> float:
    """Probability two nodes draw equal attitudes on one axis.

    Both exhibit positive leaning (phi_u * phi_v) or both negative
    ((1-phi_u) * (1-phi_v)).
    """
    if not (0.0 <= phi_u_k <= 1.0 and 0.0 <= phi_v_k <= 1.0):
        raise ValueError(f"polarities must lie in [0, 1], got ({phi_u_k}, {phi_v_k})")
    return phi_u_k * phi_v_k + (1.0 - phi_u_k) * (1.0 - phi_v_k)


def _gamma_vector(gamma) -> np.ndarray:
    if isinstance(gamma, ItemTopics):
        return gamma.gamma
    return np.asarray(gamma, dtype=np.float64)


def pair_activation_prob(gamma, theta_u, phi_u, phi_v) -> float:
    """Probability u activates given a single active predecessor v.

    sum_k gamma_k * theta_{u,k} * alignment(phi_{u,k}, phi_{v,k}); u must be
    interested in the drawn topic and aligned with v on it.
    """
    g = _gamma_vector(gamma)
    th = np.asarray(theta_u, dtype=np.float64)
    pu = np.asarray(phi_u, dtype=np.float64)
    pv = np.asarray(phi_v, dtype=np.float64)
    if not (g.shape == th.shape == pu.shape == pv.shape):
        raise ValueError(
            f"dimension mismatch: gamma {g.shape}, theta_u {th.shape}, "
            f"phi_u {pu.shape}, phi_v {pv.shape}"
        )
    total = 0.0
    for k in range(g.size):
        total += g[k] * th[k] * alignment_prob(float(pu[k]), float(pv[k]))
    return total


def batch_pair_probs(
    gammas: np.ndarray, theta_u: np.ndarray, phi_u: np.ndarray, phi_v: np.ndarray
) -> np.ndarray:
    """Vectorized pair_activation_prob over N pairs; all inputs (N, K)."""
    align = phi_u * phi_v + (1.0 - phi_u) * (1.0 - phi_v)
    return np.einsum("nk,nk,nk->n", gammas, theta_u, align)


def mixture_activation_prob(
    gamma,
    u: int,
    activators: Sequence[int],
    prior: ExposurePrior,
    emb: EmbeddingTable,
) -> float:
    """Activation probability of u as a prior-weighted mixture over activators."""
    if len(activators) == 0:
        raise ValueError(f"node {u} has an empty activator set")
    w = prior.weights_for(activators)
    g = _gamma_vector(gamma)
    total = 0.0
    for weight, v in zip(w, activators):
        if weight == 0.0:
            continue
        total += weight * pair_activation_prob(g, emb.theta[u], emb.phi[u], emb.phi[v])
    return total


def exact_cascade_loglik(
    exposures: CascadeExposures,
    gamma,
    prior: ExposurePrior,
    emb: EmbeddingTable,
) -> float:
    """Log-likelihood of one cascade under the mixture activation probability.

    Active nodes contribute log Pr(act), exposed-but-inactive nodes
    log(1 - Pr(act)); nodes with empty exposure sets contribute nothing.
    """
    g = _gamma_vector(gamma)
    ll = 0.0
    for u, f in exposures.active:
        p = mixture_activation_prob(g, u, f, prior, emb)
        ll += math.log(clamp_prob(p))
    for u, f in exposures.inactive:
        p = mixture_activation_prob(g, u, f, prior, emb)
        ll += math.log(clamp_prob(1.0 - p))
    return ll


def approx_cascade_loglik(
    exposures: CascadeExposures,
    gamma,
    emb: EmbeddingTable,
    prior: ExposurePrior = UNIFORM_PRIOR,
    positive_weighting: str = "per_pair",
) -> float:
    """Factorized log-likelihood approximation used by the trainer.

    Positive terms are pushed inside the mixture (a Jensen lower bound);
    negative terms factorize over activators, i.e. an inactive node is
    assumed unaligned with every exposer. With ``positive_weighting``
    "per_pair" each (v, u) pair counts with weight 1, matching the training
    loop; "jensen" keeps the prior weights and is the form the lower-bound
    guarantee applies to.
    """
    if positive_weighting not in ("per_pair", "jensen"):
        raise ValueError(f"unknown positive_weighting {positive_weighting!r}")
    g = _gamma_vector(gamma)
    ll = 0.0
    for u, f in exposures.active:
        if positive_weighting == "jensen":
            weights = prior.weights_for(f)
        else:
            weights = [1.0] * len(f)
        th_u, ph_u = emb.theta[u], emb.phi[u]
        for w, v in zip(weights, f):
            if w == 0.0:
                continue
            p = pair_activation_prob(g, th_u, ph_u, emb.phi[v])
            ll += w * math.log(clamp_prob(p))
    for u, f in exposures.inactive:
        th_u, ph_u = emb.theta[u], emb.phi[u]
        for v in f:
            p = pair_activation_prob(g, th_u, ph_u, emb.phi[v])
            ll += math.log(clamp_prob(1.0 - p))
    return ll
