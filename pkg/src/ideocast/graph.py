"""Directed follower graph.

Edge semantics: an edge (u, v) means v follows u, so content posted by u
reaches v and may be adopted by v. Nodes are dense non-negative integer
indices 0..n-1; remapping of external ids happens at ingestion (dataio).

Graphs are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class GraphError(ValueError):
    """Invalid graph construction input (self-loop, bad sizes)."""


@dataclass(frozen=True)
class DirectedGraph:
    node_count: int
    out_adjacency: list[list[int]] = field(repr=False)
    in_adjacency: list[list[int]] = field(repr=False)

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.out_adjacency)

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (source, follower) pairs, sorted."""
        return [(u, v) for u in range(self.node_count) for v in self.out_adjacency[u]]

    def out_neighbors(self, u: int) -> list[int]:
        """Followers of u (nodes u's content flows to)."""
        self._check_node(u)
        return self.out_adjacency[u]

    def in_neighbors(self, u: int) -> list[int]:
        """Nodes that u follows (nodes whose content reaches u)."""
        self._check_node(u)
        return self.in_adjacency[u]

    def density(self) -> float:
        n = self.node_count
        if n < 2:
            return 0.0
        return self.edge_count / (n * (n - 1))

    def _check_node(self, u: int) -> None:
        if not 0 <= u < self.node_count:
            raise IndexError(f"node {u} out of range [0, {self.node_count})")

    def __repr__(self) -> str:
        return f"DirectedGraph(nodes={self.node_count}, edges={self.edge_count})"


def build_graph(edges: list[tuple[int, int]], node_count: int | None = None) -> DirectedGraph:
    """Build a graph from (u, v) pairs; duplicates dropped, self-loops rejected.

    node_count defaults to max id + 1; pass it explicitly to keep trailing
    isolated nodes.
    """
    max_id = -1
    seen: set[tuple[int, int]] = set()
    for u, v in edges:
        if u < 0 or v < 0:
            raise GraphError(f"negative node id in edge ({u}, {v})")
        if u == v:
            raise GraphError(f"self-loop on node {u}")
        if u > max_id:
            max_id = u
        if v > max_id:
            max_id = v
        seen.add((u, v))
    n = max_id + 1 if node_count is None else node_count
    if n < max_id + 1:
        raise GraphError(f"node_count {node_count} smaller than max node id {max_id}")
    out_adj: list[list[int]] = [[] for _ in range(n)]
    in_adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in sorted(seen):
        out_adj[u].append(v)
        in_adj[v].append(u)
    for lst in in_adj:
        lst.sort()
    return DirectedGraph(node_count=n, out_adjacency=out_adj, in_adjacency=in_adj)


def complete_graph(n: int) -> DirectedGraph:
    """All ordered pairs (u, v), u != v; n(n-1) edges."""
    if n < 1:
        raise GraphError("complete_graph requires n >= 1")
    out_adj = [[v for v in range(n) if v != u] for u in range(n)]
    in_adj = [list(row) for row in out_adj]
    return DirectedGraph(node_count=n, out_adjacency=out_adj, in_adjacency=in_adj)


def barabasi_albert_graph(n: int, m: int, rng_seed: int) -> DirectedGraph:
    """Preferential-attachment graph, materialized symmetrically.

    The undirected skeleton starts from a clique on the first m nodes; each
    later node attaches to m distinct existing nodes chosen proportionally
    to degree. Every undirected edge becomes two directed edges, so exposure
    is symmetric. Deterministic for a fixed seed.
    """
    import numpy as np

    if n < 1:
        raise GraphError("barabasi_albert_graph requires n >= 1")
    if not 1 <= m < n:
        raise GraphError(f"barabasi_albert_graph requires 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(rng_seed)
    undirected: list[tuple[int, int]] = [(i, j) for i in range(m) for j in range(i + 1, m)]
    # degree-weighted urn: each node appears once per incident edge
    urn: list[int] = [i for i in range(m) for _ in range(m - 1)]
    for source in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(urn[int(rng.integers(len(urn)))] if urn else int(rng.integers(source)))
        for t in sorted(targets):
            undirected.append((t, source))
            urn.append(t)
            urn.append(source)
    directed = [(u, v) for u, v in undirected] + [(v, u) for u, v in undirected]
    return build_graph(directed, node_count=n)


def in_neighbors(g: DirectedGraph, u: int) -> list[int]:
    """Predecessors of u, in stable ascending order."""
    return g.in_neighbors(u)
