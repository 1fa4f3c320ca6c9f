"""Activation logs and exposure sets.

An activation is a node adopting an item at an integer time step; a cascade
is all activations of one item. The exposure set of a node u on item i is
the ordered list of u's in-neighbors that activated strictly before u (for
inactive u: all active in-neighbors), which is what both the likelihood and
the trainer condition on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import DirectedGraph


class DuplicateActivationError(ValueError):
    """A (item, node) pair activated more than once."""


@dataclass(slots=True)
class Activation:
    t: int
    item: int
    node: int
    #: predecessor that exposed the node (generator attribution); None for
    #: seeds and for ingested real-world data.
    exposer: int | None = None


@dataclass
class _Cascade:
    nodes: list[int] = field(default_factory=list)
    times: list[int] = field(default_factory=list)
    exposers: list[int | None] = field(default_factory=list)
    _member: set[int] = field(default_factory=set)
    _sorted: bool = True

    def add(self, t: int, node: int, exposer: int | None) -> None:
        if node in self._member:
            raise DuplicateActivationError(f"node {node} already active")
        if t < 0:
            raise ValueError(f"negative timestamp {t}")
        if self.times and t < self.times[-1]:
            self._sorted = False
        self.nodes.append(node)
        self.times.append(t)
        self.exposers.append(exposer)
        self._member.add(node)

    def ensure_sorted(self) -> None:
        if self._sorted:
            return
        order = sorted(range(len(self.times)), key=self.times.__getitem__)
        self.nodes = [self.nodes[i] for i in order]
        self.times = [self.times[i] for i in order]
        self.exposers = [self.exposers[i] for i in order]
        self._sorted = True


class ActivationLog:
    """All observed activations, grouped per item.

    Within an item, activations are kept in (time, ingestion order); at most
    one activation per (item, node).
    """

    def __init__(self, activations: list[Activation] | None = None):
        self._cascades: dict[int, _Cascade] = {}
        self._count = 0
        for a in activations or []:
            self.add(a.t, a.item, a.node, a.exposer)

    def add(self, t: int, item: int, node: int, exposer: int | None = None) -> None:
        casc = self._cascades.get(item)
        if casc is None:
            casc = self._cascades[item] = _Cascade()
        try:
            casc.add(t, node, exposer)
        except DuplicateActivationError:
            raise DuplicateActivationError(
                f"duplicate activation of node {node} on item {item}"
            ) from None
        self._count += 1

    def __len__(self) -> int:
        return self._count

    def item_ids(self) -> list[int]:
        return sorted(self._cascades)

    def cascade_nodes(self, item: int) -> list[int]:
        """Active nodes of an item in activation order (empty if unseen item)."""
        casc = self._cascades.get(item)
        if casc is None:
            return []
        casc.ensure_sorted()
        return casc.nodes

    def cascade_times(self, item: int) -> list[int]:
        casc = self._cascades.get(item)
        if casc is None:
            return []
        casc.ensure_sorted()
        return casc.times

    def cascade_exposers(self, item: int) -> list[int | None]:
        casc = self._cascades.get(item)
        if casc is None:
            return []
        casc.ensure_sorted()
        return casc.exposers

    def time_of(self, item: int) -> dict[int, int]:
        """node -> activation time for one item."""
        return dict(zip(self.cascade_nodes(item), self.cascade_times(item)))

    def activations(self) -> list[Activation]:
        """All activations sorted by (item, time, ingestion order)."""
        out = []
        for item in self.item_ids():
            casc = self._cascades[item]
            casc.ensure_sorted()
            out.extend(
                Activation(t=t, item=item, node=n, exposer=e)
                for t, n, e in zip(casc.times, casc.nodes, casc.exposers)
            )
        return out

    def singleton_items(self) -> list[int]:
        """Items whose cascade never left the seed (kept, but yield no pairs)."""
        return [i for i, c in sorted(self._cascades.items()) if len(c.nodes) == 1]

    def restricted_to(self, item_ids) -> "ActivationLog":
        """Sub-log containing only the given items (cheap shallow copy)."""
        keep = set(item_ids)
        sub = ActivationLog()
        for item, casc in self._cascades.items():
            if item in keep:
                sub._cascades[item] = casc
                sub._count += len(casc.nodes)
        return sub


@dataclass(slots=True)
class CascadeExposures:
    """Per-item exposure sets, the conditioning sets of the likelihood.

    ``active`` holds (u, F_u) for active non-seed nodes where F_u lists u's
    in-neighbors active strictly before u, in activation order. ``inactive``
    holds (u, F_u) for never-active nodes with at least one active
    in-neighbor; there F_u lists all active in-neighbors. Nodes with empty
    exposure sets are omitted on both sides.
    """

    item: int
    active: list[tuple[int, list[int]]]
    inactive: list[tuple[int, list[int]]]


def compute_exposures(g: DirectedGraph, log: ActivationLog, item: int) -> CascadeExposures:
    nodes = log.cascade_nodes(item)
    times = log.cascade_times(item)
    t_of = dict(zip(nodes, times))
    active: list[tuple[int, list[int]]] = []
    inactive: list[tuple[int, list[int]]] = []
    for u in range(g.node_count):
        preds = set(g.in_adjacency[u])
        tu = t_of.get(u)
        if tu is None:
            f = [v for v in nodes if v in preds]
            if f:
                inactive.append((u, f))
        else:
            f = [v for v, tv in zip(nodes, times) if tv < tu and v in preds]
            if f:
                active.append((u, f))
    return CascadeExposures(item=item, active=active, inactive=inactive)
