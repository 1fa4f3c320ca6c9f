"""TSV file formats: graph, item topics, activations, embeddings, reports.

All readers are strict: malformed input raises DataIOError with the path
and 1-based line number rather than silently coercing. Lines starting with
``#`` are comments. External ids may be arbitrary strings; they are
densified to contiguous integer indices in first-appearance order and the
mapping is retained so writers can restore the external ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cascades import ActivationLog, DuplicateActivationError
from .graph import DirectedGraph, build_graph
from .model import EmbeddingTable, ItemTopics


class DataIOError(ValueError):
    pass


def _fail(path, lineno: int | None, msg: str) -> None:
    where = f"{path}:{lineno}" if lineno is not None else str(path)
    raise DataIOError(f"{where}: {msg}")


@dataclass
class IdMap:
    """Bidirectional external id <-> dense index map."""

    to_dense: dict[str, int] = field(default_factory=dict)
    to_external: list[str] = field(default_factory=list)

    def intern(self, ext: str) -> int:
        idx = self.to_dense.get(ext)
        if idx is None:
            idx = len(self.to_external)
            self.to_dense[ext] = idx
            self.to_external.append(ext)
        return idx

    def external(self, idx: int) -> str:
        return self.to_external[idx]

    def __len__(self) -> int:
        return len(self.to_external)

    @staticmethod
    def identity(n: int) -> "IdMap":
        ext = [str(i) for i in range(n)]
        return IdMap(to_dense={e: i for i, e in enumerate(ext)}, to_external=ext)


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line or line.startswith("#"):
                continue
            yield lineno, line


# -- graph ------------------------------------------------------------------

def _ordered_id_map(ids: list[str]) -> IdMap:
    """Dense ids in numeric order when every id is a non-negative integer
    (so our own files map back to themselves), first-appearance otherwise."""
    id_map = IdMap()
    unique = list(dict.fromkeys(ids))
    if all(s.isdigit() for s in unique):
        unique.sort(key=int)
    for s in unique:
        id_map.intern(s)
    return id_map


def read_graph(path) -> tuple[DirectedGraph, IdMap]:
    """`src<TAB>dst` per line, meaning dst follows src."""
    raw: list[tuple[str, str]] = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            _fail(path, lineno, f"expected 2 tab-separated columns, got {len(parts)}")
        src, dst = parts
        if src == dst:
            _fail(path, lineno, f"self-loop on node {src!r}")
        raw.append((src, dst))
    id_map = _ordered_id_map([s for e in raw for s in e])
    edges = [(id_map.to_dense[src], id_map.to_dense[dst]) for src, dst in raw]
    g = build_graph(edges, node_count=len(id_map))
    return g, id_map


def write_graph(path, g: DirectedGraph, id_map: IdMap | None = None) -> None:
    id_map = id_map or IdMap.identity(g.node_count)
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges():
            fh.write(f"{id_map.external(u)}\t{id_map.external(v)}\n")


# -- item topics --------------------------------------------------------------

#: row sums within this tolerance of 1 are accepted; farther rows are errors.
ITEM_SUM_TOL = 1e-6
#: rows within this tolerance are taken as exactly normalized (no rescale),
#: which keeps write/read round-trips bit-identical for generated data.
_EXACT_TOL = 1e-12


def read_items(path, expected_topics: int | None = None) -> tuple[list[ItemTopics], IdMap]:
    """`item_id<TAB>g1<TAB>...<TAB>gK` rows; validated and normalized."""
    id_map = IdMap()
    topics: list[ItemTopics] = []
    k_count = expected_topics
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) < 2:
            _fail(path, lineno, "expected an item id and at least one topic weight")
        if k_count is None:
            k_count = len(parts) - 1
        elif len(parts) - 1 != k_count:
            _fail(path, lineno, f"expected {k_count} topic weights, got {len(parts) - 1}")
        ext = parts[0]
        if ext in id_map.to_dense:
            _fail(path, lineno, f"duplicate item id {ext!r}")
        try:
            gamma = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            _fail(path, lineno, "non-numeric topic weight")
        if np.any(gamma < 0):
            _fail(path, lineno, "negative topic weight")
        s = float(gamma.sum())
        if abs(s - 1.0) > ITEM_SUM_TOL:
            _fail(path, lineno, f"topic weights sum to {s!r}, outside 1 +/- {ITEM_SUM_TOL}")
        if abs(s - 1.0) > _EXACT_TOL:
            gamma = gamma / s
        item_idx = id_map.intern(ext)
        topics.append(ItemTopics(item_id=item_idx, gamma=gamma))
    return topics, id_map


def write_items(path, topics: list[ItemTopics], id_map: IdMap | None = None) -> None:
    id_map = id_map or IdMap.identity(len(topics))
    with open(path, "w", encoding="utf-8") as fh:
        for it in topics:
            weights = "\t".join("%.17g" % x for x in it.gamma)
            fh.write(f"{id_map.external(it.item_id)}\t{weights}\n")


# -- activations ---------------------------------------------------------------

def read_activations(path, node_map: IdMap, item_map: IdMap) -> ActivationLog:
    """`t<TAB>item_id<TAB>node_id` rows; sorted per item on ingestion."""
    log = ActivationLog()
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            _fail(path, lineno, f"expected 3 tab-separated columns, got {len(parts)}")
        t_str, item_ext, node_ext = parts
        try:
            t = int(t_str)
        except ValueError:
            _fail(path, lineno, f"non-integer timestamp {t_str!r}")
        if t < 0:
            _fail(path, lineno, f"negative timestamp {t}")
        item = item_map.to_dense.get(item_ext)
        if item is None:
            _fail(path, lineno, f"unknown item id {item_ext!r}")
        node = node_map.to_dense.get(node_ext)
        if node is None:
            _fail(path, lineno, f"unknown node id {node_ext!r}")
        try:
            log.add(t, item, node)
        except DuplicateActivationError:
            _fail(path, lineno, f"duplicate activation of node {node_ext!r} on item {item_ext!r}")
    return log


def write_activations(
    path, log: ActivationLog, node_map: IdMap | None = None, item_map: IdMap | None = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in log.activations():
            item = item_map.external(a.item) if item_map else a.item
            node = node_map.external(a.node) if node_map else a.node
            fh.write(f"{a.t}\t{item}\t{node}\n")


# -- embeddings -----------------------------------------------------------------

def _embedding_header(k_count: int) -> list[str]:
    return (
        ["node_id"]
        + [f"theta_{k}" for k in range(1, k_count + 1)]
        + [f"phi_{k}" for k in range(1, k_count + 1)]
    )


def read_embeddings(path, node_map: IdMap | None = None) -> tuple[EmbeddingTable, IdMap]:
    """Embeddings TSV with header `node_id theta_1..K phi_1..K`.

    When node_map is given, rows are placed at the mapped dense indices and
    every mapped node must be present.
    """
    rows: dict[int, tuple[list[float], list[float]]] = {}
    out_map = node_map or IdMap()
    k_count = None
    header_seen = False
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if not header_seen:
            header_seen = True
            if parts[0] != "node_id":
                _fail(path, lineno, "missing header row starting with 'node_id'")
            if (len(parts) - 1) % 2 != 0 or len(parts) < 3:
                _fail(path, lineno, "header must hold theta_1..K then phi_1..K")
            k_count = (len(parts) - 1) // 2
            expected = _embedding_header(k_count)
            for want, got in zip(expected, parts):
                if want != got:
                    _fail(path, lineno, f"missing or misnamed column {want!r} (got {got!r})")
            continue
        if len(parts) != 2 * k_count + 1:
            _fail(path, lineno, f"expected {2 * k_count + 1} columns, got {len(parts)}")
        ext = parts[0]
        try:
            values = [float(x) for x in parts[1:]]
        except ValueError:
            _fail(path, lineno, "non-numeric embedding value")
        if any(not 0.0 <= x <= 1.0 for x in values):
            bad = next(x for x in values if not 0.0 <= x <= 1.0)
            _fail(path, lineno, f"embedding value {bad!r} outside [0, 1]")
        if node_map is not None:
            idx = node_map.to_dense.get(ext)
            if idx is None:
                _fail(path, lineno, f"unknown node id {ext!r}")
        else:
            idx = out_map.intern(ext)
        if idx in rows:
            _fail(path, lineno, f"duplicate node id {ext!r}")
        rows[idx] = (values[:k_count], values[k_count:])
    if not header_seen:
        _fail(path, None, "empty embeddings file")
    n = len(out_map)
    missing = [out_map.external(i) for i in range(n) if i not in rows]
    if missing:
        _fail(path, None, f"missing embedding rows for nodes {missing[:5]!r}")
    theta = np.array([rows[i][0] for i in range(n)])
    phi = np.array([rows[i][1] for i in range(n)])
    return EmbeddingTable(theta=theta, phi=phi), out_map


def write_embeddings(path, emb: EmbeddingTable, node_map: IdMap | None = None) -> None:
    """Values are printed with 9 significant digits (round trip <= 1e-8)."""
    node_map = node_map or IdMap.identity(emb.n_nodes)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(_embedding_header(emb.n_topics)) + "\n")
        for i in range(emb.n_nodes):
            vals = [*emb.theta[i], *emb.phi[i]]
            fh.write(node_map.external(i) + "\t" + "\t".join("%.9g" % x for x in vals) + "\n")


# -- bundle ---------------------------------------------------------------------

@dataclass
class DatasetBundle:
    """A coherent dataset: graph + items + activations (+ optional embeddings)."""

    graph: DirectedGraph
    topics: list[ItemTopics]
    log: ActivationLog
    embeddings: EmbeddingTable | None
    node_map: IdMap
    item_map: IdMap

    @staticmethod
    def load(graph_path, items_path, activations_path, embeddings_path=None) -> "DatasetBundle":
        graph, node_map = read_graph(graph_path)
        topics, item_map = read_items(items_path)
        log = read_activations(activations_path, node_map, item_map)
        emb = None
        if embeddings_path is not None:
            emb, _ = read_embeddings(embeddings_path, node_map)
        return DatasetBundle(
            graph=graph, topics=topics, log=log,
            embeddings=emb, node_map=node_map, item_map=item_map,
        )


# -- reports ---------------------------------------------------------------------

def write_report(path, report) -> None:
    """Evaluation report: one row per fold plus mean and stdev rows.

    Wall-clock seconds are intentionally not part of the file so reruns with
    the same seeds are byte-identical; timings live on the returned
    FoldMetrics and in CLI output.
    """
    cols = ["fold", "n_train_items", "n_test_items", "n_pairs", "n_positives",
            "auc_roc", "avg_precision"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(cols) + "\n")
        for f in report.folds:
            fh.write(
                f"{f.fold}\t{f.n_train_items}\t{f.n_test_items}\t{f.n_pairs}"
                f"\t{f.n_positives}\t{'%.9g' % f.auc}\t{'%.9g' % f.ap}\n"
            )
        fh.write(f"mean\t\t\t\t\t{'%.9g' % report.mean_auc}\t{'%.9g' % report.mean_ap}\n")
        fh.write(f"stdev\t\t\t\t\t{'%.9g' % report.std_auc}\t{'%.9g' % report.std_ap}\n")


def write_trace(path, trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("restart\tepoch\tn_examples\tloglik\tlr\n")
        for rec in trace.epochs:
            fh.write(
                f"{rec.restart}\t{rec.epoch}\t{rec.n_examples}"
                f"\t{'%.9g' % rec.loglik}\t{'%.9g' % rec.lr}\n"
            )


def write_roc(path, points) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fpr\ttpr\n")
        for fpr, tpr in points:
            fh.write(f"{'%.9g' % fpr}\t{'%.9g' % tpr}\n")


def write_scores(path, pairs, node_map: IdMap | None = None, item_map: IdMap | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("item_id\tv\tu\tscore\n")
        for p in pairs:
            item = item_map.external(p.item) if item_map else p.item
            v = node_map.external(p.v) if node_map else p.v
            u = node_map.external(p.u) if node_map else p.u
            fh.write(f"{item}\t{v}\t{u}\t{'%.9g' % p.score}\n")


def read_pair_file(path, node_map: IdMap, item_map: IdMap) -> list[tuple[int, int, int]]:
    """`item_id<TAB>v<TAB>u` triples for scoring."""
    out = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            _fail(path, lineno, f"expected 3 tab-separated columns, got {len(parts)}")
        item_ext, v_ext, u_ext = parts
        item = item_map.to_dense.get(item_ext)
        if item is None:
            _fail(path, lineno, f"unknown item id {item_ext!r}")
        v = node_map.to_dense.get(v_ext)
        if v is None:
            _fail(path, lineno, f"unknown node id {v_ext!r}")
        u = node_map.to_dense.get(u_ext)
        if u is None:
            _fail(path, lineno, f"unknown node id {u_ext!r}")
        out.append((item, v, u))
    return out
