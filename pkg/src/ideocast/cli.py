"""Command line interface.

Subcommands cover the whole pipeline: `generate` synthetic datasets, `fit`
embeddings from cascade files, `predict` scores for explicit triples,
`evaluate` with item-level splits, and `reproduce-synthetic` for the full
synthetic benchmark grid. Every command is deterministic given --seed and
--threads 1; exit code is 0 on success, otherwise a single-line
`error: ...` goes to stderr.

A config file (`--config`, key=value lines, `#` comments) supplies option
values; explicit command-line flags win over the file, which wins over
built-in defaults. `--print-config` shows the resolved defaults and exits.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio
from .evaluation import (
    SplitPlan,
    evaluate,
    roc_points,
    run_synthetic_experiment,
)
from .generator import GenConfig, GraphSpec, generate_dataset
from .model import clamp_prob
from .trainer import TrainConfig, fit


class CliError(Exception):
    """Bad usage or bad input; message is printed as a single line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


_GEN_DEFAULTS = {
    "graph": "complete:100",
    "topics": 4,
    "polarization": 4.0,
    "alpha": 0.9,
    "beta": 0.1,
    "topic_prior": 0.125,
    "items": 1000,
    "seed": 0,
}

_TRAIN_DEFAULTS = {
    "epochs": 50,
    "lr_init": 0.1,
    "lr_floor": 0.01,
    "sample": 10,
    "negative_ratio": 2.0,
    "clamp_eps": 1e-4,
    "restarts": 1,
    "seed": 0,
}

_EVAL_DEFAULTS = {
    **_TRAIN_DEFAULTS,
    "train_frac": 0.9,
    "folds": 0,
    "eval_seed": 0,
    "macro": False,
}

#: benchmark grid defaults; epochs trimmed so the 1e5-item rows stay within
#: desk-scale runtime.
_GRID_DEFAULTS = {
    **_TRAIN_DEFAULTS,
    "epochs": 15,
    "nodes": 100,
    "ba_m": 10,
    "items_grid": "1000,10000,100000",
    "p_grid": "1,4,16",
    "graphs": "complete,ba",
    "seeds": "1,2,3",
    "train_frac": 0.9,
}


def _parse_graph_spec(text: str) -> GraphSpec:
    parts = text.split(":")
    try:
        if parts[0] == "complete" and len(parts) == 2:
            return GraphSpec.complete(int(parts[1]))
        if parts[0] in ("ba", "barabasi_albert") and len(parts) == 3:
            return GraphSpec.barabasi_albert(int(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise CliError(f"bad graph spec {text!r}: {exc}") from None
    raise CliError(f"bad graph spec {text!r}; expected complete:N or ba:N:M")


def _load_config_file(path: str) -> dict[str, str]:
    values = {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {path}")
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args, defaults: dict, config_path: str | None):
    """builtin defaults < config file < explicit flags (argparse leaves None)."""
    file_values = _load_config_file(config_path) if config_path else {}
    resolved = {}
    for key, builtin in defaults.items():
        explicit = getattr(args, key, None)
        if explicit is not None:
            resolved[key] = explicit
        elif key in file_values:
            caster = type(builtin) if not isinstance(builtin, bool) else _parse_bool
            resolved[key] = caster(file_values[key])
        else:
            resolved[key] = builtin
    return argparse.Namespace(**resolved)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise CliError(f"bad boolean {text!r}")


def _print_config(defaults: dict, config_path: str | None) -> int:
    cfg = _resolve(argparse.Namespace(), defaults, config_path)
    for key in sorted(defaults):
        print(f"{key}={getattr(cfg, key)}")
    return 0


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs,
        lr_init=cfg.lr_init,
        lr_floor=cfg.lr_floor,
        seed_sample_size=cfg.sample,
        negative_ratio=cfg.negative_ratio,
        clamp_eps=cfg.clamp_eps,
        n_restarts=cfg.restarts,
        rng_seed=cfg.seed,
    )


def _add_train_flags(p: _Parser) -> None:
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr-init", dest="lr_init", type=float)
    p.add_argument("--lr-floor", dest="lr_floor", type=float)
    p.add_argument("--sample", type=int, help="activators sampled per item per epoch")
    p.add_argument("--negative-ratio", dest="negative_ratio", type=float)
    p.add_argument("--clamp-eps", dest="clamp_eps", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)


def _add_common(p: _Parser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--print-config", action="store_true", help="print resolved defaults and exit")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--verbose", action="store_true")


# -- commands ----------------------------------------------------------------

def _require(args, *names) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise CliError(f"missing required arguments: {', '.join(missing)}")


def cmd_generate(args) -> int:
    if args.print_config:
        return _print_config(_GEN_DEFAULTS, args.config)
    _require(args, "out")
    cfg = _resolve(args, _GEN_DEFAULTS, args.config)
    if cfg.items < 1:
        raise CliError("--items must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gen = GenConfig(
        n_topics=cfg.topics,
        polarization=cfg.polarization,
        alpha=cfg.alpha,
        beta=cfg.beta,
        topic_concentration=cfg.topic_prior,
        n_items=cfg.items,
        graph_spec=_parse_graph_spec(cfg.graph),
        rng_seed=cfg.seed,
    )
    t0 = time.perf_counter()
    g, emb, topics, log = generate_dataset(gen)
    dataio.write_graph(out / "graph.tsv", g)
    dataio.write_items(out / "items.tsv", topics)
    dataio.write_activations(out / "activations.tsv", log)
    dataio.write_embeddings(out / "embeddings.tsv", emb)
    if args.verbose:
        singles = len(log.singleton_items())
        print(
            f"generated {cfg.items} items, {len(log)} activations "
            f"({singles} single-node cascades) in {time.perf_counter() - t0:.1f}s",
            file=sys.stderr,
        )
    print(f"wrote graph.tsv items.tsv activations.tsv embeddings.tsv to {out}")
    return 0


def cmd_fit(args) -> int:
    if args.print_config:
        return _print_config(_TRAIN_DEFAULTS, args.config)
    _require(args, "graph", "items", "activations", "out")
    cfg = _resolve(args, _TRAIN_DEFAULTS, args.config)
    bundle = dataio.DatasetBundle.load(args.graph, args.items, args.activations)
    tc = _train_config(cfg)
    t0 = time.perf_counter()
    emb, trace = fit(bundle.graph, bundle.topics, bundle.log, tc)
    seconds = time.perf_counter() - t0
    dataio.write_embeddings(args.out, emb, bundle.node_map)
    if args.trace:
        dataio.write_trace(args.trace, trace)
    for restart, ll in enumerate(trace.restart_logliks):
        marker = " (best)" if restart == trace.best_restart else ""
        print(f"restart {restart}: loglik {ll:.6g}{marker}")
    if args.verbose:
        print(f"fit took {seconds:.1f}s", file=sys.stderr)
    print(f"wrote embeddings for {emb.n_nodes} nodes to {args.out}")
    return 0


def cmd_predict(args) -> int:
    if args.print_config:
        return _print_config({}, args.config)
    _require(args, "embeddings", "items", "pairs", "out")
    emb, node_map = dataio.read_embeddings(args.embeddings)
    topics, item_map = dataio.read_items(args.items)
    triples = dataio.read_pair_file(args.pairs, node_map, item_map)
    gamma_of = {it.item_id: it.gamma for it in topics}
    from .evaluation import ScoredPair

    pairs = []
    for item, v, u in triples:
        gam = gamma_of[item]
        score = float(np.sum(gam * emb.theta[u] * (
            emb.phi[u] * emb.phi[v] + (1.0 - emb.phi[u]) * (1.0 - emb.phi[v])
        )))
        pairs.append(ScoredPair(item=item, v=v, u=u, label=0, score=clamp_prob(score)))
    _write_predictions(args.out, pairs, node_map, item_map)
    print(f"scored {len(pairs)} pairs to {args.out}")
    return 0


def _write_predictions(path, pairs, node_map, item_map) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("item_id\tv\tu\tscore\n")
        for p in pairs:
            fh.write(
                f"{item_map.external(p.item)}\t{node_map.external(p.v)}"
                f"\t{node_map.external(p.u)}\t{'%.9g' % p.score}\n"
            )


def cmd_evaluate(args) -> int:
    if args.print_config:
        return _print_config(_EVAL_DEFAULTS, args.config)
    _require(args, "graph", "items", "activations", "out")
    cfg = _resolve(args, _EVAL_DEFAULTS, args.config)
    bundle = dataio.DatasetBundle.load(args.graph, args.items, args.activations)
    plan = SplitPlan.kfold(cfg.folds) if cfg.folds else SplitPlan.holdout(cfg.train_frac)
    report = evaluate(
        bundle.graph,
        bundle.topics,
        bundle.log,
        plan,
        _train_config(cfg),
        eval_seed=cfg.eval_seed,
        macro_average=cfg.macro,
    )
    dataio.write_report(args.out, report)
    if args.roc:
        dataio.write_roc(args.roc, roc_points(report.pooled_pairs))
    for f in report.folds:
        print(
            f"fold {f.fold}: auc {f.auc:.4f} ap {f.ap:.4f} "
            f"({f.n_pairs} pairs, {f.seconds:.1f}s)"
        )
    print(f"mean auc {report.mean_auc:.4f} +/- {report.std_auc:.4f}  "
          f"mean ap {report.mean_ap:.4f} +/- {report.std_ap:.4f}")
    return 0


def _grid_row(task):
    kind, p, n_items, seed, tc_kwargs, nodes, ba_m, train_frac = task
    tc = TrainConfig(**tc_kwargs)
    res = run_synthetic_experiment(
        kind, p, n_items, seed, tc, n_nodes=nodes, ba_m=ba_m, train_frac=train_frac
    )
    return res


def cmd_reproduce_synthetic(args) -> int:
    if args.print_config:
        return _print_config(_GRID_DEFAULTS, args.config)
    _require(args, "out")
    cfg = _resolve(args, _GRID_DEFAULTS, args.config)
    graphs = [s.strip() for s in cfg.graphs.split(",") if s.strip()]
    items_grid = [int(s) for s in cfg.items_grid.split(",")]
    p_grid = [float(s) for s in cfg.p_grid.split(",")]
    seeds = [int(s) for s in cfg.seeds.split(",")]
    base_p = 4.0 if 4.0 in p_grid else p_grid[0]
    base_items = 10000 if 10000 in items_grid else items_grid[-1]
    tc_kwargs = dict(
        epochs=cfg.epochs, lr_init=cfg.lr_init, lr_floor=cfg.lr_floor,
        seed_sample_size=cfg.sample, negative_ratio=cfg.negative_ratio,
        clamp_eps=cfg.clamp_eps, n_restarts=cfg.restarts,
    )
    cells = []
    for kind in graphs:
        for n_items in items_grid:
            cells.append((kind, base_p, n_items))
        for p in p_grid:
            if (kind, p, base_items) not in cells:
                cells.append((kind, p, base_items))
    tasks = [
        (kind, p, n_items, seed, {**tc_kwargs, "rng_seed": seed * 1000 + 1},
         cfg.nodes, cfg.ba_m, cfg.train_frac)
        for (kind, p, n_items) in cells
        for seed in seeds
    ]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_grid_row, tasks))
    else:
        results = [_grid_row(t) for t in tasks]
    by_cell: dict[tuple, list] = {}
    for res in results:
        by_cell.setdefault((res.graph, res.polarization, res.n_items), []).append(res)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid_path = out_dir / "synthetic_grid.tsv"
    with open(grid_path, "w", encoding="utf-8") as fh:
        fh.write("graph\tpolarization\tn_items\tn_seeds\tauc_mean\tauc_std\tap_mean\tap_std\n")
        for (kind, p, n_items), rs in by_cell.items():
            aucs = np.array([r.auc for r in rs])
            aps = np.array([r.ap for r in rs])
            fh.write(
                f"{kind}\t{p:g}\t{n_items}\t{len(rs)}\t{aucs.mean():.9g}"
                f"\t{aucs.std():.9g}\t{aps.mean():.9g}\t{aps.std():.9g}\n"
            )

    for kind in graphs:
        print(f"\n[{kind}] items sweep (p={base_p:g})")
        print(f"{'Num. items':>12}  {'AUC ROC':>8}  {'Avg. Prec.':>10}")
        for n_items in items_grid:
            rs = by_cell[(kind, base_p, n_items)]
            print(f"{n_items:>12}  {np.mean([r.auc for r in rs]):8.3f}"
                  f"  {np.mean([r.ap for r in rs]):10.3f}")
        print(f"\n[{kind}] polarization sweep (items={base_items})")
        print(f"{'p':>12}  {'AUC ROC':>8}  {'Avg. Prec.':>10}")
        for p in p_grid:
            rs = by_cell[(kind, p, base_items)]
            print(f"{p:>12g}  {np.mean([r.auc for r in rs]):8.3f}"
                  f"  {np.mean([r.ap for r in rs]):10.3f}")
    print(f"\nwrote {grid_path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="ideocast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a synthetic cascade dataset")
    p.add_argument("--out", help="output directory")
    p.add_argument("--graph", help="complete:N or ba:N:M")
    p.add_argument("--topics", type=int)
    p.add_argument("--polarization", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--topic-prior", dest="topic_prior", type=float)
    p.add_argument("--items", type=int)
    p.add_argument("--seed", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="infer embeddings from cascades")
    p.add_argument("--graph")
    p.add_argument("--items")
    p.add_argument("--activations")
    p.add_argument("--out", help="embeddings TSV to write")
    p.add_argument("--trace", help="per-epoch objective TSV to write")
    _add_train_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score (item, v, u) triples")
    p.add_argument("--embeddings")
    p.add_argument("--items")
    p.add_argument("--pairs", help="TSV of item_id<TAB>v<TAB>u")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="split, fit, and score held-out pairs")
    p.add_argument("--graph")
    p.add_argument("--items")
    p.add_argument("--activations")
    p.add_argument("--out", help="report TSV to write")
    p.add_argument("--roc", help="ROC curve TSV to write")
    p.add_argument("--train-frac", dest="train_frac", type=float)
    p.add_argument("--folds", type=int, help="k-fold instead of holdout")
    p.add_argument("--eval-seed", dest="eval_seed", type=int)
    p.add_argument("--macro", action="store_true", default=None,
                   help="per-item macro metrics instead of pooled")
    _add_train_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "reproduce-synthetic",
        help="run the synthetic benchmark grid and print summary tables",
    )
    p.add_argument("--out", help="output directory for the grid TSV")
    p.add_argument("--nodes", type=int)
    p.add_argument("--ba-m", dest="ba_m", type=int)
    p.add_argument("--items-grid", dest="items_grid")
    p.add_argument("--p-grid", dest="p_grid")
    p.add_argument("--graphs")
    p.add_argument("--seeds")
    p.add_argument("--train-frac", dest="train_frac", type=float)
    _add_train_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_reproduce_synthetic)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
