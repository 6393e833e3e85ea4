"""Command-line entry point: ``critgraph <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .evaluate import EvalReport, benchmark, pairwise_accuracy, timed_prediction, top_n_accuracy, write_reports
from .generators import GeneratorSpec, generate, make_corpus
from .graph import GraphError
from .model import GnnHyperparams
from .oracle import ElementKind, score_all
from .train import TrainConfig, TrainingDiverged, fine_tune, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("critgraph")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which is our data-error code
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_graph(path: str):
    g, report = cio.read_graph(path)
    log.info("%s: %s", path, report.summary())
    return g


def _load_model(path: str):
    return cio.load_model(path)


def cmd_generate(args) -> None:
    spec = GeneratorSpec(args.family, args.nodes, args.m, args.p, args.seed)
    text = cio.format_edge_list(generate(spec))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_score_exact(args) -> None:
    g = _load_graph(args.graph)
    table = score_all(g, args.kind, args.metric, workers=args.threads)
    cio.write_table(args.out, table)


def cmd_make_corpus(args) -> None:
    corpus = make_corpus(
        args.count, (args.min_size, args.max_size), args.family, args.metric, args.kind, args.seed,
        m=args.m, p=args.p, workers=args.threads,
    )
    cio.save_corpus(args.out, corpus, meta={"seed": args.seed, "m": args.m, "p": args.p})


def _read_config(path: str | None) -> tuple[dict, dict]:
    if not path:
        return {}, {}
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise cio.DataError(f"{path}: {exc}") from None
    unknown = set(doc) - {"train", "model"}
    if unknown:
        raise cio.DataError(f"{path}: unknown sections {sorted(unknown)}")
    return doc.get("train", {}), doc.get("model", {})


def cmd_train(args) -> None:
    corpus = cio.load_corpus(args.corpus)
    train_opts, model_opts = _read_config(args.config)
    try:
        cfg = TrainConfig.from_dict(train_opts)
    except (TypeError, ValueError) as exc:
        raise cio.DataError(f"bad training options: {exc}") from None
    if args.from_model:
        base = _load_model(args.from_model)
        if base.kind is not corpus.kind:
            raise UsageError(f"base model scores {base.kind.value}s but the corpus holds {corpus.kind.value} labels")
        model, history = fine_tune(base, corpus, cfg)
    else:
        hyper = GnnHyperparams(**{"kind": corpus.kind, **model_opts})
        if hyper.kind is not corpus.kind:
            raise UsageError("config kind disagrees with the corpus")
        model, history = train(corpus, hyper, cfg)
    cio.save_model(args.out, model)
    log_path = Path(args.log) if args.log else Path(str(args.out) + ".log.jsonl")
    with open(log_path, "w") as fh:
        for rec in history:
            fh.write(json.dumps(rec) + "\n")


def cmd_predict(args) -> None:
    g = _load_graph(args.graph)
    model = _load_model(args.model)
    if ElementKind(args.kind) is not model.kind:
        raise UsageError(f"model was trained to score {model.kind.value}s, not {args.kind}s")
    table, seconds = timed_prediction(g, model, args.seed)
    log.info("predicted %d %ss in %.3fs", len(table), model.kind.value, seconds)
    cio.write_table(args.out, table)


def cmd_evaluate(args) -> None:
    g = _load_graph(args.graph)
    model = _load_model(args.model)
    universe = g.node_count if model.kind is ElementKind.NODE else g.edge_count
    truth = cio.read_table(args.truth, model.kind, model.metric, universe=universe)
    if truth.skipped:
        raise cio.DataError(f"{args.truth} covers {len(truth)} of {universe} elements")
    predicted, seconds = timed_prediction(g, model, args.seed)
    report = EvalReport(
        Path(args.graph).name, model.kind.value, model.metric.value, Path(args.model).name, args.pct,
        top_n_accuracy(predicted, truth, args.pct), pairwise_accuracy(predicted, truth, args.pairs, args.seed),
        seconds,
    )
    write_reports(args.out, [report])
    print(f"top-{args.pct:g}% accuracy {report.top_accuracy:.4f}  pairwise {report.pairwise_accuracy:.4f}")


def cmd_bench(args) -> None:
    g = _load_graph(args.graph)
    model = _load_model(args.model)
    truth = None
    if args.truth:
        universe = g.node_count if model.kind is ElementKind.NODE else g.edge_count
        truth = cio.read_table(args.truth, model.kind, model.metric, universe=universe)
    report = benchmark(
        g, model, pct=args.pct, truth=truth, with_oracle=args.with_oracle,
        oracle_workers=args.threads or 1, graph_id=Path(args.graph).name,
        model_id=Path(args.model).name, seed=args.seed,
    )
    write_reports(args.out, [report])
    line = f"predict {report.predict_seconds:.4f}s"
    if report.oracle_seconds is not None:
        line += f"  oracle {report.oracle_seconds:.2f}s"
    print(line)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="critgraph", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def kind_metric(sp, metric=True):
        sp.add_argument("--kind", choices=["node", "link"], required=True)
        if metric:
            sp.add_argument("--metric", choices=["egr", "ws4"], required=True)

    s = sub.add_parser("generate", help="sample a power-law (cluster) graph")
    s.add_argument("--family", choices=["pl", "plc"], required=True)
    s.add_argument("--nodes", type=int, required=True)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--p", type=float, default=0.3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("score-exact", help="exact criticality by exhaustive removal")
    s.add_argument("--graph", required=True)
    kind_metric(s)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_score_exact)

    s = sub.add_parser("make-corpus", help="generate and oracle-label a training corpus")
    s.add_argument("--family", choices=["pl", "plc"], required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--min-size", type=int, required=True)
    s.add_argument("--max-size", type=int, required=True)
    kind_metric(s)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--p", type=float, default=0.3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_make_corpus)

    s = sub.add_parser("train", help="train (or fine-tune with --from) a ranking model")
    s.add_argument("--corpus", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--from", dest="from_model")
    s.add_argument("--log")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="score a graph with a trained model")
    s.add_argument("--graph", required=True)
    s.add_argument("--model", required=True)
    kind_metric(s, metric=False)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("evaluate", help="compare model ranking with an exact table")
    s.add_argument("--graph", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--pct", type=float, default=5.0)
    s.add_argument("--pairs", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("bench", help="time model prediction against the oracle")
    s.add_argument("--graph", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--with-oracle", action="store_true")
    s.add_argument("--truth")
    s.add_argument("--pct", type=float, default=5.0)
    s.add_argument("--threads", type=int, help="oracle workers (default: sequential)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"critgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"critgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDiverged, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"critgraph: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"critgraph: error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except (cio.DataError, GraphError, ValueError, KeyError) as exc:
        print(f"critgraph: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
