"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import bench, classify, embeddings, features, generators
from .errors import DataError, NetLowRankError, NumericalError
from .graph import load_graph, save_graph, to_dense

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker/BLAS threads (default 1)")
    p.add_argument("--format", choices=["auto", "edge-list", "matrix-market"], default="auto",
                   help="graph file format")


def build_parser():
    parser = _Parser(prog="netlowrank", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate a random graph")
    _common(p)
    p.add_argument("model", choices=generators.MODELS)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, help="edge probability (erdos-renyi)")
    p.add_argument("--m-attach", type=int, help="edges per new node (barabasi-albert)")
    p.add_argument("--weights", help="file with one expected degree per line (chung-lu)")
    p.add_argument("--exponent", type=float, default=2.5, help="power-law exponent (chung-lu)")
    p.add_argument("--w-min", type=float, default=1.0)
    p.add_argument("--w-max", type=float, default=100.0)
    p.add_argument("--hubs", type=int, help="number of stars (star-noise)")
    p.add_argument("--k-half", type=int, help="lattice neighbors per side (ring-lattice-noise)")
    p.add_argument("--p-noise", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--spec-out", help="also write the generator spec as JSON")

    p = sub.add_parser("features", help="compute structural features of graphs")
    _common(p)
    p.add_argument("graphs", nargs="+")
    p.add_argument("--out", help="output file (.csv or .json); stdout if omitted")
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")

    p = sub.add_parser("embed", help="compute a TSVD or LPCA embedding")
    _common(p)
    p.add_argument("graph")
    p.add_argument("--method", choices=embeddings.METHODS, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out", required=True, help="binary embedding container")
    p.add_argument("--text", help="also write a plain-text dump")

    p = sub.add_parser("reconstruct", help="binarize an embedding back into a graph")
    _common(p)
    p.add_argument("embedding")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--compare", help="original graph; prints a mismatch report")

    p = sub.add_parser("min-rank", help="smallest ladder rank reconstructing a graph exactly")
    _common(p)
    p.add_argument("graph")
    p.add_argument("--method", choices=embeddings.METHODS, default=embeddings.LPCA)
    p.add_argument("--ladder", type=_int_list, default=list(embeddings.DEFAULT_LADDER))
    p.add_argument("--seeds", type=int, default=3)

    p = sub.add_parser("classify", help="cross-validate a classifier on a feature CSV")
    _common(p)
    p.add_argument("features_csv", help="CSV from `features`; a `label` column is used if present")
    p.add_argument("--labels", help="file with one class label per line, in row order")
    p.add_argument("--classifier", choices=["svm", "knn"], default="svm")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--k-neighbors", type=int, default=5)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--raw", action="store_true", help="skip the log1p transform of count columns")
    p.add_argument("--drop-size", action="store_true", help="drop node and edge counts")
    p.add_argument("--out", help="write the CV report JSON here")

    p = sub.add_parser("pipeline", help="run the full rank-sweep experiment")
    _common(p)
    p.add_argument("config", nargs="?", help="experiment config JSON (default: surrogate corpus)")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--write-default-config", metavar="PATH", help="write the default config and exit")

    p = sub.add_parser("bench-time", help="time embeddings of one graph")
    _common(p)
    p.add_argument("graph")
    p.add_argument("--methods", default="tsvd,lpca")
    p.add_argument("--ranks", type=_int_list, default=[16, 32, 64])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out", help="CSV output; stdout if omitted")
    return parser


def _write_text(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args):
    m = args.model
    if m == "erdos-renyi":
        params = {"n": args.n, "p": args.p}
    elif m == "barabasi-albert":
        params = {"n": args.n, "m_attach": args.m_attach}
    elif m == "chung-lu":
        if args.weights:
            params = {"weights": np.loadtxt(args.weights, ndmin=1).tolist()}
        else:
            params = {"n": args.n, "exponent": args.exponent, "w_min": args.w_min, "w_max": args.w_max}
    elif m == "star-noise":
        params = {"n": args.n, "hubs": args.hubs, "p_noise": args.p_noise}
    else:
        params = {"n": args.n, "k_half": args.k_half, "p_noise": args.p_noise}
    missing = [k for k, v in params.items() if v is None]
    if missing:
        raise UsageError(f"{m} needs --{missing[0].replace('_', '-')}")
    spec = generators.GeneratorSpec(m, params, args.seed)
    g = spec.generate()
    save_graph(g, args.out, "matrix-market" if args.format == "matrix-market" else "edge-list")
    if args.spec_out:
        _write_text(spec.to_json() + "\n", args.spec_out)
    print(f"wrote {g!r} to {args.out}", file=sys.stderr)


def cmd_features(args):
    rows = []
    for path in args.graphs:
        fv = features.extract_features(load_graph(path, args.format))
        rows.append((path, fv))
    as_json = args.json or (args.out or "").endswith(".json")
    if as_json:
        payload = [{"graph": p, **fv.to_dict()} for p, fv in rows]
        _write_text(json.dumps(payload if len(payload) > 1 else payload[0], indent=1) + "\n", args.out)
        return
    lines = [",".join(["graph"] + features.FeatureVector.header())]
    lines += [",".join([p] + fv.to_csv_row()) for p, fv in rows]
    _write_text("\n".join(lines) + "\n", args.out)


def cmd_embed(args):
    A = to_dense(load_graph(args.graph, args.format))
    e = embeddings.embed(A, args.method, args.rank, seed=args.seed, max_iters=args.max_iters)
    e.save(args.out)
    if args.text:
        e.dump_text(args.text)
    info = e.header()
    if e.warning:
        info["warning"] = e.warning
    print(json.dumps(info), file=sys.stderr)


def cmd_reconstruct(args):
    e = embeddings.Embedding.load(args.embedding)
    g = embeddings.binarize(embeddings.reconstruct(e), args.threshold)
    save_graph(g, args.out, "matrix-market" if args.format == "matrix-market" else "edge-list")
    if args.compare:
        rep = embeddings.reconstruction_report(to_dense(load_graph(args.compare)), g)
        print(json.dumps(rep.__dict__))


def cmd_min_rank(args):
    A = to_dense(load_graph(args.graph, args.format))
    res = embeddings.min_exact_rank(A, args.method, args.ladder, args.seeds)
    print(json.dumps({
        "method": args.method,
        "rank": res.rank,
        "best_mismatch_rate": {str(k): v for k, v in res.best_mismatch_rate.items()},
    }))


def _read_feature_csv(path, labels_path):
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise DataError(f"{path}: no rows")
    header, body = rows[0], rows[1:]
    names = [c for c in header if c not in ("graph", "label")]
    cols = [header.index(c) for c in names]
    try:
        X = np.array([[float(r[j]) for j in cols] for r in body])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: bad feature row ({exc})") from None
    if labels_path:
        with open(labels_path, encoding="utf-8") as fh:
            labels = [s.strip() for s in fh if s.strip()]
    elif "label" in header:
        labels = [r[header.index("label")] for r in body]
    else:
        raise UsageError("labels missing: add a `label` column or pass --labels")
    if len(labels) != len(X):
        raise DataError(f"{len(labels)} labels for {len(X)} feature rows")
    class_names = list(dict.fromkeys(labels))
    y = np.array([class_names.index(s) for s in labels])
    return X, names, y, class_names


def cmd_classify(args):
    X, names, y, class_names = _read_feature_csv(args.features_csv, args.labels)
    X, names = classify.prepare_features(X, names, log_counts=not args.raw, drop_size=args.drop_size)
    ds = classify.LabeledDataset(X, y, class_names, names)
    spec = classify.ClassifierSpec(args.classifier, args.C, args.epochs, args.k_neighbors)
    rep = classify.cross_validate(ds, spec, args.folds, args.seed)
    if args.out:
        _write_text(rep.to_json() + "\n", args.out)
    print(f"mean macro-F1 {rep.mean_f1:.4f} (weighted {rep.mean_weighted_f1:.4f})")


def cmd_pipeline(args):
    if args.write_default_config:
        cfg = bench.default_config(seed=args.seed, threads=args.threads)
        _write_text(cfg.to_json() + "\n", args.write_default_config)
        return
    if args.config:
        cfg = bench.load_config(args.config)
    else:
        cfg = bench.default_config(seed=args.seed)
    cfg.threads = args.threads if args.threads != 1 else cfg.threads
    report = bench.run_pipeline(cfg)
    for path in bench.emit_reports(report, args.out_dir):
        print(path)
    for method, rank, f1, *_ in bench.rank_sweep_rows(report):
        print(f"{method:5s} rank {rank:4d}  mean macro-F1 {f1:.3f}", file=sys.stderr)


def cmd_bench_time(args):
    g = load_graph(args.graph, args.format)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in embeddings.METHODS:
            raise UsageError(f"unknown method {m!r}")
    lines = ["rank," + ",".join(f"{m}_median_s" for m in methods) + ",threads"]
    for r in args.ranks:
        times = [
            bench.time_embedding(g, m, r, args.repeats, seed=args.seed, max_iters=args.max_iters,
                                 threads=args.threads).median_seconds
            for m in methods
        ]
        lines.append(",".join([str(r)] + [f"{t:.4f}" for t in times] + [str(args.threads)]))
    _write_text("\n".join(lines) + "\n", args.out)


COMMANDS = {
    "generate": cmd_generate,
    "features": cmd_features,
    "embed": cmd_embed,
    "reconstruct": cmd_reconstruct,
    "min-rank": cmd_min_rank,
    "classify": cmd_classify,
    "pipeline": cmd_pipeline,
    "bench-time": cmd_bench_time,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("netlowrank: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command in ("pipeline", "bench-time"):
            COMMANDS[args.command](args)
        else:
            with threadpool_limits(limits=args.threads):
                COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"netlowrank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"netlowrank: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, NetLowRankError, OSError, ValueError) as exc:
        print(f"netlowrank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
