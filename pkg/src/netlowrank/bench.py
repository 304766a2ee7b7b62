"""Corpus building, the embed -> reconstruct -> featurize -> classify pipeline,
embedding timings and report files."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import platform
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__, kernels
from .classify import ClassifierSpec, LabeledDataset, cross_validate, per_class_f1, prepare_features
from .embeddings import DEFAULT_LADDER, LPCA, METHODS, TSVD, binarize, embed, reconstruct, reconstruction_report
from .errors import DataError, NetLowRankError, PipelineError
from .features import FeatureVector, extract_features
from .generators import PRNG_NAME, GeneratorSpec, make_rng
from .graph import load_graph, to_dense

logger = logging.getLogger(__name__)

FAILURE_TOLERANCE = 0.05


# ------------------------------------------------------------------ corpus


@dataclass(frozen=True)
class CorpusEntry:
    class_name: str
    source: object  # GeneratorSpec or a file path

    def to_dict(self):
        if isinstance(self.source, GeneratorSpec):
            return {"class": self.class_name, "generator": self.source.to_dict()}
        return {"class": self.class_name, "path": str(self.source)}

    @classmethod
    def from_dict(cls, d):
        if "generator" in d:
            return cls(d["class"], GeneratorSpec.from_dict(d["generator"]))
        return cls(d["class"], d["path"])

    def label(self):
        if isinstance(self.source, GeneratorSpec):
            return f"{self.class_name}:{self.source.model}:{self.source.seed}"
        return f"{self.class_name}:{self.source}"


@dataclass
class CorpusManifest:
    entries: list
    corpus_seed: int = 0

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise DataError("a corpus needs at least two classes")

    @property
    def class_names(self):
        # first-appearance order
        return list(dict.fromkeys(e.class_name for e in self.entries))

    def to_dict(self):
        return {"corpus_seed": self.corpus_seed, "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d):
        return cls([CorpusEntry.from_dict(e) for e in d["entries"]], int(d.get("corpus_seed", 0)))


# (class, model, params as a function of n) for the nine synthetic classes
SURROGATE_CLASSES = (
    ("er-sparse", "erdos-renyi", lambda n: {"p": 6.0 / n}),
    ("er-dense", "erdos-renyi", lambda n: {"p": 0.08}),
    ("ba-low", "barabasi-albert", lambda n: {"m_attach": 2}),
    ("ba-high", "barabasi-albert", lambda n: {"m_attach": 12}),
    ("cl-heavy", "chung-lu", lambda n: {"exponent": 2.1, "w_min": 2.0, "w_max": float(np.sqrt(6.0 * n))}),
    ("cl-steep", "chung-lu", lambda n: {"exponent": 3.0, "w_min": 5.0, "w_max": 40.0}),
    ("cl-dense", "chung-lu", lambda n: {"exponent": 2.5, "w_min": 15.0, "w_max": float(np.sqrt(25.0 * n))}),
    ("star-noise", "star-noise", lambda n: {"hubs": max(2, n // 60), "p_noise": 3.0 / n}),
    ("near-lattice", "ring-lattice-noise", lambda n: {"k_half": 3, "p_noise": 1.0 / n}),
)


def default_surrogate_manifest(graphs_per_class=15, n_range=(200, 600), corpus_seed=2024):
    """Nine synthetic classes with node counts drawn uniformly from ``n_range``.

    Node counts are drawn independently of the class so that size alone
    does not identify a class.
    """
    rng = make_rng(corpus_seed)
    entries = []
    for name, model, params in SURROGATE_CLASSES:
        for _ in range(graphs_per_class):
            n = int(rng.integers(n_range[0], n_range[1] + 1))
            seed = int(rng.integers(0, 2**62))
            entries.append(CorpusEntry(name, GeneratorSpec(model, {"n": n, **params(n)}, seed)))
    return CorpusManifest(entries, corpus_seed)


def build_corpus(manifest):
    """Load or generate every entry; returns ``[(graph, class_index), ...]``."""
    names = manifest.class_names
    out = []
    for e in manifest.entries:
        try:
            if isinstance(e.source, GeneratorSpec):
                g = e.source.generate()
            else:
                g = load_graph(e.source)
        except (NetLowRankError, OSError, ValueError) as exc:
            raise DataError(f"corpus entry {e.label()} failed: {exc}") from exc
        out.append((g, names.index(e.class_name)))
    return out


# ------------------------------------------------------------------ config


@dataclass
class ExperimentConfig:
    manifest: CorpusManifest
    methods: tuple = METHODS
    rank_ladder: tuple = (16, 32, 64)
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    cv_folds: int = 10
    seed: int = 0
    threads: int = 1
    threshold: float = 0.5
    log_counts: bool = True
    drop_size_features: bool = False
    lpca_max_iters: int = 100

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.rank_ladder = tuple(int(r) for r in self.rank_ladder)
        if not self.rank_ladder or list(self.rank_ladder) != sorted(self.rank_ladder) or self.rank_ladder[0] < 1:
            raise DataError("rank_ladder must be ascending positive integers")
        for m in self.methods:
            if m not in METHODS:
                raise DataError(f"unknown method {m!r}")
        if self.threads < 1:
            raise DataError("threads must be >= 1")

    def to_dict(self):
        return {
            "manifest": self.manifest.to_dict(),
            "methods": list(self.methods),
            "rank_ladder": list(self.rank_ladder),
            "classifier": self.classifier.to_dict(),
            "cv_folds": self.cv_folds,
            "seed": self.seed,
            "threads": self.threads,
            "threshold": self.threshold,
            "log_counts": self.log_counts,
            "drop_size_features": self.drop_size_features,
            "lpca_max_iters": self.lpca_max_iters,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "manifest" in d:
            manifest = CorpusManifest.from_dict(d.pop("manifest"))
        elif "manifest_path" in d:
            with open(d.pop("manifest_path"), encoding="utf-8") as fh:
                manifest = CorpusManifest.from_dict(json.load(fh))
        else:
            manifest = default_surrogate_manifest(**d.pop("surrogate", {}))
        if "classifier" in d:
            d["classifier"] = ClassifierSpec.from_dict(d["classifier"])
        return cls(manifest=manifest, **d)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def config_hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


# ---------------------------------------------------------------- pipeline


@dataclass
class CellResult:
    """One (method, rank) cell of the sweep."""

    method: str
    rank: int
    cv: object
    features: list
    mismatch_rates: list
    iterations: list
    final_losses: list
    embed_seconds: list
    feature_seconds: list

    @property
    def mean_f1(self):
        return self.cv.mean_f1

    def to_dict(self, include_timings=True):
        d = {
            "method": self.method,
            "rank": self.rank,
            "cv": self.cv.to_dict(),
            "features": self.features,
            "mismatch_rates": self.mismatch_rates,
            "iterations": self.iterations,
            "final_losses": self.final_losses,
        }
        if include_timings:
            d["embed_seconds"] = self.embed_seconds
            d["feature_seconds"] = self.feature_seconds
        return d


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    class_names: list
    graphs: list
    baseline: object
    baseline_features: list
    cells: dict
    failures: list
    environment: dict
    wall_seconds: float = 0.0

    def cell(self, method, rank):
        return self.cells[(method, rank)]

    def to_dict(self, include_timings=True):
        d = {
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "class_names": self.class_names,
            "graphs": self.graphs,
            "baseline": {"cv": self.baseline.to_dict(), "features": self.baseline_features},
            "cells": [self.cells[k].to_dict(include_timings) for k in sorted(self.cells)],
            "failures": self.failures,
            "environment": self.environment,
        }
        if include_timings:
            d["wall_seconds"] = self.wall_seconds
        return d

    def to_json(self, include_timings=True):
        return json.dumps(self.to_dict(include_timings), sort_keys=True, indent=1)


def environment_info(threads):
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "netlowrank": __version__,
        "kernel_backend": kernels.BACKEND,
        "prng": PRNG_NAME,
        "threads": threads,
    }


def _graph_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0] >> 1)


def _features_row(fv):
    return [float(x) for x in fv.as_array()]


def _process_graph(config, index, g):
    row = {"original": None, "cells": {}}
    t0 = time.perf_counter()
    row["original"] = _features_row(extract_features(g))
    row["original_seconds"] = time.perf_counter() - t0
    A = to_dense(g)
    seed = _graph_seed(config.seed, index)
    for method in config.methods:
        for rank in config.rank_ladder:
            k = min(rank, g.n)
            t0 = time.perf_counter()
            e = embed(A, method, k, seed=seed, max_iters=config.lpca_max_iters)
            t_embed = time.perf_counter() - t0
            t0 = time.perf_counter()
            g2 = binarize(reconstruct(e), config.threshold)
            fv = extract_features(g2)
            t_feat = time.perf_counter() - t0
            row["cells"][(method, rank)] = {
                "features": _features_row(fv),
                "mismatch_rate": reconstruction_report(A, g2).mismatch_rate,
                "iterations": e.iterations_used,
                "final_loss": e.final_loss,
                "embed_seconds": t_embed,
                "feature_seconds": t_feat,
            }
    return row


def _dataset(config, rows, labels, class_names):
    X, names = prepare_features(
        np.array(rows, dtype=np.float64).reshape(len(rows), -1),
        FeatureVector.header(),
        log_counts=config.log_counts,
        drop_size=config.drop_size_features,
    )
    return LabeledDataset(X, labels, class_names, names)


def run_pipeline(config):
    """Run every graph through every (method, rank) and cross-validate each cell.

    Graphs are processed concurrently when ``config.threads > 1`` (BLAS is
    then pinned to one thread per worker); results are reassembled in corpus
    order, so the report does not depend on scheduling.
    """
    start = time.perf_counter()
    corpus = build_corpus(config.manifest)
    class_names = config.manifest.class_names
    entries = config.manifest.entries

    def job(i):
        g = corpus[i][0]
        try:
            return _process_graph(config, i, g)
        except (NetLowRankError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            logger.warning("graph %s failed: %s", entries[i].label(), exc)
            return exc

    blas_threads = 1 if config.threads > 1 else config.threads
    with threadpool_limits(limits=blas_threads):
        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(job, range(len(corpus))))
        else:
            results = [job(i) for i in range(len(corpus))]

    failures = [
        {"index": i, "entry": entries[i].label(), "error": f"{type(r).__name__}: {r}"}
        for i, r in enumerate(results)
        if isinstance(r, Exception)
    ]
    if len(failures) > FAILURE_TOLERANCE * len(corpus):
        raise PipelineError(f"{len(failures)} of {len(corpus)} graphs failed; first: {failures[0]['error']}")
    if failures:
        logger.warning("excluding %d failed graphs from the report", len(failures))
    keep = [i for i, r in enumerate(results) if not isinstance(r, Exception)]
    labels = np.array([corpus[i][1] for i in keep], dtype=np.int64)

    with threadpool_limits(limits=blas_threads):
        base_rows = [results[i]["original"] for i in keep]
        baseline = cross_validate(
            _dataset(config, base_rows, labels, class_names), config.classifier, config.cv_folds, config.seed
        )
        cells = {}
        for method in config.methods:
            for rank in config.rank_ladder:
                per = [results[i]["cells"][(method, rank)] for i in keep]
                rows = [p["features"] for p in per]
                cv = cross_validate(
                    _dataset(config, rows, labels, class_names), config.classifier, config.cv_folds, config.seed
                )
                cells[(method, rank)] = CellResult(
                    method=method,
                    rank=rank,
                    cv=cv,
                    features=rows,
                    mismatch_rates=[p["mismatch_rate"] for p in per],
                    iterations=[p["iterations"] for p in per],
                    final_losses=[p["final_loss"] for p in per],
                    embed_seconds=[p["embed_seconds"] for p in per],
                    feature_seconds=[p["feature_seconds"] for p in per],
                )

    graphs = [
        {
            "index": i,
            "entry": entries[i].label(),
            "class": class_names[corpus[i][1]],
            "n": corpus[i][0].n,
            "m": corpus[i][0].m,
        }
        for i in keep
    ]
    return ExperimentReport(
        config=config,
        class_names=class_names,
        graphs=graphs,
        baseline=baseline,
        baseline_features=base_rows,
        cells=cells,
        failures=failures,
        environment=environment_info(config.threads),
        wall_seconds=time.perf_counter() - start,
    )


# ------------------------------------------------------------------ timing


@dataclass
class TimingResult:
    method: str
    rank: int
    median_seconds: float
    seconds: list
    threads: int
    fingerprint: str


def time_embedding(g, method, rank, repeats=3, seed=0, max_iters=100, threads=1):
    """Median wall-clock seconds of the embed call alone over ``repeats`` runs.

    ``fingerprint`` hashes the factors; it is identical across repeats.
    """
    A = to_dense(g)
    times = []
    prints = set()
    with threadpool_limits(limits=threads):
        for _ in range(repeats):
            t0 = time.perf_counter()
            e = embed(A, method, min(rank, g.n), seed=seed, max_iters=max_iters)
            times.append(time.perf_counter() - t0)
            prints.add(hashlib.sha256(e.to_bytes()).hexdigest()[:16])
    if len(prints) != 1:
        raise PipelineError("repeated embeddings with a fixed seed differ")
    return TimingResult(method, rank, statistics.median(times), times, threads, prints.pop())


# ----------------------------------------------------------------- reports


def _csv_text(header_comment, header, rows):
    buf = io.StringIO()
    buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def rank_sweep_rows(report):
    rows = []
    for method in report.config.methods:
        for rank in report.config.rank_ladder:
            c = report.cell(method, rank)
            rates = np.array(c.mismatch_rates)
            rows.append([
                method, rank, c.cv.mean_f1, c.cv.mean_weighted_f1,
                float(np.std(c.cv.per_fold_f1)), float(rates.mean()), float(np.mean(rates == 0.0)),
            ])
    return rows


def min_rank_rows(report, f1_target=0.92):
    """Per (class, method): ladder rank where every graph reconstructs exactly,
    and the first ladder rank whose class F1 reaches ``f1_target``."""
    ladder = list(report.config.rank_ladder)
    names = report.class_names
    avg_col = FeatureVector.header().index("avg_degree")
    rows = []
    for ci, name in enumerate(names):
        idx = [j for j, gr in enumerate(report.graphs) if gr["class"] == name]
        if not idx:
            continue
        mean_n = float(np.mean([report.graphs[j]["n"] for j in idx]))
        mean_deg = float(np.mean([report.baseline_features[j][avg_col] for j in idx]))
        for method in report.config.methods:
            exact_rank = None
            for r in ladder:
                if all(report.cell(method, r).mismatch_rates[j] == 0.0 for j in idx):
                    exact_rank = r
                    break
            f1_rank = None
            for r in ladder:
                if per_class_f1(report.cell(method, r).cv.confusion)[ci] >= f1_target:
                    f1_rank = r
                    break
            rows.append([
                name, method, len(idx), mean_n, mean_deg,
                "none" if exact_rank is None else exact_rank,
                "none" if f1_rank is None else f1_rank,
            ])
    return rows


def timing_rows(report):
    rows = []
    for method in report.config.methods:
        for rank in report.config.rank_ladder:
            c = report.cell(method, rank)
            rows.append([
                method, rank, float(np.median(c.embed_seconds)), float(np.mean(c.embed_seconds)),
                float(np.max(c.embed_seconds)), float(np.median(c.feature_seconds)),
                report.environment["threads"],
            ])
    return rows


def emit_reports(report, out_dir):
    """Write the report bundle; returns the list of written paths."""
    os.makedirs(out_dir, exist_ok=True)
    h = report.config.config_hash()
    tag = f"config_hash={h}"
    files = {
        "report.json": report.to_json(include_timings=True) + "\n",
        "rank_sweep.csv": _csv_text(
            tag,
            ["method", "rank", "mean_f1", "mean_weighted_f1", "std_f1", "mean_mismatch_rate", "exact_fraction"],
            rank_sweep_rows(report),
        ),
        "min_rank.csv": _csv_text(
            tag,
            ["class", "method", "graphs", "mean_nodes", "mean_avg_degree", "exact_rank", "f1_092_rank"],
            min_rank_rows(report),
        ),
        "timings.csv": _csv_text(
            tag,
            ["method", "rank", "median_embed_s", "mean_embed_s", "max_embed_s", "median_feature_s", "threads"],
            timing_rows(report),
        ),
        "confusion_baseline.csv": f"# {tag}\n" + report.baseline.confusion_csv(),
    }
    for (method, rank), c in sorted(report.cells.items()):
        files[f"confusion_{method}_{rank}.csv"] = f"# {tag}\n" + c.cv.confusion_csv()
        files[f"folds_{method}_{rank}.csv"] = f"# {tag}\n" + c.cv.folds_csv()
    written = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)
    return written


def default_config(**overrides):
    return ExperimentConfig(manifest=default_surrogate_manifest(), **overrides)


__all__ = [
    "CorpusEntry",
    "CorpusManifest",
    "ExperimentConfig",
    "ExperimentReport",
    "LPCA",
    "TSVD",
    "DEFAULT_LADDER",
    "build_corpus",
    "default_config",
    "default_surrogate_manifest",
    "emit_reports",
    "run_pipeline",
    "time_embedding",
]
