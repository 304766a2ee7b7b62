import json

import numpy as np
import pytest

from netlowrank import cli
from netlowrank.embeddings import Embedding
from netlowrank.errors import EigenSolverError
from netlowrank.graph import load_graph, load_karate, save_graph


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def karate_path(tmp_path):
    p = tmp_path / "karate.txt"
    save_graph(load_karate(), p)
    return p


def test_generate_and_features(tmp_path, capsys):
    out = tmp_path / "er.txt"
    assert run("generate", "erdos-renyi", "--n", 8, "--p", 0.5, "--seed", 42, "--out", out,
               "--spec-out", tmp_path / "spec.json") == 0
    g = load_graph(out)
    assert g.edges.tolist()[:3] == [[0, 2], [0, 5], [1, 3]] and g.m == 12
    assert json.loads((tmp_path / "spec.json").read_text())["prng"] == "numpy.random.PCG64"
    capsys.readouterr()
    assert run("features", out) == 0
    header, row = capsys.readouterr().out.strip().splitlines()
    assert header.startswith("graph,num_nodes,num_edges") and row.split(",")[1:3] == ["8", "12"]
    assert run("features", out, "--json") == 0
    assert json.loads(capsys.readouterr().out)["num_edges"] == 12


@pytest.mark.parametrize("model,args", [
    ("barabasi-albert", ["--n", 30, "--m-attach", 2]),
    ("chung-lu", ["--n", 50, "--exponent", 2.5, "--w-min", 2, "--w-max", 7]),
    ("star-noise", ["--n", 30, "--hubs", 3]),
    ("ring-lattice-noise", ["--n", 30, "--k-half", 2, "--p-noise", 0.05]),
])
def test_generate_models(tmp_path, model, args):
    out = tmp_path / "g.mtx"
    assert run("generate", model, *args, "--format", "matrix-market", "--out", out) == 0
    assert load_graph(out).n in (30, 50)


def test_embed_reconstruct_roundtrip(tmp_path, karate_path, capsys):
    emb = tmp_path / "k.emb"
    assert run("embed", karate_path, "--method", "lpca", "--rank", 16, "--seed", 1, "--out", emb,
               "--text", tmp_path / "k.txt") == 0
    e = Embedding.load(emb)
    assert e.X.shape == (34, 16) and e.method == "lpca"
    rec = tmp_path / "rec.txt"
    capsys.readouterr()
    assert run("reconstruct", emb, "--out", rec, "--compare", karate_path) == 0
    assert json.loads(capsys.readouterr().out)["exact"] is True
    assert load_graph(rec) == load_karate()


def test_min_rank(karate_path, capsys):
    assert run("min-rank", karate_path, "--method", "lpca", "--ladder", "2,5,16", "--seeds", 1) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rank"] in (5, 16)


def test_classify(tmp_path, capsys):
    rng = np.random.default_rng(0)
    lines = ["label,a,b"]
    for c in range(3):
        for _ in range(10):
            x = rng.normal(size=2) + 8 * np.eye(3)[c, :2]
            lines.append(f"c{c},{x[0]},{x[1]}")
    csv_path = tmp_path / "f.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    assert run("classify", csv_path, "--folds", 5, "--out", tmp_path / "cv.json") == 0
    assert "mean macro-F1 1.0000" in capsys.readouterr().out
    assert json.loads((tmp_path / "cv.json").read_text())["mean_f1"] == 1.0
    assert run("classify", csv_path, "--classifier", "knn", "--k-neighbors", 3, "--folds", 5) == 0


def test_classify_errors(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("a,b\n1,2\n3,4\n")
    assert run("classify", p) == 1  # no labels at all
    lab = tmp_path / "labels.txt"
    lab.write_text("x\n")
    assert run("classify", p, "--labels", lab) == 2


def test_pipeline_small(tmp_path, capsys):
    cfg = {
        "manifest": {"entries": [
            {"class": c, "generator": {"model": "erdos-renyi", "params": {"n": 20, "p": p}, "seed": s}}
            for c, p in (("sparse", 0.1), ("dense", 0.5)) for s in range(6)
        ]},
        "methods": ["tsvd"],
        "rank_ladder": [4, 8],
        "cv_folds": 3,
        "classifier": {"kind": "knn", "k_neighbors": 1},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "res"
    assert run("pipeline", path, "--out-dir", out) == 0
    assert (out / "rank_sweep.csv").exists() and (out / "confusion_tsvd_8.csv").exists()
    assert run("pipeline", "--write-default-config", tmp_path / "d.json") == 0
    d = json.loads((tmp_path / "d.json").read_text())
    assert d["rank_ladder"] == [16, 32, 64] and len(d["manifest"]["entries"]) == 135


def test_bench_time(karate_path, tmp_path):
    out = tmp_path / "t.csv"
    assert run("bench-time", karate_path, "--ranks", "4,8", "--repeats", 1, "--max-iters", 5, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "rank,tsvd_median_s,lpca_median_s,threads" and len(lines) == 3


def test_usage_errors(tmp_path, karate_path):
    with pytest.raises(SystemExit) as exc:
        run("no-such-command")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("embed", karate_path, "--method", "pca", "--rank", 2, "--out", tmp_path / "x")
    assert exc.value.code == 1
    assert run("generate", "erdos-renyi", "--n", 5, "--out", tmp_path / "x") == 1
    assert run("features", karate_path, "--threads", 0) == 1
    assert run("bench-time", karate_path, "--methods", "pca") == 1


def test_data_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 x\n")
    assert run("features", bad) == 2
    assert run("features", tmp_path / "missing.txt") == 2
    assert run("generate", "erdos-renyi", "--n", 5, "--p", 2.0, "--out", tmp_path / "x") == 2
    junk = tmp_path / "junk.emb"
    junk.write_bytes(b"not an embedding")
    assert run("reconstruct", junk, "--out", tmp_path / "y") == 2


def test_numerical_error(monkeypatch, karate_path, tmp_path):
    def boom(*a, **k):
        raise EigenSolverError("no convergence", best_residual=1.0)

    monkeypatch.setattr("netlowrank.embeddings.embed", boom)
    assert run("embed", karate_path, "--method", "tsvd", "--rank", 4, "--out", tmp_path / "e") == 3
