import math

import numpy as np
import pytest

from netlowrank import embeddings as E
from netlowrank.errors import DataError
from netlowrank.generators import gen_barabasi_albert, gen_chung_lu, gen_erdos_renyi
from netlowrank.graph import Graph, load_karate, to_dense

from conftest import complete, random_graph, star


def naive_loss(X, Y, At):
    S = X @ Y.T
    return float(np.sum(-np.log(1.0 / (1.0 + np.exp(-At * S)))))


def fd_gradient(X, Y, At, h=1e-5):
    gx, gy = np.zeros_like(X), np.zeros_like(Y)
    for M, G in ((X, gx), (Y, gy)):
        for idx in np.ndindex(M.shape):
            old = M[idx]
            M[idx] = old + h
            up = E.lpca_loss(X, Y, At)
            M[idx] = old - h
            down = E.lpca_loss(X, Y, At)
            M[idx] = old
            G[idx] = (up - down) / (2 * h)
    return gx, gy


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))


def random_instance(rng, n, k):
    A = to_dense(random_graph(rng, n, 0.4))
    return rng.uniform(-1, 1, (n, k)), rng.uniform(-1, 1, (n, k)), E.shifted_adjacency(A)


# ------------------------------------------------------------ eigenpairs


def test_k2_spectrum():
    Z, W = E.top_k_eigenpairs(to_dense(complete(2)), 2)
    assert np.allclose(W, [1, -1])


def test_star_spectrum():
    Z, W = E.top_k_eigenpairs(to_dense(star(3)), 1)
    assert W[0] == pytest.approx(math.sqrt(3))
    assert np.allclose(Z[:, 0], [1 / math.sqrt(2)] + [1 / math.sqrt(6)] * 3)


def test_er_residuals_and_orthonormality():
    A = to_dense(gen_erdos_renyi(200, 0.1, 1))
    Z, W = E.top_k_eigenpairs(A, 16)
    assert np.all(np.diff(np.abs(W)) <= 1e-12)
    res = np.linalg.norm(A @ Z - Z * W, axis=0)
    assert np.all(res <= 1e-6 * np.maximum(1, np.abs(W)))
    assert np.allclose(Z.T @ Z, np.eye(16), atol=1e-8)


def test_tie_order_positive_first():
    # a single edge plus isolated node: eigenvalues +1, -1, 0
    Z, W = E.top_k_eigenpairs(to_dense(Graph(3, [(0, 1)])), 3)
    assert W[0] == pytest.approx(1) and W[1] == pytest.approx(-1) and abs(W[2]) < 1e-12


def test_lanczos_path_matches_dense(monkeypatch):
    A = to_dense(gen_chung_lu(np.linspace(2, 30, 300), 3))
    Zd, Wd = E.top_k_eigenpairs(A, 8)
    monkeypatch.setattr(E, "DENSE_EIG_LIMIT", 100)
    Zl, Wl = E.top_k_eigenpairs(A, 8)
    assert np.allclose(Wd, Wl, atol=1e-8)
    assert np.allclose(np.abs(Zd.T @ Zl), np.eye(8), atol=1e-6)


def test_rank_bounds():
    with pytest.raises(DataError):
        E.top_k_eigenpairs(np.zeros((3, 3)), 4)
    with pytest.raises(DataError):
        E.tsvd_embed(np.zeros((3, 3)), 0)


# ------------------------------------------------------------------ TSVD


def test_tsvd_k2_exact():
    A = to_dense(complete(2))
    e = E.tsvd_embed(A, 2)
    assert np.allclose(e.X @ e.Y.T, A, atol=1e-15)
    assert np.allclose(E.reconstruct(e), A, atol=1e-15)
    assert np.array_equal(to_dense(E.binarize(E.reconstruct(e))), A)


def test_tsvd_star_rank1():
    e = E.tsvd_embed(to_dense(star(3)), 1)
    S = e.X @ e.Y.T
    assert np.allclose(S[0, 1:], 0.5)
    assert S[1, 2] == pytest.approx(math.sqrt(3) / 6)
    assert S[0, 0] == pytest.approx(math.sqrt(3) / 2)
    P = E.reconstruct(e)
    assert P[1, 2] == pytest.approx(0.2887, abs=1e-4)
    rep = E.reconstruction_report(to_dense(star(3)), E.binarize(P))
    assert rep.mismatches == 3 and not rep.exact


def test_tsvd_identity(rng):
    for _ in range(10):
        A = to_dense(random_graph(rng, 30, 0.2))
        Z, W = E.top_k_eigenpairs(A, 7)
        e = E.tsvd_embed(A, 7)
        assert np.allclose(e.X @ e.Y.T, Z @ np.diag(W) @ Z.T, atol=1e-10)


def test_full_rank_exact(rng):
    for _ in range(20):
        n = int(rng.integers(2, 51))
        g = random_graph(rng, n, float(rng.uniform(0.05, 0.7)))
        A = to_dense(g)
        assert E.binarize(E.reconstruct(E.tsvd_embed(A, n))) == g


# ------------------------------------------------------------- LPCA loss


def test_loss_zero_factors(rng):
    n = 7
    At = E.shifted_adjacency(to_dense(random_graph(rng, n, 0.5)))
    Z = np.zeros((n, 2))
    assert E.lpca_loss(Z, Z, At) == pytest.approx(n * n * math.log(2))


def test_loss_saturated(rng):
    n = 6
    At = E.shifted_adjacency(to_dense(random_graph(rng, n, 0.5)))
    X, Y = 50.0 * At, np.eye(n)
    assert abs(E.lpca_loss(X, Y, At)) < 1e-12
    gx, gy = E.lpca_gradient(X, Y, At)
    assert np.max(np.abs(gx)) < 1e-15


def test_loss_no_overflow():
    At = -np.ones((2, 2))
    X = np.full((2, 1), 100.0)
    assert E.lpca_loss(X, X, At) == pytest.approx(4 * 1e4)


def test_loss_matches_naive(rng):
    for _ in range(5):
        X, Y, At = random_instance(rng, 10, 3)
        assert E.lpca_loss(X, Y, At) == pytest.approx(naive_loss(X, Y, At), rel=1e-13)


def test_gradient_zero_factors(rng):
    At = E.shifted_adjacency(to_dense(random_graph(rng, 5, 0.5)))
    gx, gy = E.lpca_gradient(np.zeros((5, 2)), np.zeros((5, 2)), At)
    assert not gx.any() and not gy.any()


def test_gradient_finite_differences(rng):
    X, Y, At = random_instance(rng, 8, 2)
    gx, gy = E.lpca_gradient(X, Y, At)
    fx, fy = fd_gradient(X, Y, At)
    assert rel_err(gx, fx) < 1e-5 and rel_err(gy, fy) < 1e-5


def test_fused_kernel_matches_reference(rng):
    X, Y, At = random_instance(rng, 12, 3)
    vec = np.concatenate([X.ravel(), Y.ravel()])
    R = np.empty((12, 12))
    loss, grad = E._loss_and_grad(vec, np.ascontiguousarray(At), 12, 3, R)
    gx, gy = E.lpca_gradient(X, Y, At)
    assert loss == pytest.approx(E.lpca_loss(X, Y, At), rel=1e-13)
    assert np.allclose(grad, np.concatenate([gx.ravel(), gy.ravel()]), rtol=1e-12, atol=1e-14)


# ------------------------------------------------------------ LPCA embed


def test_lpca_k2():
    A = to_dense(complete(2))
    e = E.lpca_embed(A, 2, seed=5)
    assert e.final_loss < 0.01
    assert np.array_equal(to_dense(E.binarize(E.reconstruct(e))), A)


def test_lpca_karate_exact():
    A = to_dense(load_karate())
    e = E.lpca_embed(A, 16, seed=0)
    rep = E.reconstruction_report(A, E.binarize(E.reconstruct(e)))
    assert rep.exact and rep.mismatch_rate == 0.0
    assert E.binarize(E.reconstruct(e)) == load_karate()


def test_lpca_deterministic():
    A = to_dense(gen_barabasi_albert(60, 3, 1))
    a = E.lpca_embed(A, 4, seed=9)
    b = E.lpca_embed(A, 4, seed=9)
    assert a.to_bytes() == b.to_bytes()


def test_lpca_monotone_and_bounded():
    A = to_dense(gen_erdos_renyi(80, 0.1, 2))
    e = E.lpca_embed(A, 3, seed=1, max_iters=40)
    hist = [e.initial_loss] + e.loss_history
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert e.final_loss <= e.initial_loss
    assert e.iterations_used <= 40


def test_lpca_initialization_range():
    A = to_dense(complete(4))
    e = E.lpca_embed(A, 2, seed=3, max_iters=0)
    x0 = np.random.Generator(np.random.PCG64(3)).uniform(-1, 1, 16)
    assert e.iterations_used == 0
    assert np.array_equal(np.concatenate([e.X.ravel(), e.Y.ravel()]), x0)
    assert np.all(np.abs(x0) <= 1)


# -------------------------------------------------------- reconstruction


def test_reconstruct_logistic_midpoint():
    e = E.Embedding(X=np.zeros((3, 1)), Y=np.ones((3, 1)), method=E.LPCA)
    assert np.all(E.reconstruct(e) == 0.5)


def test_binarize_examples():
    A = to_dense(complete(3))
    assert E.binarize(A) == complete(3)
    assert E.binarize(np.full((4, 4), 0.5)).m == 0
    with pytest.raises(DataError):
        E.binarize(np.zeros((2, 3)))


def test_report_examples():
    A = to_dense(complete(3))
    assert E.reconstruction_report(A, complete(3)) == E.ReconstructionReport(0, 0.0, True)
    assert E.reconstruction_report(A, Graph(3, [])) == E.ReconstructionReport(3, 1.0, False)
    with pytest.raises(DataError):
        E.reconstruction_report(A, Graph(4, []))


def test_min_exact_rank():
    assert E.min_exact_rank(to_dense(complete(3)), E.LPCA).rank == 5
    res = E.min_exact_rank(to_dense(load_karate()), E.LPCA)
    assert res.rank is not None and res.rank <= 16
    A = to_dense(gen_erdos_renyi(40, 0.3, 4))
    res = E.min_exact_rank(A, E.TSVD, [5, 16, 32, 40])
    assert res.rank is not None and res.rank <= 40
    assert set(res.best_mismatch_rate) <= {5, 16, 32, 40}


def test_min_exact_rank_absent():
    A = to_dense(gen_erdos_renyi(40, 0.3, 4))
    res = E.min_exact_rank(A, E.TSVD, [1, 2])
    assert res.rank is None and res.best_mismatch_rate[2] > 0


# ----------------------------------------------------------- serialization


def test_container_round_trip(tmp_path):
    A = to_dense(gen_erdos_renyi(30, 0.2, 1))
    e = E.lpca_embed(A, 3, seed=4, max_iters=10)
    e.save(tmp_path / "e.bin")
    back = E.Embedding.load(tmp_path / "e.bin")
    assert np.array_equal(back.X, e.X) and np.array_equal(back.Y, e.Y)
    assert back.header() == e.header()
    raw = (tmp_path / "e.bin").read_bytes()
    hlen = int.from_bytes(raw[8:12], "little")
    body = np.frombuffer(raw[12 + hlen:], dtype="<f8")
    assert np.array_equal(body[: 30 * 3].reshape(30, 3), e.X)
    e.dump_text(tmp_path / "e.txt")
    assert (tmp_path / "e.txt").read_text().startswith("# {")


def test_container_rejects_garbage():
    with pytest.raises(DataError):
        E.Embedding.from_bytes(b"not an embedding")


def test_embedding_validation():
    with pytest.raises(ValueError):
        E.Embedding(X=np.zeros((3, 2)), Y=np.zeros((3, 1)), method=E.TSVD)
    with pytest.raises(ValueError):
        E.Embedding(X=np.full((3, 1), np.nan), Y=np.zeros((3, 1)), method=E.TSVD)
