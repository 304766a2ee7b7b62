"""Low-rank factorizations of adjacency matrices and graph reconstruction.

Two factorizations are provided, both producing a pair ``(X, Y)`` of
``n x k`` factors whose product ``X @ Y.T`` approximates the adjacency:

* TSVD keeps the ``k`` largest-magnitude eigenpairs of ``A``;
* LPCA fits the factors under a logistic loss on the sign-shifted
  adjacency ``2A - 1``.
"""
from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from . import kernels
from .errors import DataError, EigenSolverError
from .generators import make_rng
from .graph import from_dense

logger = logging.getLogger(__name__)

TSVD = "tsvd"
LPCA = "lpca"
METHODS = (TSVD, LPCA)

DENSE_EIG_LIMIT = 2000
DEFAULT_LADDER = (5, 16, 32, 64, 128)

_MAGIC = b"NLREMB01"


@dataclass
class Embedding:
    X: np.ndarray
    Y: np.ndarray
    method: str
    seed: int | None = None
    iterations_used: int = 0
    final_loss: float | None = None
    initial_loss: float | None = None
    warning: str | None = None
    loss_history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.Y = np.ascontiguousarray(self.Y, dtype=np.float64)
        if self.X.shape != self.Y.shape or self.X.ndim != 2:
            raise ValueError(f"factor shapes disagree: {self.X.shape} vs {self.Y.shape}")
        if self.X.shape[1] < 1:
            raise ValueError("rank must be at least 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise ValueError("factors contain non-finite entries")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def rank(self):
        return self.X.shape[1]

    def header(self):
        return {
            "n": self.n,
            "k": self.rank,
            "method": self.method,
            "seed": self.seed,
            "iterations": self.iterations_used,
            "loss": self.final_loss,
        }

    def to_bytes(self):
        """Magic, little-endian u32 header length, JSON header, then X and Y as row-major <f8."""
        head = json.dumps(self.header(), sort_keys=True).encode()
        buf = io.BytesIO()
        buf.write(_MAGIC)
        buf.write(struct.pack("<I", len(head)))
        buf.write(head)
        buf.write(self.X.astype("<f8").tobytes(order="C"))
        buf.write(self.Y.astype("<f8").tobytes(order="C"))
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data):
        if data[:8] != _MAGIC:
            raise DataError("not an embedding container")
        (hlen,) = struct.unpack("<I", data[8:12])
        head = json.loads(data[12:12 + hlen])
        n, k = head["n"], head["k"]
        body = np.frombuffer(data[12 + hlen:], dtype="<f8")
        if body.size != 2 * n * k:
            raise DataError(f"embedding body has {body.size} values, expected {2 * n * k}")
        return cls(
            X=body[: n * k].reshape(n, k),
            Y=body[n * k:].reshape(n, k),
            method=head["method"],
            seed=head.get("seed"),
            iterations_used=head.get("iterations", 0),
            final_loss=head.get("loss"),
        )

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def dump_text(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            fh.write("# X\n")
            np.savetxt(fh, self.X, fmt="%.17g")
            fh.write("# Y\n")
            np.savetxt(fh, self.Y, fmt="%.17g")


@dataclass(frozen=True)
class ReconstructionReport:
    mismatches: int
    mismatch_rate: float
    exact: bool


@dataclass
class MinRankResult:
    rank: int | None
    best_mismatch_rate: dict


# ------------------------------------------------------------------- TSVD


def _check_rank(n, k):
    if not 1 <= k <= n:
        raise DataError(f"rank must satisfy 1 <= k <= n (k={k}, n={n})")


def _orient(Z):
    # deterministic sign: largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(Z), axis=0)
    signs = np.sign(Z[idx, np.arange(Z.shape[1])])
    signs[signs == 0] = 1.0
    return Z * signs


def top_k_eigenpairs(A, k, tol=1e-6):
    """The ``k`` largest-magnitude eigenpairs of a symmetric matrix.

    Returns ``(Z, W)`` with eigenvalues ``W`` sorted by descending absolute
    value (near-ties: positive first, then original solver order) and
    orthonormal eigenvector columns ``Z``. Dense ``eigh`` is used up to
    ``DENSE_EIG_LIMIT`` nodes, ARPACK's Lanczos iteration above that.
    Raises :class:`EigenSolverError` if any pair has residual above
    ``tol * max(1, |lambda|)``.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    _check_rank(n, k)
    if n <= DENSE_EIG_LIMIT or k >= n - 1:
        w, V = np.linalg.eigh(A)
    else:
        from scipy.sparse import csr_matrix
        from scipy.sparse.linalg import ArpackNoConvergence, eigsh

        v0 = np.linspace(1.0, 2.0, n)
        try:
            w, V = eigsh(csr_matrix(A), k=k, which="LM", v0=v0, tol=1e-12, maxiter=max(1000, 20 * n))
        except ArpackNoConvergence as exc:
            raise EigenSolverError(f"Lanczos did not converge: {exc}") from exc
        asc = np.argsort(w, kind="stable")
        w, V = w[asc], V[:, asc]
    mag = np.abs(w)
    scale = max(1.0, float(mag.max(initial=0.0)))
    key = np.round(mag / scale, 10)
    order = np.lexsort((np.arange(len(w)), w < 0, -key))[:k]
    W = w[order]
    Z = _orient(V[:, order])
    res = np.linalg.norm(A @ Z - Z * W, axis=0)
    bad = res > tol * np.maximum(1.0, np.abs(W))
    if np.any(bad):
        raise EigenSolverError(
            f"{int(bad.sum())} eigenpairs exceed residual tolerance", best_residual=float(res.max())
        )
    return Z, W


def tsvd_embed(A, k):
    """Spectral factors ``X = Z sign(W) sqrt|W|`` and ``Y = Z sqrt|W|``."""
    Z, W = top_k_eigenpairs(A, k)
    root = np.sqrt(np.abs(W))
    return Embedding(X=Z * (np.sign(W) * root), Y=Z * root, method=TSVD)


# ------------------------------------------------------------------- LPCA


def shifted_adjacency(A):
    """``2A - 1``: +1 on edges, -1 elsewhere (including the diagonal)."""
    return 2.0 * np.asarray(A, dtype=np.float64) - 1.0


def lpca_loss(X, Y, At):
    """Sum over all entries of ``-log(logistic(At * (X @ Y.T)))``, overflow-safe."""
    margin = At * (X @ Y.T)
    return float(np.sum(np.logaddexp(0.0, -margin)))


def lpca_gradient(X, Y, At):
    """Gradients ``(dL/dX, dL/dY)`` of :func:`lpca_loss`."""
    margin = At * (X @ Y.T)
    R = -At * expit(-margin)
    return R @ Y, R.T @ X


def _loss_and_grad(vec, At, n, k, R):
    X = vec[: n * k].reshape(n, k)
    Y = vec[n * k:].reshape(n, k)
    S = X @ Y.T
    loss = kernels.logistic_loss_residual(At, S, R)
    grad = np.empty_like(vec)
    np.matmul(R, Y, out=grad[: n * k].reshape(n, k))
    np.matmul(R.T, X, out=grad[n * k:].reshape(n, k))
    return loss, grad


def lpca_embed(A, k, seed=0, max_iters=100, gtol=1e-6, history=10):
    """Fit logistic PCA factors with limited-memory BFGS.

    Factors start i.i.d. uniform on [-1, 1]. The optimizer runs for at most
    ``max_iters`` quasi-Newton iterations or until the gradient's largest
    entry drops below ``gtol``. A failed line search ends the run early and
    sets ``warning`` on the result instead of raising.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    _check_rank(n, k)
    At = np.ascontiguousarray(shifted_adjacency(A))
    rng = make_rng(seed)
    x0 = rng.uniform(-1.0, 1.0, size=2 * n * k)
    R = np.empty((n, n))
    initial = _loss_and_grad(x0, At, n, k, R)[0]
    losses = []
    if max_iters <= 0:
        return Embedding(
            X=x0[: n * k].reshape(n, k).copy(),
            Y=x0[n * k:].reshape(n, k).copy(),
            method=LPCA,
            seed=seed,
            final_loss=initial,
            initial_loss=initial,
        )

    def record(intermediate_result):
        losses.append(float(intermediate_result.fun))

    res = minimize(
        _loss_and_grad,
        x0,
        args=(At, n, k, R),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": max_iters, "maxcor": history, "gtol": gtol, "ftol": 0.0, "maxfun": 20 * max_iters + 20},
    )
    warning = None
    x, final = res.x, float(res.fun)
    msg = str(res.message)
    if not res.success and "ITERATIONS REACHED LIMIT" not in msg.upper():
        warning = msg
        logger.warning("LPCA optimizer stopped early: %s", msg)
    if final > initial:
        x, final = x0, initial
    return Embedding(
        X=x[: n * k].reshape(n, k).copy(),
        Y=x[n * k:].reshape(n, k).copy(),
        method=LPCA,
        seed=seed,
        iterations_used=int(res.nit),
        final_loss=final,
        initial_loss=float(initial),
        warning=warning,
        loss_history=losses,
    )


def embed(A, method, k, seed=0, max_iters=100):
    if method == TSVD:
        return tsvd_embed(A, k)
    if method == LPCA:
        return lpca_embed(A, k, seed=seed, max_iters=max_iters)
    raise DataError(f"unknown embedding method {method!r}")


# --------------------------------------------------------- reconstruction


def reconstruct(e):
    """Score matrix in [0, 1]: clipped product for TSVD, logistic for LPCA."""
    S = e.X @ e.Y.T
    if e.method == TSVD:
        return np.clip(S, 0.0, 1.0)
    return expit(S)


def binarize(P, threshold=0.5):
    """Graph with an edge ``u < v`` wherever ``P[u, v] > threshold``."""
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DataError(f"score matrix must be square, got shape {P.shape}")
    return from_dense(P > threshold)


def reconstruction_report(A, g2):
    A = np.asarray(A)
    n = A.shape[0]
    if g2.n != n:
        raise DataError(f"dimension mismatch: adjacency has {n} nodes, graph has {g2.n}")
    iu = np.triu_indices(n, k=1)
    B = np.zeros((n, n), dtype=bool)
    if g2.m:
        B[g2.edges[:, 0], g2.edges[:, 1]] = True
    mism = int(np.count_nonzero((A[iu] != 0) != B[iu]))
    pairs = n * (n - 1) // 2
    return ReconstructionReport(mism, mism / pairs if pairs else 0.0, mism == 0)


def first_exact_rank(ladder, rates):
    """First ladder rank whose recorded mismatch rate is zero, else None."""
    for r in ladder:
        if rates.get(r) == 0.0:
            return r
    return None


def min_exact_rank(A, method, rank_ladder=DEFAULT_LADDER, seeds_per_rank=3, max_iters=100):
    """Smallest ladder rank at which some seed reconstructs ``A`` exactly.

    Ladder ranks above ``n`` are evaluated at rank ``n``. TSVD is
    deterministic and runs once per rank.
    """
    ladder = [int(r) for r in rank_ladder]
    if not ladder or ladder != sorted(ladder):
        raise DataError("rank ladder must be non-empty and ascending")
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    best = {}
    for r in ladder:
        k = min(r, n)
        seeds = range(seeds_per_rank) if method == LPCA else [0]
        rates = []
        for s in seeds:
            e = embed(A, method, k, seed=s, max_iters=max_iters)
            rates.append(reconstruction_report(A, binarize(reconstruct(e))).mismatch_rate)
            if rates[-1] == 0.0:
                break
        best[r] = min(rates)
        if best[r] == 0.0:
            break
    return MinRankResult(rank=first_exact_rank(ladder, best), best_mismatch_rate=best)


def reconstruct_graph(A, method, k, seed=0, threshold=0.5, max_iters=100):
    """Embed, reconstruct and binarize in one call. Returns ``(graph, embedding)``."""
    e = embed(A, method, k, seed=seed, max_iters=max_iters)
    return binarize(reconstruct(e), threshold), e


__all__ = [
    "Embedding",
    "LPCA",
    "MinRankResult",
    "ReconstructionReport",
    "TSVD",
    "binarize",
    "embed",
    "lpca_embed",
    "lpca_gradient",
    "lpca_loss",
    "min_exact_rank",
    "reconstruct",
    "reconstruction_report",
    "shifted_adjacency",
    "top_k_eigenpairs",
    "tsvd_embed",
]
