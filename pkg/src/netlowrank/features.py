"""Structural graph attributes used as classifier input."""
from __future__ import annotations

import json
from dataclasses import asdict, astuple, dataclass, fields

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import DegenerateSpectrumError, UndefinedStatisticError


@dataclass(frozen=True)
class FeatureVector:
    num_nodes: int
    num_edges: int
    density: float
    max_degree: int
    avg_degree: float
    max_kcore: int
    avg_clustering: float
    num_triangles: int
    avg_eigenvector_centrality: float

    @classmethod
    def header(cls):
        return [f.name for f in fields(cls)]

    def as_array(self):
        return np.array(astuple(self), dtype=np.float64)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False)

    def to_csv_row(self):
        return [repr(v) if isinstance(v, float) else str(v) for v in astuple(self)]


@dataclass(frozen=True)
class CentralityResult:
    values: np.ndarray
    average: float
    eigenvalue: float
    converged: bool
    iterations: int
    residual: float


def density(g):
    if g.n < 2:
        return 0.0
    return g.m / (g.n * (g.n - 1) / 2)


def degree_stats(g):
    """Return ``(max_degree, avg_degree)``."""
    if g.n == 0:
        raise UndefinedStatisticError("degree statistics are undefined for a graph with no nodes")
    return int(g.degrees.max()), 2.0 * g.m / g.n


def node_triangles(g):
    return kernels.node_triangles(g.indptr, g.indices)


def triangle_count(g):
    return int(node_triangles(g).sum() // 3)


def local_clustering(g):
    tri = node_triangles(g).astype(np.float64)
    deg = g.degrees.astype(np.float64)
    pairs = deg * (deg - 1.0)
    out = np.zeros(g.n)
    ok = deg >= 2
    out[ok] = 2.0 * tri[ok] / pairs[ok]
    return out


def avg_clustering(g):
    """Mean local clustering over all nodes; nodes of degree < 2 count as 0."""
    if g.n == 0:
        return 0.0
    return float(local_clustering(g).mean())


def core_numbers(g):
    return kernels.core_numbers(g.indptr, g.indices)


def max_kcore(g):
    """Degeneracy: largest k whose k-core is non-empty."""
    if g.n == 0:
        return 0
    return int(core_numbers(g).max())


def largest_component(g):
    """Node indices of the largest connected component (ties: lowest node id)."""
    _, labels = connected_components(g.to_scipy(), directed=False)
    sizes = np.bincount(labels)
    # labels are assigned in order of first node, so argmax picks the lowest-id tie
    return np.flatnonzero(labels == np.argmax(sizes))


def eigenvector_centrality(g, tol=1e-8, max_iter=1000):
    """Dominant adjacency eigenvector by power iteration.

    Runs on the largest connected component, iterating ``A + I`` so that
    bipartite components still converge. Stops once both the successive
    iterate change and the eigen-residual ``|Av - lv|`` fall below ``tol``
    in the infinity norm. The result has unit Euclidean norm over all
    nodes, with zeros outside the component.
    """
    if g.m == 0:
        raise DegenerateSpectrumError("eigenvector centrality needs at least one edge")
    comp = largest_component(g)
    A = g.to_scipy()[comp][:, comp].tocsr()
    v = np.full(len(comp), 1.0 / np.sqrt(len(comp)))
    diff = np.inf
    converged = False
    it = 0
    lam = 0.0
    res = np.inf
    while True:
        w = A @ v
        lam = float(v @ w)
        res = float(np.max(np.abs(w - lam * v)))
        if diff < tol and res < tol:
            converged = True
            break
        if it >= max_iter:
            break
        nxt = w + v
        nxt /= np.linalg.norm(nxt)
        diff = float(np.max(np.abs(nxt - v)))
        v = nxt
        it += 1
    values = np.zeros(g.n)
    values[comp] = np.abs(v)
    return CentralityResult(
        values=values,
        average=float(values.mean()),
        eigenvalue=lam,
        converged=converged,
        iterations=it,
        residual=res,
    )


def extract_features(g):
    max_deg, avg_deg = degree_stats(g)
    tri = node_triangles(g)
    deg = g.degrees.astype(np.float64)
    clust = np.zeros(g.n)
    ok = deg >= 2
    clust[ok] = 2.0 * tri[ok] / (deg[ok] * (deg[ok] - 1.0))
    if g.m:
        centrality = eigenvector_centrality(g).average
    else:
        centrality = 0.0
    return FeatureVector(
        num_nodes=g.n,
        num_edges=g.m,
        density=density(g),
        max_degree=max_deg,
        avg_degree=avg_deg,
        max_kcore=max_kcore(g),
        avg_clustering=float(clust.mean()),
        num_triangles=int(tri.sum() // 3),
        avg_eigenvector_centrality=centrality,
    )
