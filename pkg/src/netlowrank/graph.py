"""Simple undirected graphs, file ingestion and dense adjacency export."""
from __future__ import annotations

import logging
import os
import re

import numpy as np

from .errors import CapacityError, GraphFormatError

logger = logging.getLogger(__name__)

DENSE_CAP = 20000

_SPLIT = re.compile(r"[\s,]+")
_NODES_HEADER = re.compile(r"^[#%]\s*nodes\s*[=:]\s*(\d+)\s*$", re.IGNORECASE)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.flags.writeable = False
    return a


class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` int64 array of pairs ``u < v`` in lexicographic
    order; ``indptr``/``indices`` hold the symmetric adjacency in CSR layout
    with every neighbor list sorted ascending.

    Use :meth:`from_edges` to build one from arbitrary pairs.
    """

    __slots__ = ("n", "edges", "indptr", "indices")

    def __init__(self, n, edges):
        n = int(n)
        if n < 0:
            raise ValueError("node count must be non-negative")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint outside 0..n-1")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must satisfy u < v")
            key = edges[:, 0] * n + edges[:, 1]
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be sorted and unique")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", _frozen(edges))
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        object.__setattr__(self, "indptr", _frozen(indptr))
        object.__setattr__(self, "indices", _frozen(dst[order]))

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    @classmethod
    def from_edges(cls, n, pairs, *, return_stats=False):
        """Build a graph from arbitrary node pairs.

        Self-loops are dropped, pair orientation is ignored and repeated
        pairs collapse to one edge. With ``return_stats`` the number of
        dropped self-loops and duplicates is returned alongside.
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        loops = pairs[:, 0] == pairs[:, 1]
        pairs = pairs[~loops]
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        uniq = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(pairs) else pairs
        g = cls(n, uniq)
        if return_stats:
            return g, {"self_loops": int(loops.sum()), "duplicates": int(len(pairs) - len(uniq))}
        return g

    @property
    def m(self):
        return len(self.edges)

    @property
    def degrees(self):
        return np.diff(self.indptr)

    def neighbors(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def to_scipy(self):
        """Symmetric CSR matrix (float64) of the adjacency."""
        from scipy.sparse import csr_matrix

        data = np.ones(len(self.indices), dtype=np.float64)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def relabel(self, perm):
        """Graph with node ``u`` renamed to ``perm[u]``."""
        perm = np.asarray(perm, dtype=np.int64)
        return Graph.from_edges(self.n, perm[self.edges])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def to_dense(g, cap=DENSE_CAP):
    """Dense symmetric 0/1 float64 adjacency matrix with zero diagonal."""
    if g.n > cap:
        raise CapacityError(f"graph has {g.n} nodes, dense cap is {cap}")
    A = np.zeros((g.n, g.n), dtype=np.float64)
    if g.m:
        A[g.edges[:, 0], g.edges[:, 1]] = 1.0
        A[g.edges[:, 1], g.edges[:, 0]] = 1.0
    return A


def from_dense(A):
    """Graph from the strict upper triangle of a square 0/1 matrix."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    u, v = np.nonzero(np.triu(A != 0, k=1))
    return Graph(A.shape[0], np.stack([u, v], axis=1))


# ---------------------------------------------------------------- ingestion


def _detect_format(path, first_line):
    if first_line.startswith("%%MatrixMarket"):
        return "matrix-market"
    if os.path.splitext(str(path))[1].lower() == ".mtx":
        return "matrix-market"
    return "edge-list"


def load_graph(path, format="auto"):
    """Read a graph from an edge list or a MatrixMarket coordinate file.

    Edge lists take two integer tokens per line (separated by whitespace or
    commas, extra tokens ignored) and ``#``/``%`` comment lines. A
    ``# nodes=N`` comment fixes the node count (so trailing isolated nodes
    survive); without it the count is the largest id plus one. Ids are
    0-based and used as given.
    MatrixMarket indices are 1-based and the header's size is the node count.

    Self-loops and repeated or reversed pairs are dropped with a warning.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise GraphFormatError(f"cannot read file: {exc}", path=path) from exc
    if not any(line.strip() for line in lines):
        raise GraphFormatError("empty file", path=path)
    if format == "auto":
        format = _detect_format(path, lines[0])
    if format == "edge-list":
        n, pairs = _parse_edge_list(lines, path)
    elif format == "matrix-market":
        n, pairs = _parse_matrix_market(lines, path)
    else:
        raise ValueError(f"unknown graph format {format!r}")
    g, stats = Graph.from_edges(n, pairs, return_stats=True)
    if stats["self_loops"] or stats["duplicates"]:
        logger.warning(
            "%s: dropped %d self-loops and %d duplicate/reversed pairs",
            path, stats["self_loops"], stats["duplicates"],
        )
    return g


def _parse_edge_list(lines, path):
    declared = None
    raw = []
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s:
            continue
        if s[0] in "#%":
            m = _NODES_HEADER.match(s)
            if m:
                declared = int(m.group(1))
            continue
        tok = _SPLIT.split(s)
        if len(tok) < 2:
            raise GraphFormatError("expected two node ids", path=path, line=lineno)
        try:
            u, v = int(tok[0]), int(tok[1])
        except ValueError:
            raise GraphFormatError(f"non-integer node id in {s!r}", path=path, line=lineno) from None
        raw.append((u, v, lineno))

    if declared is not None:
        for u, v, lineno in raw:
            if not (0 <= u < declared and 0 <= v < declared):
                raise GraphFormatError(
                    f"node id outside declared range 0..{declared - 1}", path=path, line=lineno
                )
        return declared, [(u, v) for u, v, _ in raw]

    for u, v, lineno in raw:
        if u < 0 or v < 0:
            raise GraphFormatError("negative node id", path=path, line=lineno)
    n = 1 + max((max(u, v) for u, v, _ in raw), default=-1)
    return n, [(u, v) for u, v, _ in raw]


def _parse_matrix_market(lines, path):
    header = lines[0].split()
    if len(header) < 5 or header[0] != "%%MatrixMarket":
        raise GraphFormatError("missing %%MatrixMarket header", path=path, line=1)
    obj, fmt = header[1].lower(), header[2].lower()
    if obj != "matrix" or fmt != "coordinate":
        raise GraphFormatError(f"unsupported MatrixMarket type {obj} {fmt}", path=path, line=1)
    size = None
    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        tok = s.split()
        if size is None:
            try:
                rows, cols, _nnz = (int(t) for t in tok[:3])
            except ValueError:
                raise GraphFormatError("bad size line", path=path, line=lineno) from None
            if rows != cols:
                raise GraphFormatError(f"matrix is not square ({rows}x{cols})", path=path, line=lineno)
            size = rows
            continue
        if len(tok) < 2:
            raise GraphFormatError("expected row and column index", path=path, line=lineno)
        try:
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
        except ValueError:
            raise GraphFormatError(f"non-integer index in {s!r}", path=path, line=lineno) from None
        if not (0 <= i < size and 0 <= j < size):
            raise GraphFormatError("index outside matrix bounds", path=path, line=lineno)
        pairs.append((i, j))
    if size is None:
        raise GraphFormatError("missing size line", path=path)
    return size, pairs


def save_graph(g, path, format="edge-list"):
    """Write ``g`` so that :func:`load_graph` reads back an equal graph."""
    if format == "auto":
        format = "matrix-market" if str(path).endswith(".mtx") else "edge-list"
    with open(path, "w", encoding="utf-8") as fh:
        if format == "edge-list":
            fh.write(f"# nodes={g.n}\n")
            for u, v in g.edges.tolist():
                fh.write(f"{u} {v}\n")
        elif format == "matrix-market":
            fh.write("%%MatrixMarket matrix coordinate pattern symmetric\n")
            fh.write(f"{g.n} {g.n} {g.m}\n")
            for u, v in g.edges.tolist():
                fh.write(f"{v + 1} {u + 1}\n")
        else:
            raise ValueError(f"unknown graph format {format!r}")


def load_karate():
    """Zachary's karate club network (34 nodes, 78 edges), bundled."""
    return load_graph(os.path.join(os.path.dirname(__file__), "data", "karate.mtx"))
