"""Pure-Python implementations of the compiled kernels.

Used when the extension is not built, or when ``NETLOWRANK_PURE=1`` is set.
Results are identical to ``_kernels`` (up to floating-point summation order
in :func:`logistic_loss_residual`).
"""
import numpy as np


def node_triangles(indptr, indices):
    n = len(indptr) - 1
    ptr = indptr.tolist()
    idx = indices.tolist()
    deg = [ptr[u + 1] - ptr[u] for u in range(n)]
    out = []
    for u in range(n):
        du = deg[u]
        out.append(
            {v for v in idx[ptr[u]:ptr[u + 1]] if du < deg[v] or (du == deg[v] and u < v)}
        )
    tri = [0] * n
    for u in range(n):
        nbrs = out[u]
        for v in nbrs:
            for w in nbrs & out[v]:
                tri[u] += 1
                tri[v] += 1
                tri[w] += 1
    return np.asarray(tri, dtype=np.int64)


def core_numbers(indptr, indices):
    n = len(indptr) - 1
    ptr = indptr.tolist()
    idx = indices.tolist()
    deg = [ptr[u + 1] - ptr[u] for u in range(n)]
    md = max(deg, default=0)
    buckets = [set() for _ in range(md + 1)]
    for u, d in enumerate(deg):
        buckets[d].add(u)
    core = [0] * n
    removed = [False] * n
    k = 0
    for _ in range(n):
        while not buckets[k]:
            k += 1
        v = buckets[k].pop()
        removed[v] = True
        core[v] = k
        for u in idx[ptr[v]:ptr[v + 1]]:
            if not removed[u] and deg[u] > k:
                buckets[deg[u]].remove(u)
                deg[u] -= 1
                buckets[deg[u]].add(u)
    return np.asarray(core, dtype=np.int64)


def logistic_loss_residual(signs, scores, residual):
    margin = signs * scores
    e = np.exp(-np.abs(margin))
    loss = np.log1p(e) + np.maximum(-margin, 0.0)
    residual[...] = -signs * np.where(margin >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
    return float(loss.sum())


def pegasos_epochs(Xa, y, lam, order):
    d = Xa.shape[1]
    w = np.zeros(d)
    avg = np.zeros(d)
    radius = 1.0 / np.sqrt(lam)
    for t, i in enumerate(order.tolist(), start=1):
        eta = 1.0 / (lam * t)
        violated = y[i] * (Xa[i] @ w) < 1.0
        w *= 1.0 - eta * lam
        if violated:
            w += eta * y[i] * Xa[i]
        norm = np.sqrt(w @ w)
        if norm > radius:
            w *= radius / norm
        avg += (w - avg) / t
    return w, avg
