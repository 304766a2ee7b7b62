"""Seeded random graph models.

All randomness comes from numpy's ``PCG64`` bit generator seeded with the
caller's integer seed, so identical specs give identical graphs on every
platform numpy supports.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .graph import Graph

logger = logging.getLogger(__name__)

PRNG_NAME = "numpy.random.PCG64"

MODELS = ("erdos-renyi", "barabasi-albert", "chung-lu", "star-noise", "ring-lattice-noise")


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def gen_erdos_renyi(n, p, seed):
    if not 0.0 <= p <= 1.0:
        raise DataError(f"edge probability must lie in [0, 1], got {p}")
    if n < 0:
        raise DataError("n must be non-negative")
    rng = make_rng(seed)
    chunks = []
    for i in range(n - 1):
        hit = np.flatnonzero(rng.random(n - i - 1) < p)
        if len(hit):
            chunks.append(np.stack([np.full(len(hit), i), hit + i + 1], axis=1))
    return Graph(n, np.concatenate(chunks) if chunks else np.empty((0, 2)))


def gen_barabasi_albert(n, m_attach, seed):
    """Preferential attachment grown from a complete graph on ``m_attach + 1`` nodes.

    Each new node links to ``m_attach`` distinct earlier nodes, each drawn
    with probability proportional to its current degree; repeated draws are
    discarded and redrawn.
    """
    if not 1 <= m_attach < n:
        raise DataError(f"need 1 <= m_attach < n, got m_attach={m_attach}, n={n}")
    rng = make_rng(seed)
    m0 = m_attach + 1
    total = m0 * (m0 - 1) // 2 + (n - m0) * m_attach
    edges = np.empty((total, 2), dtype=np.int64)
    # every node appears in the pool once per incident edge endpoint
    pool = np.empty(2 * total, dtype=np.int64)
    e = 0
    for u in range(m0):
        for v in range(u + 1, m0):
            edges[e] = (u, v)
            pool[2 * e] = u
            pool[2 * e + 1] = v
            e += 1
    size = 2 * e
    for t in range(m0, n):
        chosen = []
        seen = set()
        while len(chosen) < m_attach:
            for x in pool[rng.integers(0, size, size=m_attach - len(chosen))].tolist():
                if x not in seen and len(chosen) < m_attach:
                    seen.add(x)
                    chosen.append(x)
        for x in chosen:
            edges[e] = (x, t)
            pool[size] = x
            pool[size + 1] = t
            size += 2
            e += 1
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return Graph(n, edges[order])


def gen_chung_lu(w, seed):
    """Independent edges with probability ``min(1, w_i * w_j / sum(w))``."""
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DataError("expected degrees must be finite and non-negative")
    n = len(w)
    total = w.sum()
    if total == 0:
        return Graph(n, np.empty((0, 2)))
    if w.max() ** 2 > total:
        logger.warning("max(w)^2 exceeds sum(w); some Chung-Lu probabilities are clipped at 1")
    rng = make_rng(seed)
    chunks = []
    for i in range(n - 1):
        p = np.minimum(1.0, w[i] * w[i + 1:] / total)
        hit = np.flatnonzero(rng.random(n - i - 1) < p)
        if len(hit):
            chunks.append(np.stack([np.full(len(hit), i), hit + i + 1], axis=1))
    return Graph(n, np.concatenate(chunks) if chunks else np.empty((0, 2)))


def make_power_law_weights(n, exponent, w_min, w_max, seed):
    """``n`` draws from a power law with density ~ w**-exponent on [w_min, w_max]."""
    if exponent <= 1:
        raise DataError("exponent must exceed 1")
    if not 0 < w_min <= w_max:
        raise DataError("need 0 < w_min <= w_max")
    if w_min == w_max:
        return np.full(n, float(w_min))
    rng = make_rng(seed)
    u = rng.random(n)
    a = 1.0 - exponent
    lo, hi = w_min ** a, w_max ** a
    return (lo - u * (lo - hi)) ** (1.0 / a)


def gen_star_noise(n, hubs, p_noise, seed):
    """Union of ``hubs`` stars covering all nodes plus ER(p_noise) noise edges."""
    if not 1 <= hubs < n:
        raise DataError("need 1 <= hubs < n")
    rng = make_rng(seed)
    leaves = np.arange(hubs, n)
    owner = rng.integers(0, hubs, size=len(leaves))
    star = np.stack([owner, leaves], axis=1)
    noise = gen_erdos_renyi(n, p_noise, int(rng.integers(0, 2**63 - 1))).edges
    return Graph.from_edges(n, np.concatenate([star, noise]))


def gen_ring_lattice_noise(n, k_half, p_noise, seed):
    """Ring where each node links to its ``k_half`` nearest neighbors per side, plus noise."""
    if not 1 <= k_half < n / 2:
        raise DataError("need 1 <= k_half < n/2")
    rng = make_rng(seed)
    base = np.arange(n)
    ring = np.concatenate(
        [np.stack([base, (base + s) % n], axis=1) for s in range(1, k_half + 1)]
    )
    noise = gen_erdos_renyi(n, p_noise, int(rng.integers(0, 2**63 - 1))).edges
    return Graph.from_edges(n, np.concatenate([ring, noise]))


@dataclass(frozen=True)
class GeneratorSpec:
    """A model name, its parameters and a seed; fully determines a graph.

    Chung-Lu accepts either explicit ``weights`` or power-law parameters
    ``n, exponent, w_min, w_max`` (weights are then drawn from a seed
    derived from ``seed``).
    """

    model: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise DataError(f"unknown generator model {self.model!r}")

    def generate(self):
        p = self.params
        try:
            if self.model == "erdos-renyi":
                return gen_erdos_renyi(int(p["n"]), float(p["p"]), self.seed)
            if self.model == "barabasi-albert":
                return gen_barabasi_albert(int(p["n"]), int(p["m_attach"]), self.seed)
            if self.model == "chung-lu":
                if "weights" in p:
                    w = p["weights"]
                else:
                    wseed = np.random.SeedSequence([self.seed, 1]).generate_state(1, np.uint64)[0]
                    w = make_power_law_weights(
                        int(p["n"]), float(p["exponent"]), float(p["w_min"]), float(p["w_max"]), int(wseed)
                    )
                return gen_chung_lu(w, self.seed)
            if self.model == "star-noise":
                return gen_star_noise(int(p["n"]), int(p["hubs"]), float(p["p_noise"]), self.seed)
            return gen_ring_lattice_noise(int(p["n"]), int(p["k_half"]), float(p["p_noise"]), self.seed)
        except KeyError as exc:
            raise DataError(f"{self.model} spec is missing parameter {exc}") from None

    def to_dict(self):
        return {"model": self.model, "params": dict(self.params), "seed": int(self.seed), "prng": PRNG_NAME}

    @classmethod
    def from_dict(cls, d):
        return cls(model=d["model"], params=dict(d.get("params", {})), seed=int(d.get("seed", 0)))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)
