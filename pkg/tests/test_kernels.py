import os
import subprocess
import sys

import numpy as np
import pytest

from netlowrank import _kernels_py as py
from netlowrank import kernels

from conftest import random_graph

cy = pytest.importorskip("netlowrank._kernels")


def csr(g):
    return g.indptr, g.indices


def test_backend_is_compiled():
    assert kernels.BACKEND == "cython"


@pytest.mark.parametrize("p", [0.0, 0.05, 0.3, 0.9])
def test_graph_kernel_parity(rng, p):
    for _ in range(5):
        g = random_graph(rng, int(rng.integers(1, 60)), p)
        assert np.array_equal(cy.node_triangles(*csr(g)), py.node_triangles(*csr(g)))
        assert np.array_equal(cy.core_numbers(*csr(g)), py.core_numbers(*csr(g)))


def test_loss_kernel_parity(rng):
    signs = np.where(rng.random((30, 30)) < 0.3, 1.0, -1.0)
    scores = rng.normal(scale=40.0, size=(30, 30))
    r1, r2 = np.empty_like(scores), np.empty_like(scores)
    l1 = cy.logistic_loss_residual(signs, scores, r1)
    l2 = py.logistic_loss_residual(signs, scores, r2)
    assert l1 == pytest.approx(l2, rel=1e-12)
    assert np.allclose(r1, r2, rtol=1e-12, atol=1e-300)
    assert np.isfinite(l1)


def test_pegasos_kernel_parity(rng):
    Xa = np.hstack([rng.normal(size=(40, 4)), np.ones((40, 1))])
    y = np.where(rng.random(40) < 0.5, 1.0, -1.0)
    order = rng.integers(0, 40, size=400).astype(np.int64)
    w1, a1 = cy.pegasos_epochs(Xa, y, 0.05, order)
    w2, a2 = py.pegasos_epochs(Xa, y, 0.05, order)
    assert np.allclose(w1, w2, rtol=1e-10, atol=1e-12)
    assert np.allclose(a1, a2, rtol=1e-10, atol=1e-12)
    assert np.linalg.norm(w1) <= 1 / np.sqrt(0.05) + 1e-12


def test_pure_env_selects_fallback():
    code = "from netlowrank import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, NETLOWRANK_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
