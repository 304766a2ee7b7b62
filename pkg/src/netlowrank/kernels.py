"""Kernel backend selection.

The compiled extension is preferred; set ``NETLOWRANK_PURE=1`` to force the
pure-Python fallback (useful for debugging and for benchmarking the two).
"""
import os

BACKEND = "python"

if os.environ.get("NETLOWRANK_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import core_numbers, logistic_loss_residual, node_triangles, pegasos_epochs

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass

if BACKEND == "python":
    from ._kernels_py import core_numbers, logistic_loss_residual, node_triangles, pegasos_epochs

__all__ = ["BACKEND", "core_numbers", "logistic_loss_residual", "node_triangles", "pegasos_epochs"]
