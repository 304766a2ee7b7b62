"""Low-rank network embeddings (TSVD, logistic PCA) and a classification benchmark."""
from .graph import Graph, load_graph, save_graph, to_dense
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["Graph", "KERNEL_BACKEND", "load_graph", "save_graph", "to_dense", "__version__"]
