import numpy as np
import pytest

from relucert import SparseNetwork, layer_from_dense


def dense_eval(net: SparseNetwork, x: np.ndarray) -> np.ndarray:
    """Independent dense-matrix reference evaluator (the oracle for sparse evaluate)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    z = np.atleast_2d(x).T
    for j, layer in enumerate(net.layers):
        W = np.zeros((layer.rows, layer.cols))
        for r, c, v in zip(layer.row_idx, layer.col_idx, layer.values):
            W[r, c] = v
        z = W @ z
        if j < len(net.layers) - 1:
            z = np.maximum(z - np.asarray(layer.shift)[:, None], 0.0)
    return z.T[0] if single else z.T


def random_network(rng: np.random.Generator, depth=None, max_width=8, density=0.5) -> SparseNetwork:
    """A random valid sparse network for property-style tests."""
    L = int(rng.integers(0, 6)) if depth is None else depth
    widths = [int(rng.integers(1, max_width + 1)) for _ in range(L + 2)]
    layers = []
    for j in range(L + 1):
        W = rng.uniform(-1, 1, size=(widths[j + 1], widths[j]))
        W[rng.random(W.shape) > density] = 0.0
        shift = rng.uniform(-1, 1, size=widths[j + 1]) if j < L else None
        layers.append(layer_from_dense(W, shift))
    return SparseNetwork(tuple(widths), tuple(layers))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
