"""Explicit approximation networks: products, monomials and local hat bumps.

Every builder returns a (SparseNetwork, ConstructionCertificate) pair.  The
nets realize piecewise-linear interpolants of x(1-x) through compositions of
tooth maps; because all weights, shifts and breakpoints are dyadic rationals,
evaluation on dyadic inputs is exact in binary floating point, which is what
makes the zero-propagation identities testable as exact equalities.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .calculus import compose, fuse, identity_network, parallelize, remap_inputs
from .certificates import ConstructionCertificate
from .network import SparseLayer, SparseNetwork, layer_from_triplets

__all__ = [
    "RefusalError",
    "tri_wave_ref",
    "r_wave_ref",
    "build_mult",
    "build_mult_r",
    "build_mon",
    "build_hat",
    "multi_indices",
    "ceil_log2",
]

HAT_GRID_GUARD = 10**6


class RefusalError(ValueError):
    """A builder precondition failed; the message cites the violated inequality."""


def ceil_log2(x: float) -> int:
    """Smallest integer k with 2**k >= x (0 for x <= 1)."""
    if x <= 1:
        return 0
    k = 0
    while 2**k < x:
        k += 1
    return k


def multi_indices(r: int, gamma: float) -> list[tuple[int, ...]]:
    """All multi-indices alpha with |alpha| < gamma, in lexicographic order."""
    cap = int(math.ceil(gamma))
    return [
        alpha
        for alpha in itertools.product(range(max(cap, 1)), repeat=r)
        if sum(alpha) < gamma
    ]


# ---------------------------------------------------------------------------
# Scalar reference oracles for the triangle-wave pipeline
# ---------------------------------------------------------------------------


def tri_wave_ref(k: int, x) -> np.ndarray | float:
    """Tooth map T^k(x) = (x/2) ^ (2^(1-2k) - x/2) on [0, 2^(2-2k)]."""
    if k < 1:
        raise ValueError("k must be >= 1")
    arr = np.asarray(x, dtype=np.float64)
    out = np.minimum(arr / 2.0, 2.0 ** (1 - 2 * k) - arr / 2.0)
    return float(out) if np.isscalar(x) else out


def r_wave_ref(k: int, x) -> np.ndarray | float:
    """Triangle wave R^k = T^k o ... o T^1 on [0, 1] (not a network)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out = np.asarray(x, dtype=np.float64)
    for j in range(1, k + 1):
        out = np.minimum(out / 2.0, 2.0 ** (1 - 2 * j) - out / 2.0)
    return float(out) if np.isscalar(x) else out


# ---------------------------------------------------------------------------
# Mult_m : approximate (x, y) -> xy on [0,1]^2
# ---------------------------------------------------------------------------


def _mult_network(m: int) -> SparseNetwork:
    # First layer: tooth-decomposed arguments of the polarization identity
    #   u1 = (x - y + 1)/2 with companion h1 = (x + y)/2,
    #   u2 = (x + y)/2     with companion h2 = 1/4.
    layer0 = layer_from_triplets(
        6,
        2,
        [
            (0, 0, 0.25), (0, 1, -0.25),   # T_plus(u1)
            (1, 0, 0.5), (1, 1, -0.5),     # T_minus^1(u1)
            (2, 0, 0.5), (2, 1, 0.5),      # h1
            (3, 0, 0.25), (3, 1, 0.25),    # T_plus(u2)
            (4, 0, 0.5), (4, 1, 0.5),      # T_minus^1(u2)
            # row 5 has no weights: constant h2 = sigma(1/4)
        ],
        shift=[-0.25, 0.0, 0.0, 0.0, 0.5, -0.25],
    )
    layers = [layer0]
    # m tooth layers; each keeps, per branch, the state
    #   (T_plus(R^k), T_minus^{k+1}(R^k), sum_{j<=k} R^j + h).
    for k in range(1, m + 1):
        trips = []
        shift = np.zeros(6)
        for off in (0, 3):
            trips += [
                (off, off, 0.5), (off, off + 1, -0.5),
                (off + 1, off, 1.0), (off + 1, off + 1, -1.0),
                (off + 2, off, 1.0), (off + 2, off + 1, -1.0), (off + 2, off + 2, 1.0),
            ]
            shift[off + 1] = 2.0 ** (-1 - 2 * k)
        layers.append(layer_from_triplets(6, 6, trips, shift))
    # Collapse each branch to its full partial sum (both are non-negative).
    layers.append(
        layer_from_triplets(
            2,
            6,
            [(0, 0, 1.0), (0, 1, -1.0), (0, 2, 1.0), (1, 3, 1.0), (1, 4, -1.0), (1, 5, 1.0)],
            shift=[0.0, 0.0],
        )
    )
    # (u - v)_+ ^ 1 realized as sigma(1 - sigma(1 - (u - v))).
    layers.append(layer_from_triplets(1, 2, [(0, 0, -1.0), (0, 1, 1.0)], shift=[-1.0]))
    layers.append(layer_from_triplets(1, 1, [(0, 0, -1.0)], shift=[-1.0]))
    layers.append(layer_from_triplets(1, 1, [(0, 0, 1.0)]))
    widths = (2,) + (6,) * (m + 1) + (2, 1, 1, 1)
    return SparseNetwork(widths, tuple(layers))


def _capacity(widths) -> int:
    return sum((widths[l] + 1) * widths[l + 1] for l in range(len(widths) - 1)) - widths[-1]


def build_mult(m: int) -> tuple[SparseNetwork, ConstructionCertificate]:
    """Network with m+4 hidden layers of width <= 6 computing xy on [0,1]^2 up to 2^-m.

    Outputs lie in [0,1] and the boundary identities Mult(0, y) = Mult(x, 0) = 0
    hold exactly (in exact arithmetic; in float64, exactly on dyadic inputs).
    """
    if m < 1:
        raise RefusalError("build_mult requires m >= 1")
    net = _mult_network(m)
    claimed_widths = (2,) + (6,) * (m + 4) + (1,)
    cert = ConstructionCertificate(
        bound_formula_id="mult",
        claimed_depth=m + 4,
        claimed_width_bound=6,
        claimed_sparsity_bound=_capacity(claimed_widths),
        claimed_sup_error=2.0**-m,
        domain=((0.0, 1.0), (0.0, 1.0)),
        target={"kind": "product", "r": 2},
        extras={"m": m},
    )
    return net, cert


# ---------------------------------------------------------------------------
# Mult_m^r : approximate the r-fold product on [0,1]^r
# ---------------------------------------------------------------------------


def _pad_to_power_of_two(r: int, q: int) -> SparseNetwork:
    """One hidden layer mapping (x_1..x_r) -> (x_1..x_r, 1, ..., 1) with 2^q slots."""
    width = 2**q
    trips = [(i, i, 1.0) for i in range(r)]
    shift = np.zeros(width)
    shift[r:] = -1.0  # sigma(0 - (-1)) = 1 for the padded slots
    layer0 = layer_from_triplets(width, r, trips, shift)
    out_idx = np.arange(width, dtype=np.int64)
    out = SparseLayer(width, width, out_idx, out_idx, np.ones(width), None)
    return SparseNetwork((r, width, width), (layer0, out))


def _mult_tree_network(m: int, r: int) -> SparseNetwork:
    if r == 1:
        return identity_network(1)
    q = ceil_log2(r)
    mult = _mult_network(m)
    net = _pad_to_power_of_two(r, q)
    for j in range(1, q + 1):
        n_pairs = 2 ** (q - j)
        stage = parallelize(
            [remap_inputs(mult, 2 * n_pairs, [2 * i, 2 * i + 1]) for i in range(n_pairs)]
        )
        if j == 1:
            net = fuse(stage, net)
        else:
            net = compose(stage, net, 0.0)
    return net


def build_mult_r(m: int, r: int) -> tuple[SparseNetwork, ConstructionCertificate]:
    """Binary product tree of Mult_m blocks: depth (m+5)*ceil(log2 r), error r^2 2^-m.

    Pads to the next power of two with constant-one inputs; degenerates to the
    identity for r = 1.  The output is exactly 0 whenever a coordinate is 0.
    """
    if m < 1 or r < 1:
        raise RefusalError("build_mult_r requires m >= 1 and r >= 1")
    net = _mult_tree_network(m, r)
    cert = ConstructionCertificate(
        bound_formula_id="mult_tree",
        claimed_depth=(m + 5) * ceil_log2(r),
        claimed_width_bound=6 * r,
        claimed_sparsity_bound=42 * r * r * (1 + (m + 5) * ceil_log2(r)),
        claimed_sup_error=r * r * 2.0**-m,
        domain=((0.0, 1.0),) * r,
        target={"kind": "product", "r": r},
        extras={"m": m},
    )
    return net, cert


# ---------------------------------------------------------------------------
# Mon_{m,gamma}^r : all monomials x^alpha with |alpha| < gamma
# ---------------------------------------------------------------------------


def _unit_chain(r: int, col: int | None, depth: int) -> SparseNetwork:
    """Width-1 subnet passing x_col (or the constant 1 when col is None) through ``depth`` layers."""
    if col is None:
        first = layer_from_triplets(1, r, [], shift=[-1.0])
    else:
        first = layer_from_triplets(1, r, [(0, col, 1.0)], shift=[0.0])
    layers = [first]
    for _ in range(depth - 1):
        layers.append(layer_from_triplets(1, 1, [(0, 0, 1.0)], shift=[0.0]))
    layers.append(layer_from_triplets(1, 1, [(0, 0, 1.0)]))
    return SparseNetwork((r,) + (1,) * depth + (1,), tuple(layers))


def _monomial_subnet(m: int, r: int, alpha: tuple[int, ...], depth: int) -> SparseNetwork:
    k = sum(alpha)
    if k == 0:
        return _unit_chain(r, None, depth)
    if k == 1:
        return _unit_chain(r, alpha.index(1), depth)
    distinct = [i for i, a in enumerate(alpha) if a > 0]
    pos = {c: t for t, c in enumerate(distinct)}
    slots = [pos[c] for c in distinct for _ in range(alpha[c])]
    base = remap_inputs(_mult_tree_network(m, k), len(distinct), slots)
    q_extra = depth - base.depth
    sel = layer_from_triplets(
        len(distinct), r, [(t, c, 1.0) for c, t in pos.items()], shift=[0.0] * len(distinct)
    )
    prefix_layers = [sel]
    for _ in range(q_extra - 1):
        idx = np.arange(len(distinct), dtype=np.int64)
        prefix_layers.append(
            SparseLayer(len(distinct), len(distinct), idx, idx, np.ones(len(distinct)), np.zeros(len(distinct)))
        )
    idx = np.arange(len(distinct), dtype=np.int64)
    prefix_layers.append(SparseLayer(len(distinct), len(distinct), idx, idx, np.ones(len(distinct)), None))
    prefix = SparseNetwork((r,) + (len(distinct),) * q_extra + (len(distinct),), tuple(prefix_layers))
    return fuse(base, prefix)


def build_mon(m: int, gamma: float, r: int) -> tuple[SparseNetwork, ConstructionCertificate]:
    """Network emitting (x^alpha)_{|alpha| < gamma} in lexicographic multi-index order.

    Depth 1 + (m+5)*ceil(log2(gamma v 1)); each coordinate is within
    gamma^2 2^-m of its monomial and lies in [0,1].  Linear and constant
    monomials are exact; non-constant coordinates vanish exactly when a
    participating input coordinate is 0.
    """
    if gamma <= 0 or r < 1 or m < 1:
        raise RefusalError("build_mon requires gamma > 0, r >= 1, m >= 1")
    alphas = multi_indices(r, gamma)
    depth = 1 + (m + 5) * ceil_log2(max(gamma, 1.0))
    net = parallelize([_monomial_subnet(m, r, alpha, depth) for alpha in alphas])
    c = len(alphas)
    width_bound = 6 * int(math.ceil(gamma)) * c
    claimed_widths = (r,) + (width_bound,) * depth + (c,)
    cert = ConstructionCertificate(
        bound_formula_id="monomials",
        claimed_depth=depth,
        claimed_width_bound=width_bound,
        claimed_sparsity_bound=_capacity(claimed_widths),
        claimed_sup_error=gamma * gamma * 2.0**-m,
        domain=((0.0, 1.0),) * r,
        target={"kind": "monomials", "r": r, "gamma": gamma},
        extras={"m": m, "multi_indices": [list(a) for a in alphas]},
    )
    return net, cert


# ---------------------------------------------------------------------------
# Hat^r : products of local hat bumps on the grid D(M)
# ---------------------------------------------------------------------------


def hat_grid(M: int, r: int) -> np.ndarray:
    """Grid D(M) = {l/M} in lexicographic order over l tuples; shape ((M+1)^r, r)."""
    pts = np.array(list(itertools.product(range(M + 1), repeat=r)), dtype=np.float64)
    return pts / M


def hat_products_ref(M: int, r: int, x: np.ndarray) -> np.ndarray:
    """Reference values prod_j (1/M - |x_j - x_j^l|)_+ for all grid points; shape (n, (M+1)^r)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    grid = hat_grid(M, r)
    bumps = np.maximum(1.0 / M - np.abs(x[:, None, :] - grid[None, :, :]), 0.0)
    return np.prod(bumps, axis=2)


def build_hat(M: int, m: int, r: int) -> tuple[SparseNetwork, ConstructionCertificate]:
    """Network emitting, for every grid point of D(M), the product of axis hats.

    Coordinate l approximates prod_j (1/M - |x_j - x_j^l|)_+ within r^2 2^-m and
    is exactly zero outside the sup-norm 1/M ball of x_l.  Output order is the
    lexicographic order of the grid tuples.
    """
    if M < 1 or m < 1 or r < 1:
        raise RefusalError("build_hat requires M, m, r >= 1")
    n_grid = (M + 1) ** r
    if n_grid > HAT_GRID_GUARD:
        raise RefusalError(
            f"hat grid has (M+1)^r = {n_grid} points, above the guard of {HAT_GRID_GUARD}; "
            "refusing the combinatorial blow-up"
        )
    n_units = r * (M + 1)
    plus, minus = [], []
    shifts0 = np.zeros(2 * n_units)
    for j in range(r):
        for l in range(M + 1):
            u = j * (M + 1) + l
            plus.append((u, j, 1.0))
            shifts0[u] = l / M
            minus.append((n_units + u, j, -1.0))
            shifts0[n_units + u] = -l / M
    layer0 = layer_from_triplets(2 * n_units, r, plus + minus, shifts0)
    trips1 = []
    for u in range(n_units):
        trips1 += [(u, u, -1.0), (u, n_units + u, -1.0)]
    layer1 = layer_from_triplets(n_units, 2 * n_units, trips1, [-1.0 / M] * n_units)
    out_idx = np.arange(n_units, dtype=np.int64)
    front = SparseNetwork(
        (r, 2 * n_units, n_units, n_units),
        (layer0, layer1, SparseLayer(n_units, n_units, out_idx, out_idx, np.ones(n_units), None)),
    )
    if r == 1:
        net = front
    else:
        tree = _mult_tree_network(m, r)
        blocks = []
        for l_tuple in itertools.product(range(M + 1), repeat=r):
            cols = [j * (M + 1) + l_tuple[j] for j in range(r)]
            blocks.append(remap_inputs(tree, n_units, cols))
        net = fuse(parallelize(blocks), front)
    cert = ConstructionCertificate(
        bound_formula_id="hat",
        claimed_depth=2 + (m + 5) * ceil_log2(r),
        claimed_width_bound=6 * r * n_grid,
        claimed_sparsity_bound=49 * r * r * n_grid * (1 + (m + 5) * ceil_log2(r)),
        claimed_sup_error=r * r * 2.0**-m,
        domain=((0.0, 1.0),) * r,
        target={"kind": "hat_grid", "r": r, "M": M},
        extras={"m": m, "grid_order": "lexicographic"},
    )
    return net, cert
