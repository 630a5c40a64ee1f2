"""Approximation network for a function from a Holder ball on [0,1]^r.

The pipeline: a monomial network feeds one extra layer holding the shifted,
B-rescaled local Taylor coefficients (one unit per grid point); in parallel, a
hat network emits the localized bump products; a bank of product networks
pairs them and a final fan-out/fan-in stage realizes a -> B M^r (a - c) with
unit weights, undoing the coefficient rescaling.  Depth, width and sparsity
claims in the returned certificate are closed forms; the error claim is

    (2K+1)(1 + r^2 + beta^2) 6^r N 2^-m  +  K 3^beta N^(-beta/r).
"""

from __future__ import annotations

import math

import numpy as np

from .calculus import compose, fuse, parallelize, remap_inputs, sum_outputs, sync_depth
from .certificates import ConstructionCertificate
from .network import SparseLayer, SparseNetwork, layer_from_triplets
from .primitives import (
    RefusalError,
    build_hat,
    build_mon,
    ceil_log2,
    hat_grid,
    multi_indices,
    _mult_network,
)
from .taylor import HolderTarget, taylor_poly

__all__ = ["build_holder_net", "holder_depth", "holder_error_bound", "largest_grid_M"]


def holder_depth(r: int, beta: float, m: int) -> int:
    """Exact hidden-layer count of the construction: 8 + (m+5)(1 + ceil(log2(r v beta)))."""
    return 8 + (m + 5) * (1 + ceil_log2(max(r, beta)))


def holder_error_bound(r: int, beta: float, K: float, m: int, N: int) -> float:
    return (2 * K + 1) * (1 + r * r + beta * beta) * 6.0**r * N * 2.0**-m + K * 3.0**beta * N ** (
        -beta / r
    )


def largest_grid_M(N: int, r: int) -> int:
    """Largest integer M with (M+1)^r <= N."""
    M = max(int(round(N ** (1.0 / r))) - 1, 0)
    while (M + 2) ** r <= N:
        M += 1
    while M >= 1 and (M + 1) ** r > N:
        M -= 1
    return M


def _rescale_network(B: int, M: int, r: int) -> SparseNetwork:
    """a -> B M^r (a - c) with c = 1/(2 M^r), all weights equal to one.

    Two branches (a-c)_+ and (c-a)_+ fan out to M^r units, re-collect, fan out
    to B units and re-collect with opposite signs; no parameter exceeds one.
    """
    MP = M**r
    c = 0.5 / MP
    l0 = layer_from_triplets(2, 1, [(0, 0, 1.0), (1, 0, -1.0)], shift=[c, -c])
    l1 = layer_from_triplets(
        2 * MP,
        2,
        [(i, 0, 1.0) for i in range(MP)] + [(MP + i, 1, 1.0) for i in range(MP)],
        shift=[0.0] * (2 * MP),
    )
    l2 = layer_from_triplets(
        2,
        2 * MP,
        [(0, i, 1.0) for i in range(MP)] + [(1, MP + i, 1.0) for i in range(MP)],
        shift=[0.0, 0.0],
    )
    l3 = layer_from_triplets(
        2 * B,
        2,
        [(i, 0, 1.0) for i in range(B)] + [(B + i, 1, 1.0) for i in range(B)],
        shift=[0.0] * (2 * B),
    )
    l4 = layer_from_triplets(
        1, 2 * B, [(0, i, 1.0) for i in range(B)] + [(0, B + i, -1.0) for i in range(B)]
    )
    return SparseNetwork((1, 2, 2 * MP, 2, 2 * B, 1), (l0, l1, l2, l3, l4))


def build_holder_net(
    target: HolderTarget, m: int, N: int, sup_bound: float | None = None
) -> tuple[SparseNetwork, ConstructionCertificate]:
    """Build the approximation network for ``target`` at resolution (m, N).

    Requires N >= (beta+1)^r v (K+1)e^r.  The optional ``sup_bound`` is attached
    to the returned network for audit-and-flag purposes only (never clamped);
    callers wanting a hard output bound compose with ``calculus.scale_output``.
    """
    r, beta, K = target.dim, target.beta, target.radius
    if m < 1:
        raise RefusalError("build_holder_net requires m >= 1")
    needed = max((beta + 1) ** r, (K + 1) * math.e**r)
    if N < needed:
        raise RefusalError(
            f"N = {N} violates the precondition N >= (beta+1)^r v (K+1)e^r = {needed:.6g}"
        )
    M = largest_grid_M(N, r)
    B = math.ceil(2 * K * math.e**r)
    n_grid = (M + 1) ** r
    l_star = (m + 5) * ceil_log2(max(r, beta))

    # Q1: monomials -> shifted, rescaled local Taylor values, one unit per grid point.
    mon_net, _ = build_mon(m, beta, r)
    alphas = multi_indices(r, beta)
    col_of = {alpha: i for i, alpha in enumerate(alphas)}
    trips = []
    for l_idx, anchor in enumerate(hat_grid(M, r)):
        coeffs = taylor_poly(target, anchor)
        for gamma, c in coeffs.items():
            if c != 0.0:
                trips.append((l_idx, col_of[gamma], c / B))
    proj = layer_from_triplets(n_grid, len(alphas), trips, shift=[-0.5] * n_grid)
    ident = np.arange(n_grid, dtype=np.int64)
    proj_net = SparseNetwork(
        (len(alphas), n_grid, n_grid),
        (proj, SparseLayer(n_grid, n_grid, ident, ident, np.ones(n_grid), None)),
    )
    q1 = fuse(proj_net, mon_net)

    hat_net, _ = build_hat(M, m, r)

    stage_depth = 2 + l_star
    q1 = sync_depth(q1, stage_depth - q1.depth)
    hat_net = sync_depth(hat_net, stage_depth - hat_net.depth)
    pair = parallelize([q1, hat_net])

    mult = _mult_network(m)
    bank = parallelize(
        [remap_inputs(mult, 2 * n_grid, [l, n_grid + l]) for l in range(n_grid)]
    )
    q2 = compose(sum_outputs(bank), pair, 0.0)
    q2 = sync_depth(q2, 1)

    net = compose(_rescale_network(B, M, r), q2, 0.0)
    if sup_bound is not None:
        net = SparseNetwork(net.widths, net.layers, sup_bound)

    depth = holder_depth(r, beta, m)
    if net.depth != depth:
        raise AssertionError(f"construction produced depth {net.depth}, formula says {depth}")
    cert = ConstructionCertificate(
        bound_formula_id="holder",
        claimed_depth=depth,
        claimed_width_bound=6 * (r + math.ceil(beta)) * N,
        claimed_sparsity_bound=math.ceil(141 * (r + beta + 1) ** (3 + r) * N * (m + 6)),
        claimed_sup_error=holder_error_bound(r, beta, K, m, N),
        domain=((0.0, 1.0),) * r,
        target=(
            {"kind": "named_holder", "name": target.name, "r": r, "beta": beta, "K": K}
            if target.name
            else {"kind": "opaque_holder", "r": r, "beta": beta, "K": K}
        ),
        derivative_provenance=target.derivative_provenance,
        extras={"m": m, "N": N, "M": M, "B": B},
    )
    return net, cert
