"""Function-preserving combination rules for sparse ReLU networks.

The four public transforms (enlarge, compose, sync_depth, parallelize) keep
exact bookkeeping of depth, width and sparsity: the output's depth/width/s are
the closed-form integers, not bounds.  All transforms preserve the [-1, 1]
parameter constraint and the computed function (on the stated domains).

The module also carries a few structural helpers used internally by the
explicit constructions (input remapping with coefficient merging, affine
fusion through an identity/selection boundary, output summation/scaling).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .network import NetworkFormatError, SparseLayer, SparseNetwork, layer_from_triplets

__all__ = [
    "enlarge",
    "compose",
    "sync_depth",
    "parallelize",
    "identity_network",
    "remap_inputs",
    "fuse",
    "sum_outputs",
    "scale_output",
]


def _identity_layer(n: int, shift_zero: bool) -> SparseLayer:
    idx = np.arange(n, dtype=np.int64)
    return SparseLayer(n, n, idx, idx, np.ones(n), np.zeros(n) if shift_zero else None)


def identity_network(dim: int) -> SparseNetwork:
    """Depth-0 network computing x -> x."""
    return SparseNetwork((dim, dim), (_identity_layer(dim, shift_zero=False),))


def enlarge(net: SparseNetwork, target_widths: Sequence[int]) -> SparseNetwork:
    """Embed ``net`` into a wider architecture by zero padding; s and function unchanged."""
    target = tuple(int(w) for w in target_widths)
    if len(target) != len(net.widths):
        raise NetworkFormatError("target width vector must have the same length (same depth)")
    if target[0] != net.widths[0] or target[-1] != net.widths[-1]:
        raise NetworkFormatError("enlarge must keep the input and output dimensions")
    if any(t < w for t, w in zip(target, net.widths)):
        raise NetworkFormatError(f"target widths {target} not >= current widths {net.widths}")
    if target == net.widths:
        return net
    layers = []
    for j, layer in enumerate(net.layers):
        shift = layer.shift
        if shift is not None and target[j + 1] > layer.rows:
            shift = np.concatenate([shift, np.zeros(target[j + 1] - layer.rows)])
        layers.append(
            SparseLayer(target[j + 1], target[j], layer.row_idx, layer.col_idx, layer.values, shift)
        )
    return SparseNetwork(target, tuple(layers), net.sup_bound)


def compose(outer: SparseNetwork, inner: SparseNetwork, shift: Sequence[float] | float = 0.0) -> SparseNetwork:
    """Network computing outer(sigma_shift(inner(x))).

    Depth is exactly L_inner + L_outer + 1; the inner output layer becomes a
    hidden layer carrying ``shift``.  The default zero shift leaves non-negative
    inner outputs unchanged through the junction activation.
    """
    if inner.output_dim != outer.input_dim:
        raise NetworkFormatError(
            f"inner output dim {inner.output_dim} != outer input dim {outer.input_dim}"
        )
    v = np.asarray(shift, dtype=np.float64)
    if v.ndim == 0:
        v = np.full(inner.output_dim, float(v))
    if v.shape != (inner.output_dim,):
        raise NetworkFormatError("junction shift length mismatches inner output dimension")
    if v.size and np.max(np.abs(v)) > 1.0:
        raise NetworkFormatError("junction shift outside [-1, 1]")
    inner_out = inner.layers[-1]
    junction = SparseLayer(
        inner_out.rows, inner_out.cols, inner_out.row_idx, inner_out.col_idx, inner_out.values, v
    )
    widths = inner.widths + outer.widths[1:]
    layers = inner.layers[:-1] + (junction,) + outer.layers
    return SparseNetwork(widths, layers, outer.sup_bound)


def sync_depth(net: SparseNetwork, extra_layers: int, where: str = "input") -> SparseNetwork:
    """Add ``extra_layers`` identity layers that leave the function unchanged.

    ``where='input'`` (default) prepends them before the first matrix; valid
    when the inputs are non-negative (the regression model has x in [0,1]^d).
    ``where='output'`` appends them behind the final matrix instead, which is
    the caller's assertion that the network output is non-negative.
    Either way s grows by exactly extra_layers * (width of the synced side).
    """
    q = int(extra_layers)
    if q < 0:
        raise NetworkFormatError("extra_layers must be non-negative")
    if q == 0:
        return net
    if where == "input":
        d = net.input_dim
        widths = (d,) * q + net.widths
        layers = tuple(_identity_layer(d, shift_zero=True) for _ in range(q)) + net.layers
    elif where == "output":
        d = net.output_dim
        old_out = net.layers[-1]
        first = SparseLayer(
            old_out.rows, old_out.cols, old_out.row_idx, old_out.col_idx, old_out.values, np.zeros(d)
        )
        mids = tuple(_identity_layer(d, shift_zero=True) for _ in range(q - 1))
        layers = net.layers[:-1] + (first,) + mids + (_identity_layer(d, shift_zero=False),)
        widths = net.widths[:-1] + (d,) * q + (d,)
    else:
        raise ValueError("where must be 'input' or 'output'")
    return SparseNetwork(widths, layers, net.sup_bound)


def parallelize(nets: Sequence[SparseNetwork]) -> SparseNetwork:
    """Stack networks sharing depth and input dimension; outputs are concatenated.

    The first matrices read the common input; deeper matrices are block
    diagonal, so sparsity adds exactly.
    """
    nets = list(nets)
    if not nets:
        raise NetworkFormatError("parallelize requires at least one network")
    if len(nets) == 1:
        return nets[0]
    depth = nets[0].depth
    p0 = nets[0].input_dim
    for net in nets[1:]:
        if net.depth != depth or net.input_dim != p0:
            raise NetworkFormatError("parallelize requires equal depth and input dimension")
    widths = [p0] + [sum(n.widths[j] for n in nets) for j in range(1, depth + 2)]
    layers = []
    for j in range(depth + 1):
        row_off = 0
        rows_parts, cols_parts, vals_parts, shift_parts = [], [], [], []
        col_off = 0
        for net in nets:
            layer = net.layers[j]
            rows_parts.append(layer.row_idx + row_off)
            if j == 0:
                cols_parts.append(layer.col_idx)
            else:
                cols_parts.append(layer.col_idx + col_off)
                col_off += layer.cols
            vals_parts.append(layer.values)
            if layer.shift is not None:
                shift_parts.append(layer.shift)
            row_off += layer.rows
        shift = np.concatenate(shift_parts) if shift_parts else None
        layers.append(
            SparseLayer(
                widths[j + 1],
                widths[j],
                np.concatenate(rows_parts),
                np.concatenate(cols_parts),
                np.concatenate(vals_parts),
                shift,
            )
        )
    sup = nets[0].sup_bound if all(n.sup_bound == nets[0].sup_bound for n in nets) else None
    return SparseNetwork(tuple(widths), tuple(layers), sup)


# ---------------------------------------------------------------------------
# Internal structural helpers (used by the explicit constructions)
# ---------------------------------------------------------------------------


def remap_inputs(net: SparseNetwork, new_input_dim: int, col_map: Sequence[int]) -> SparseNetwork:
    """Rewire the first matrix onto a new input index space.

    ``col_map[j]`` is the new input coordinate feeding old input j.  Several old
    inputs may map to the same new coordinate: their first-layer coefficients
    are summed, which is exactly the diagonal restriction used to square
    network inputs.  Exact zeros produced by merging are dropped.
    """
    col_map = np.asarray(col_map, dtype=np.int64)
    if col_map.shape != (net.input_dim,):
        raise NetworkFormatError("col_map length must equal the current input dimension")
    if col_map.size and (col_map.min() < 0 or col_map.max() >= new_input_dim):
        raise NetworkFormatError("col_map entry out of range for the new input dimension")
    first = net.layers[0]
    merged: dict[tuple[int, int], float] = {}
    for r, c, v in zip(first.row_idx, first.col_idx, first.values):
        key = (int(r), int(col_map[c]))
        merged[key] = merged.get(key, 0.0) + float(v)
    new_first = layer_from_triplets(
        first.rows, new_input_dim, [(r, c, v) for (r, c), v in merged.items()], first.shift
    )
    widths = (int(new_input_dim),) + net.widths[1:]
    return SparseNetwork(widths, (new_first,) + net.layers[1:], net.sup_bound)


def fuse(back: SparseNetwork, front: SparseNetwork) -> SparseNetwork:
    """Compose back(front(x)) by merging front's affine output into back's first matrix.

    No junction activation is inserted, so the depth is L_front + L_back.  The
    merged matrix is back.W_0 @ front.W_L and must stay within [-1, 1]; the
    constructions only fuse through identity or selection boundaries, where the
    product is an exact rewiring.
    """
    if front.output_dim != back.input_dim:
        raise NetworkFormatError(
            f"front output dim {front.output_dim} != back input dim {back.input_dim}"
        )
    prod = (back.layers[0].matrix() @ front.layers[-1].matrix()).tocoo()
    merged = layer_from_triplets(
        back.layers[0].rows, front.widths[-2], zip(prod.row, prod.col, prod.data), back.layers[0].shift
    )
    widths = front.widths[:-1] + back.widths[1:]
    layers = front.layers[:-1] + (merged,) + back.layers[1:]
    return SparseNetwork(widths, layers, back.sup_bound)


def sum_outputs(net: SparseNetwork) -> SparseNetwork:
    """Replace the output layer by the sum of all output coordinates.

    Valid only when the summed rows keep coefficients within [-1, 1]; the
    constructions use it on block-diagonal readouts where rows are disjoint.
    """
    out = net.layers[-1]
    merged: dict[int, float] = {}
    for c, v in zip(out.col_idx, out.values):
        merged[int(c)] = merged.get(int(c), 0.0) + float(v)
    new_out = layer_from_triplets(1, out.cols, [(0, c, v) for c, v in merged.items()])
    widths = net.widths[:-1] + (1,)
    return SparseNetwork(widths, net.layers[:-1] + (new_out,), net.sup_bound)


def scale_output(net: SparseNetwork, factor: float) -> SparseNetwork:
    """Multiply the computed function by ``factor`` with |factor| <= 1.

    Rescaling the output layer keeps all parameters in [-1, 1]; used for the
    sup-norm shrink f * (||f0||_inf / ||f||_inf ^ 1) when a finite output bound
    is wanted.
    """
    f = float(factor)
    if abs(f) > 1.0:
        raise NetworkFormatError("scale_output requires |factor| <= 1")
    out = net.layers[-1]
    if f == 0.0:
        new_out = layer_from_triplets(out.rows, out.cols, [])
    else:
        new_out = SparseLayer(out.rows, out.cols, out.row_idx, out.col_idx, out.values * f, None)
    return SparseNetwork(net.widths, net.layers[:-1] + (new_out,), net.sup_bound)
