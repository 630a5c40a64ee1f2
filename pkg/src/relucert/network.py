"""Sparse feedforward ReLU networks with all parameters bounded by one.

A network with L hidden layers and width vector p = (p_0, ..., p_{L+1})
computes

    f(x) = W_L sigma_{v_L} W_{L-1} ... W_1 sigma_{v_1} W_0 x,

where sigma_v(y)_i = max(y_i - v_i, 0) acts coordinate-wise.  There is no
shift in front of the first activation's matrix (the input is used as-is)
and no shift after the final matrix.  Weight matrices are stored as sparse
coordinate triplets; every stored weight and every shift entry must lie in
[-1, 1], and exact zeros are never stored as triplets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseLayer",
    "SparseNetwork",
    "NetworkStats",
    "layer_from_dense",
    "layer_from_triplets",
    "evaluate",
    "evaluate_with_flags",
    "count_active",
    "remove_inactive",
    "clip_unit",
    "serialize",
    "deserialize",
    "NetworkFormatError",
]

SCHEMA_VERSION = 1


class NetworkFormatError(ValueError):
    """Raised when a network document violates the schema or the parameter constraints."""


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseLayer:
    """One weight matrix W (rows x cols) plus the shift vector of the activation it feeds.

    ``shift`` is None for the output layer, which is purely affine.
    Triplets are kept sorted by (row, col) with no duplicates and no zero values.
    """

    rows: int
    cols: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    shift: np.ndarray | None

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise NetworkFormatError(f"layer shape ({self.rows}, {self.cols}) must be positive")
        r = _as_readonly(np.asarray(self.row_idx, dtype=np.int64))
        c = _as_readonly(np.asarray(self.col_idx, dtype=np.int64))
        v = _as_readonly(np.asarray(self.values, dtype=np.float64))
        if not (r.shape == c.shape == v.shape) or r.ndim != 1:
            raise NetworkFormatError("triplet arrays must be 1-d and of equal length")
        if r.size:
            if r.min() < 0 or r.max() >= self.rows or c.min() < 0 or c.max() >= self.cols:
                raise NetworkFormatError("triplet index out of range for layer shape")
            keys = r * self.cols + c
            if np.any(np.diff(keys) <= 0):
                raise NetworkFormatError("triplets must be strictly sorted by (row, col); duplicates forbidden")
            if np.any(v == 0.0):
                raise NetworkFormatError("stored zero-valued weight forbidden (would corrupt the sparsity count)")
            if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > 1.0:
                raise NetworkFormatError("weight value outside [-1, 1]")
        object.__setattr__(self, "row_idx", r)
        object.__setattr__(self, "col_idx", c)
        object.__setattr__(self, "values", v)
        if self.shift is not None:
            s = _as_readonly(np.asarray(self.shift, dtype=np.float64))
            if s.shape != (self.rows,):
                raise NetworkFormatError(f"shift length {s.shape} does not match layer rows {self.rows}")
            if s.size and (not np.all(np.isfinite(s)) or np.max(np.abs(s)) > 1.0):
                raise NetworkFormatError("shift value outside [-1, 1]")
            object.__setattr__(self, "shift", s)

    @property
    def nnz_weights(self) -> int:
        return int(self.values.size)

    @property
    def nnz_shift(self) -> int:
        return 0 if self.shift is None else int(np.count_nonzero(self.shift))

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, (self.row_idx, self.col_idx)), shape=(self.rows, self.cols)
        )

    def dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self.row_idx, self.col_idx] = self.values
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseLayer):
            return NotImplemented
        if (self.rows, self.cols) != (other.rows, other.cols):
            return False
        if not (
            np.array_equal(self.row_idx, other.row_idx)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        ):
            return False
        if (self.shift is None) != (other.shift is None):
            return False
        return self.shift is None or np.array_equal(self.shift, other.shift)


def layer_from_triplets(
    rows: int,
    cols: int,
    triplets: Iterable[tuple[int, int, float]],
    shift: Sequence[float] | None = None,
) -> SparseLayer:
    """Build a layer from an unordered triplet iterable; zeros dropped, order canonicalized."""
    trips = [(int(r), int(c), float(v)) for r, c, v in triplets if float(v) != 0.0]
    trips.sort(key=lambda t: (t[0], t[1]))
    r = np.array([t[0] for t in trips], dtype=np.int64)
    c = np.array([t[1] for t in trips], dtype=np.int64)
    v = np.array([t[2] for t in trips], dtype=np.float64)
    s = None if shift is None else np.asarray(shift, dtype=np.float64)
    return SparseLayer(rows, cols, r, c, v, s)


def layer_from_dense(matrix: np.ndarray, shift: Sequence[float] | None = None) -> SparseLayer:
    """Build a layer from a dense matrix, storing only the non-zero entries."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2:
        raise NetworkFormatError("dense layer matrix must be 2-d")
    r, c = np.nonzero(a)
    return SparseLayer(a.shape[0], a.shape[1], r, c, a[r, c], None if shift is None else np.asarray(shift, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class SparseNetwork:
    """Immutable sparse ReLU network; see the module docstring for the computed function.

    widths  -- (p_0, ..., p_{L+1}); layers -- L+1 SparseLayer entries, the last without shift.
    sup_bound -- optional output clamp threshold F; exceeding it is flagged, never clamped.
    """

    widths: tuple[int, ...]
    layers: tuple[SparseLayer, ...]
    sup_bound: float | None = None

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(widths) < 2 or any(w <= 0 for w in widths):
            raise NetworkFormatError("widths must hold at least (p_0, p_out) positive entries")
        if len(layers) != len(widths) - 1:
            raise NetworkFormatError(
                f"expected {len(widths) - 1} layers for widths {widths}, got {len(layers)}"
            )
        for j, layer in enumerate(layers):
            if (layer.rows, layer.cols) != (widths[j + 1], widths[j]):
                raise NetworkFormatError(
                    f"layers[{j}] shape ({layer.rows}, {layer.cols}) inconsistent with widths"
                )
            is_output = j == len(layers) - 1
            if is_output and layer.shift is not None:
                raise NetworkFormatError("output layer must not carry a shift vector")
            if not is_output and layer.shift is None:
                raise NetworkFormatError(f"hidden layer {j} is missing its shift vector")
        if self.sup_bound is not None:
            f = float(self.sup_bound)
            if not (f > 0 and np.isfinite(f)):
                raise NetworkFormatError("sup_bound must be a positive finite real")
            object.__setattr__(self, "sup_bound", f)

    @property
    def depth(self) -> int:
        """Number of hidden layers L."""
        return len(self.widths) - 2

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def output_dim(self) -> int:
        return self.widths[-1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseNetwork):
            return NotImplemented
        return (
            self.widths == other.widths
            and self.sup_bound == other.sup_bound
            and all(a == b for a, b in zip(self.layers, other.layers))
        )

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)


@dataclass(frozen=True)
class NetworkStats:
    """Active parameter count s, fully-connected capacity T, and the per-layer split of s."""

    active_count: int
    capacity: int
    per_layer_active: tuple[int, ...]

    def __post_init__(self):
        if self.active_count != sum(self.per_layer_active):
            raise ValueError("active_count must equal the sum of per_layer_active")
        if self.active_count > self.capacity:
            raise ValueError("active_count cannot exceed capacity")


def evaluate(net: SparseNetwork, x) -> np.ndarray:
    """Evaluate the network at ``x`` (shape (p_0,) or (n, p_0)).

    Pure realization of the alternating matrix/shifted-ReLU form; no clamping
    is applied even when ``sup_bound`` is set.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != net.input_dim:
        raise NetworkFormatError(
            f"input of shape {np.shape(x)} does not match input dimension {net.input_dim}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains non-finite entries")
    mats = [layer.matrix() for layer in net.layers]
    last = len(net.layers) - 1
    # chunk the batch so the widest intermediate stays ~tens of MB
    chunk = max(256, 4_000_000 // max(net.widths))
    outs = []
    for start in range(0, arr.shape[0], chunk):
        z = arr[start : start + chunk].T  # (p_0, chunk)
        for j, layer in enumerate(net.layers):
            z = mats[j] @ z
            if j != last:
                z = np.maximum(z - layer.shift[:, None], 0.0)
        outs.append(z.T)
    out = outs[0] if len(outs) == 1 else np.vstack(outs)
    return out[0] if single else out


def evaluate_with_flags(net: SparseNetwork, x) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate and flag every output coordinate with |value| > sup_bound (all False if unset)."""
    y = evaluate(net, x)
    if net.sup_bound is None:
        return y, np.zeros(np.shape(y), dtype=bool)
    return y, np.abs(y) > net.sup_bound


def count_active(net: SparseNetwork) -> NetworkStats:
    """s = sum_j ||W_j||_0 + |v_j|_0 and the capacity T = sum_l (p_l + 1) p_{l+1} - p_out."""
    per_layer = tuple(layer.nnz_weights + layer.nnz_shift for layer in net.layers)
    p = net.widths
    capacity = sum((p[l] + 1) * p[l + 1] for l in range(len(p) - 1)) - p[-1]
    return NetworkStats(sum(per_layer), capacity, per_layer)


def remove_inactive(net: SparseNetwork) -> SparseNetwork:
    """Iteratively delete hidden units whose outgoing column is entirely zero.

    Deleting such a unit removes its column in the following matrix, its row in
    the preceding matrix and its shift entry; the computed function is unchanged
    (the surviving arithmetic is bit-identical).
    """
    widths = list(net.widths)
    layers = list(net.layers)
    changed = True
    while changed:
        changed = False
        for i in range(1, len(widths) - 1):  # hidden layer index; feeds layers[i]
            out_layer = layers[i]
            used = np.zeros(widths[i], dtype=bool)
            used[out_layer.col_idx] = True
            if used.all():
                continue
            if not used.any():
                # keep one dead unit; widths must stay positive
                used[0] = True
                if used.all():
                    continue
            keep = np.nonzero(used)[0]
            remap = -np.ones(widths[i], dtype=np.int64)
            remap[keep] = np.arange(keep.size)
            in_layer = layers[i - 1]
            sel = used[in_layer.row_idx]
            layers[i - 1] = SparseLayer(
                keep.size,
                widths[i - 1],
                remap[in_layer.row_idx[sel]],
                in_layer.col_idx[sel],
                in_layer.values[sel],
                in_layer.shift[keep],
            )
            layers[i] = SparseLayer(
                widths[i + 1],
                keep.size,
                out_layer.row_idx,
                remap[out_layer.col_idx],
                out_layer.values,
                out_layer.shift,
            )
            widths[i] = int(keep.size)
            changed = True
    return SparseNetwork(tuple(widths), tuple(layers), net.sup_bound)


def clip_unit(net: SparseNetwork) -> SparseNetwork:
    """Append two hidden layers computing x -> sigma(1 - sigma(1 - x)) = (x v 0) ^ 1.

    Only defined for scalar-output networks; adds exactly 4 active parameters.
    """
    if net.output_dim != 1:
        raise NetworkFormatError("clip_unit supports only single-output networks")
    old_out = net.layers[-1]
    neg_out = SparseLayer(
        old_out.rows,
        old_out.cols,
        old_out.row_idx,
        old_out.col_idx,
        -old_out.values,
        np.array([-1.0]),
    )
    mid = layer_from_triplets(1, 1, [(0, 0, -1.0)], shift=[-1.0])
    out = layer_from_triplets(1, 1, [(0, 0, 1.0)])
    widths = net.widths[:-1] + (1, 1, 1)
    return SparseNetwork(widths, net.layers[:-1] + (neg_out, mid, out), net.sup_bound)


# ---------------------------------------------------------------------------
# JSON document round trip
# ---------------------------------------------------------------------------


def _net_to_doc(net: SparseNetwork) -> dict:
    layers = []
    for layer in net.layers:
        layers.append(
            {
                "rows": layer.rows,
                "cols": layer.cols,
                "triplets": [
                    [int(r), int(c), float(v)]
                    for r, c, v in zip(layer.row_idx, layer.col_idx, layer.values)
                ],
                "shift": [] if layer.shift is None else [float(s) for s in layer.shift],
            }
        )
    doc = {
        "version": SCHEMA_VERSION,
        "depth": net.depth,
        "widths": list(net.widths),
        "layers": layers,
    }
    if net.sup_bound is not None:
        doc["sup_bound"] = net.sup_bound
    return doc


def serialize(net: SparseNetwork) -> bytes:
    """Canonical JSON encoding; deterministic byte-for-byte for equal networks."""
    return json.dumps(_net_to_doc(net), sort_keys=True, separators=(",", ":")).encode("ascii")


def _require(cond: bool, where: str, msg: str):
    if not cond:
        raise NetworkFormatError(f"{where}: {msg}")


def deserialize(data: bytes | str) -> SparseNetwork:
    """Parse a network document, naming the offending field on any violation."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"document: not valid JSON ({exc})") from exc
    _require(isinstance(doc, dict), "document", "top level must be an object")
    _require(doc.get("version") == SCHEMA_VERSION, "version", f"unsupported schema version {doc.get('version')!r}")
    widths = doc.get("widths")
    _require(
        isinstance(widths, list) and len(widths) >= 2 and all(isinstance(w, int) and w > 0 for w in widths),
        "widths",
        "must be a list of at least two positive integers",
    )
    depth = doc.get("depth")
    _require(depth == len(widths) - 2, "depth", f"depth {depth!r} inconsistent with widths of length {len(widths)}")
    raw_layers = doc.get("layers")
    _require(isinstance(raw_layers, list) and len(raw_layers) == len(widths) - 1, "layers", "wrong number of layers")
    layers = []
    for j, raw in enumerate(raw_layers):
        where = f"layers[{j}]"
        _require(isinstance(raw, dict), where, "must be an object")
        rows, cols = raw.get("rows"), raw.get("cols")
        _require(rows == widths[j + 1] and cols == widths[j], where, f"shape ({rows}, {cols}) mismatches widths")
        trips = raw.get("triplets")
        _require(isinstance(trips, list), f"{where}.triplets", "must be a list")
        for k, t in enumerate(trips):
            _require(
                isinstance(t, list) and len(t) == 3 and isinstance(t[0], int) and isinstance(t[1], int),
                f"{where}.triplets[{k}]",
                "must be [row, col, value]",
            )
            _require(0 <= t[0] < rows and 0 <= t[1] < cols, f"{where}.triplets[{k}]", "index out of range")
            _require(
                isinstance(t[2], (int, float)) and abs(t[2]) <= 1.0 and t[2] != 0,
                f"{where}.triplets[{k}]",
                f"weight value {t[2]!r} outside [-1, 1] or zero",
            )
        shift = raw.get("shift")
        _require(isinstance(shift, list), f"{where}.shift", "must be a list")
        is_output = j == len(raw_layers) - 1
        if is_output:
            _require(shift == [], f"{where}.shift", "output layer shift must be empty")
        else:
            _require(len(shift) == rows, f"{where}.shift", f"length {len(shift)} != rows {rows}")
            for k, s in enumerate(shift):
                _require(
                    isinstance(s, (int, float)) and abs(s) <= 1.0,
                    f"{where}.shift[{k}]",
                    f"shift value {s!r} outside [-1, 1]",
                )
        try:
            layers.append(layer_from_triplets(rows, cols, trips, None if is_output else shift))
        except NetworkFormatError as exc:
            raise NetworkFormatError(f"{where}: {exc}") from exc
    sup = doc.get("sup_bound")
    if sup is not None:
        _require(isinstance(sup, (int, float)) and sup > 0, "sup_bound", "must be a positive real")
    try:
        return SparseNetwork(tuple(widths), tuple(layers), sup)
    except NetworkFormatError as exc:
        raise NetworkFormatError(f"document: {exc}") from exc
