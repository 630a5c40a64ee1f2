import numpy as np
import pytest

from relucert import (
    NetworkFormatError,
    SparseNetwork,
    compose,
    count_active,
    enlarge,
    evaluate,
    identity_network,
    layer_from_dense,
    parallelize,
    scale_output,
    sync_depth,
)
from relucert.calculus import remap_inputs, sum_outputs
from conftest import random_network


def nonneg_network(rng, depth=None, p0=None):
    """Random net with non-negative weights/shifts: outputs of every layer stay >= 0 on [0,1]^d."""
    L = int(rng.integers(0, 4)) if depth is None else depth
    widths = [p0 or int(rng.integers(1, 5))] + [int(rng.integers(1, 5)) for _ in range(L + 1)]
    layers = []
    for j in range(L + 1):
        W = rng.uniform(0, 1, size=(widths[j + 1], widths[j]))
        W[rng.random(W.shape) > 0.7] = 0.0
        layers.append(layer_from_dense(W, np.zeros(widths[j + 1]) if j < L else None))
    return SparseNetwork(tuple(widths), tuple(layers))


def test_enlarge_preserves_function_and_sparsity(rng):
    net = random_network(rng, depth=1)
    widths = list(net.widths)
    target = [widths[0]] + [w + 3 for w in widths[1:-1]] + [widths[-1]]
    big = enlarge(net, target)
    assert big.widths == tuple(target)
    assert count_active(big).active_count == count_active(net).active_count
    x = rng.uniform(0, 1, size=(100, net.input_dim))
    assert np.array_equal(evaluate(big, x), evaluate(net, x))


def test_enlarge_identity_and_errors(rng):
    net = random_network(rng, depth=1)
    assert enlarge(net, net.widths) is net
    smaller = [net.widths[0]] + [max(1, w - 1) for w in net.widths[1:-1]] + [net.widths[-1]]
    if tuple(smaller) != net.widths:
        with pytest.raises(NetworkFormatError):
            enlarge(net, smaller)
    with pytest.raises(NetworkFormatError):
        enlarge(net, list(net.widths) + [1])


def test_compose_identity_inner(rng):
    outer = nonneg_network(rng, p0=3)
    inner = identity_network(3)
    combo = compose(outer, inner, 0.0)
    assert combo.depth == outer.depth + inner.depth + 1
    x = rng.uniform(0, 1, size=(100, 3))
    assert np.max(np.abs(evaluate(combo, x) - evaluate(outer, x))) <= 1e-12


def test_compose_depth_bookkeeping(rng):
    f = random_network(rng, depth=2)
    g_widths = (f.output_dim, 3, 2)
    g = SparseNetwork(
        g_widths,
        (
            layer_from_dense(rng.uniform(-1, 1, (3, f.output_dim)), np.zeros(3)),
            layer_from_dense(rng.uniform(-1, 1, (2, 3))),
        ),
    )
    combo = compose(g, f, rng.uniform(-1, 1, f.output_dim))
    assert combo.depth == f.depth + g.depth + 1
    assert combo.widths == f.widths + g.widths[1:]


def test_compose_shift_and_dim_errors(rng):
    f = random_network(rng, depth=1)
    g = random_network(rng, depth=1)
    if g.input_dim != f.output_dim:
        with pytest.raises(NetworkFormatError):
            compose(g, f)
    g2 = nonneg_network(rng, p0=f.output_dim)
    with pytest.raises(NetworkFormatError):
        compose(g2, f, np.full(f.output_dim, 1.5))


def test_sync_depth_input_side(rng):
    net = nonneg_network(rng, p0=2)
    synced = sync_depth(net, 3)
    assert synced.depth == net.depth + 3
    assert count_active(synced).active_count == count_active(net).active_count + 3 * 2
    x = rng.uniform(0, 1, size=(100, 2))
    assert np.max(np.abs(evaluate(synced, x) - evaluate(net, x))) <= 1e-12
    assert sync_depth(net, 0) is net
    with pytest.raises(NetworkFormatError):
        sync_depth(net, -1)


def test_sync_depth_output_side(rng):
    net = nonneg_network(rng, p0=2)  # non-negative output by construction
    synced = sync_depth(net, 2, where="output")
    assert synced.depth == net.depth + 2
    assert count_active(synced).active_count == count_active(net).active_count + 2 * net.output_dim
    x = rng.uniform(0, 1, size=(50, 2))
    assert np.max(np.abs(evaluate(synced, x) - evaluate(net, x))) <= 1e-12


def test_parallelize_concatenates(rng):
    f = random_network(rng, depth=2)
    g_widths = (f.input_dim,) + tuple(int(rng.integers(1, 5)) for _ in range(3))
    layers = []
    for j in range(3):
        W = rng.uniform(-1, 1, (g_widths[j + 1], g_widths[j]))
        layers.append(layer_from_dense(W, np.zeros(g_widths[j + 1]) if j < 2 else None))
    g = SparseNetwork(g_widths, tuple(layers))
    both = parallelize([f, g])
    x = rng.uniform(0, 1, size=(60, f.input_dim))
    want = np.hstack([np.atleast_2d(evaluate(f, x)), np.atleast_2d(evaluate(g, x))])
    assert np.max(np.abs(evaluate(both, x) - want)) <= 1e-12
    assert count_active(both).active_count == count_active(f).active_count + count_active(g).active_count
    assert parallelize([f]) is f


def test_parallelize_mismatch(rng):
    f = random_network(rng, depth=1)
    g = random_network(rng, depth=2)
    with pytest.raises(NetworkFormatError):
        parallelize([f, g])


def test_compose_mult_over_pair_producer(rng):
    # composing the product net over a pair-producing net keeps outputs in [0, 1]
    from relucert import build_mult

    mult, _ = build_mult(5)
    pair = nonneg_network(rng, depth=1, p0=3)
    while pair.output_dim != 2:
        pair = nonneg_network(rng, depth=1, p0=3)
    combo = compose(mult, pair, 0.0)
    out = evaluate(combo, rng.random((200, 3)))
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_composition_associativity(rng):
    nets = [nonneg_network(rng, depth=1, p0=2)]
    for _ in range(2):
        nets.append(nonneg_network(rng, depth=1, p0=nets[-1].output_dim))
    f, g, h = nets
    left = compose(h, compose(g, f, 0.0), 0.0)
    right = compose(compose(h, g, 0.0), f, 0.0)
    x = rng.uniform(0, 1, size=(100, 2))
    assert np.max(np.abs(evaluate(left, x) - evaluate(right, x))) <= 1e-12


def test_remap_inputs_merges_coefficients(rng):
    net = nonneg_network(rng, p0=3)
    # duplicate input 0 into both slots 0 and 1 of a 2-d input space
    remapped = remap_inputs(net, 2, [0, 0, 1])
    x = rng.uniform(0, 1, size=(50, 2))
    lifted = np.column_stack([x[:, 0], x[:, 0], x[:, 1]])
    assert np.max(np.abs(evaluate(remapped, x) - evaluate(net, lifted))) <= 1e-12


def test_sum_outputs_and_scale_output(rng):
    net = random_network(rng, depth=1)
    total = sum_outputs(net)
    x = rng.uniform(0, 1, size=(40, net.input_dim))
    assert np.max(np.abs(evaluate(total, x)[:, 0] - evaluate(net, x).sum(axis=1))) <= 1e-12
    half = scale_output(net, 0.5)
    assert np.max(np.abs(evaluate(half, x) - 0.5 * evaluate(net, x))) <= 1e-12
    with pytest.raises(NetworkFormatError):
        scale_output(net, 1.5)


def test_randomized_transform_sweep(rng):
    """Randomized preservation + bookkeeping sweep across all four transforms."""
    for _ in range(150):
        kind = rng.integers(0, 4)
        if kind == 0:
            net = random_network(rng)
            target = [net.widths[0]] + [w + int(rng.integers(0, 3)) for w in net.widths[1:-1]] + [net.widths[-1]]
            out = enlarge(net, target)
            assert out.depth == net.depth
            x = rng.uniform(0, 1, size=(20, net.input_dim))
            assert np.max(np.abs(evaluate(out, x) - evaluate(net, x))) <= 1e-12
        elif kind == 1:
            net = nonneg_network(rng)
            q = int(rng.integers(0, 4))
            out = sync_depth(net, q)
            assert out.depth == net.depth + q
            assert count_active(out).active_count == count_active(net).active_count + q * net.input_dim
            x = rng.uniform(0, 1, size=(20, net.input_dim))
            assert np.max(np.abs(evaluate(out, x) - evaluate(net, x))) <= 1e-12
        elif kind == 2:
            p0 = int(rng.integers(1, 4))
            L = int(rng.integers(0, 3))
            members = [nonneg_network(rng, depth=L, p0=p0) for _ in range(int(rng.integers(2, 4)))]
            out = parallelize(members)
            assert out.widths[1:] == tuple(
                sum(m.widths[j] for m in members) for j in range(1, L + 2)
            )
            x = rng.uniform(0, 1, size=(20, p0))
            want = np.hstack([np.atleast_2d(evaluate(m, x)) for m in members])
            assert np.max(np.abs(evaluate(out, x) - want)) <= 1e-12
        else:
            f = nonneg_network(rng)
            g = nonneg_network(rng, p0=f.output_dim)
            out = compose(g, f, 0.0)
            assert out.depth == f.depth + g.depth + 1
            assert out.widths == f.widths + g.widths[1:]
            x = rng.uniform(0, 1, size=(20, f.input_dim))
            inner = np.maximum(np.atleast_2d(evaluate(f, x)), 0.0)
            assert np.max(np.abs(evaluate(out, x) - np.atleast_2d(evaluate(g, inner)))) <= 1e-12
