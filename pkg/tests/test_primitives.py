import itertools

import numpy as np
import pytest

from relucert import (
    RefusalError,
    build_hat,
    build_mon,
    build_mult,
    build_mult_r,
    check_certificate,
    count_active,
    evaluate,
    hat_products_ref,
    multi_indices,
    r_wave_ref,
    tri_wave_ref,
)


def dyadic(rng, n, bits=16):
    """Random dyadic rationals in [0,1]; float64 evaluates the dyadic nets exactly there."""
    return rng.integers(0, 2**bits + 1, size=n).astype(np.float64) / 2**bits


# ---------------------------------------------------------------------------
# scalar triangle-wave oracles
# ---------------------------------------------------------------------------


def test_r_wave_dyadic_pattern():
    for k in (1, 2, 3):
        for l in range(2**k + 1):
            want = 2.0 ** (-2 * k) if l % 2 == 1 else 0.0
            assert r_wave_ref(k, l / 2**k) == want


def test_r_wave_single_values():
    assert r_wave_ref(1, 0.5) == 0.25
    assert tri_wave_ref(1, 0.5) == 0.25


def test_r_wave_partial_sums_interpolate():
    m = 4
    for l in range(2**m + 1):
        x = l / 2**m
        total = sum(r_wave_ref(k, x) for k in range(1, m + 1))
        assert abs(total - x * (1 - x)) <= 1e-15


def test_square_approx_bound():
    # |x(1-x) - sum_{k<=m} R^k(x)| <= 2^-m on a fine grid
    x = np.linspace(0, 1, 2001)
    for m in (1, 3, 6, 9):
        total = sum(r_wave_ref(k, x) for k in range(1, m + 1))
        assert np.max(np.abs(x * (1 - x) - total)) <= 2.0**-m + 1e-15


# ---------------------------------------------------------------------------
# Mult_m
# ---------------------------------------------------------------------------


def mult_grid(step_bits=8):
    axis = np.arange(2**step_bits + 1) / 2**step_bits
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def test_mult_bound_and_structure():
    pts = mult_grid()
    target = pts[:, 0] * pts[:, 1]
    for m in (2, 5, 8):
        net, cert = build_mult(m)
        assert net.depth == m + 4 == cert.claimed_depth
        assert max(net.widths[1:-1]) <= 6
        out = evaluate(net, pts)[:, 0]
        assert out.min() >= 0.0 and out.max() <= 1.0
        assert np.max(np.abs(out - target)) <= 2.0**-m


def test_mult_zero_identities_exact(rng):
    net, _ = build_mult(6)
    vals = dyadic(rng, 50)
    zero = np.zeros(50)
    assert np.all(evaluate(net, np.column_stack([zero, vals]))[:, 0] == 0.0)
    assert np.all(evaluate(net, np.column_stack([vals, zero]))[:, 0] == 0.0)


def test_mult_corner():
    for m in (3, 7):
        net, _ = build_mult(m)
        assert abs(evaluate(net, np.array([1.0, 1.0]))[0] - 1.0) <= 2.0**-m


def test_mult_monotone_in_m():
    pts = mult_grid(7)
    target = pts[:, 0] * pts[:, 1]
    errs = []
    for m in range(2, 9):
        net, _ = build_mult(m)
        errs.append(np.max(np.abs(evaluate(net, pts)[:, 0] - target)))
    for m, err in zip(range(2, 9), errs):
        assert err <= 2.0**-m


def test_mult_matches_scalar_wave_pipeline(rng):
    # the network must realize clip(sum R^k((x-y+1)/2) - sum R^k((x+y)/2) + (x+y)/2 - 1/4)
    for m in (3, 6, 9):
        net, _ = build_mult(m)
        pts = np.column_stack([dyadic(rng, 400), dyadic(rng, 400)])
        x, y = pts[:, 0], pts[:, 1]
        u1, u2 = (x - y + 1) / 2, (x + y) / 2
        total = np.zeros_like(x)
        for k in range(1, m + 2):
            total += r_wave_ref(k, u1) - r_wave_ref(k, u2)
        want = np.clip(total + (x + y) / 2 - 0.25, 0.0, 1.0)
        assert np.max(np.abs(evaluate(net, pts)[:, 0] - want)) <= 1e-12


def test_mult_certificate_checks():
    net, cert = build_mult(5)
    report = check_certificate(net, cert, reference=lambda p: p[:, 0] * p[:, 1])
    assert report.ok, report.failed_claims()
    assert report.actual_sparsity <= cert.claimed_sparsity_bound


def test_mult_refuses_bad_m():
    with pytest.raises(RefusalError):
        build_mult(0)


# ---------------------------------------------------------------------------
# Mult_m^r
# ---------------------------------------------------------------------------


def test_mult_r_identity_for_r1(rng):
    net, cert = build_mult_r(8, 1)
    assert net.depth == 0 == cert.claimed_depth
    x = rng.uniform(0, 1, size=(50, 1))
    assert np.max(np.abs(evaluate(net, x) - x)) <= 1e-12


def test_mult_r_bound_r3():
    net, cert = build_mult_r(8, 3)
    assert net.depth == (8 + 5) * 2 == cert.claimed_depth
    axis = np.linspace(0, 1, 50)
    pts = np.stack([g.ravel() for g in np.meshgrid(axis, axis, axis, indexing="ij")], axis=1)
    out = evaluate(net, pts)[:, 0]
    assert np.max(np.abs(out - pts.prod(axis=1))) <= 9 * 2.0**-8
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_mult_r_zero_propagation_exact(rng):
    net, _ = build_mult_r(6, 3)
    for axis in range(3):
        pts = np.column_stack([dyadic(rng, 40) for _ in range(3)])
        pts[:, axis] = 0.0
        assert np.all(evaluate(net, pts)[:, 0] == 0.0)


def test_mult_r_structure_and_sparsity():
    for r in (2, 4, 5):
        net, cert = build_mult_r(4, r)
        assert net.depth == cert.claimed_depth
        assert max(net.widths[1:-1]) <= cert.claimed_width_bound
        assert count_active(net).active_count <= cert.claimed_sparsity_bound


# ---------------------------------------------------------------------------
# Mon_{m,gamma}^r
# ---------------------------------------------------------------------------


def test_monomial_count_brute_force():
    # enumerate alpha with |alpha| < gamma directly
    want = {(2, 2.5): 6, (2, 1.5): 3, (1, 3.0): 3, (3, 2.0): 4}
    for (r, gamma), count in want.items():
        brute = [a for a in itertools.product(range(4), repeat=r) if sum(a) < gamma]
        assert len(brute) == count == len(multi_indices(r, gamma))


def test_mon_values_and_structure(rng):
    m = 8
    for gamma in (1.5, 2.5):
        net, cert = build_mon(m, gamma, 2)
        assert net.depth == cert.claimed_depth == 1 + (m + 5) * (1 if gamma <= 2 else 2)
        pts = rng.uniform(0, 1, size=(400, 2))
        out = evaluate(net, pts)
        alphas = multi_indices(2, gamma)
        assert out.shape == (400, len(alphas))
        for idx, alpha in enumerate(alphas):
            want = pts[:, 0] ** alpha[0] * pts[:, 1] ** alpha[1]
            assert np.max(np.abs(out[:, idx] - want)) <= gamma * gamma * 2.0**-m
        assert out.min() >= 0.0 and out.max() <= 1.0 + 1e-12


def test_mon_gamma_below_one_exact(rng):
    net, cert = build_mon(5, 0.8, 3)
    assert net.depth == 1
    pts = rng.uniform(0, 1, size=(50, 3))
    out = evaluate(net, pts)
    assert out.shape == (50, 1)
    assert np.all(out == 1.0)


def test_mon_zero_inputs_vanish(rng):
    net, _ = build_mon(6, 2.5, 2)
    alphas = multi_indices(2, 2.5)
    pts = np.zeros((20, 2))
    out = evaluate(net, pts)
    for idx, alpha in enumerate(alphas):
        if sum(alpha) > 0:
            assert np.all(out[:, idx] == 0.0)
        else:
            assert np.all(out[:, idx] == 1.0)


def test_mon_certificate(rng):
    net, cert = build_mon(6, 2.5, 2)
    alphas = multi_indices(2, 2.5)

    def reference(x):
        cols = [np.prod([x[:, i] ** a for i, a in enumerate(alpha)], axis=0) for alpha in alphas]
        return np.stack(cols, axis=1)

    report = check_certificate(net, cert, reference)
    assert report.ok, report.failed_claims()


# ---------------------------------------------------------------------------
# Hat^r
# ---------------------------------------------------------------------------


def test_hat_r1_exact_two_layer():
    net, cert = build_hat(4, 8, 1)
    assert net.depth == 2 == cert.claimed_depth
    out = evaluate(net, np.array([0.5]))
    # coordinate for x_l = 1/2 (index 2) at x = 1/2: (1/M - 0)_+ = 1/4
    assert abs(out[2] - 0.25) <= 1e-12
    x = np.linspace(0, 1, 257)[:, None]
    assert np.max(np.abs(evaluate(net, x) - hat_products_ref(4, 1, x))) <= 1e-12


def test_hat_r2_bound():
    M, m, r = 2, 8, 2
    net, cert = build_hat(M, m, r)
    assert net.depth == 2 + (m + 5) * 1 == cert.claimed_depth
    axis = np.linspace(0, 1, 41)
    pts = np.stack([g.ravel() for g in np.meshgrid(axis, axis, indexing="ij")], axis=1)
    out = evaluate(net, pts)
    ref = hat_products_ref(M, r, pts)
    assert np.max(np.abs(out - ref)) <= r * r * 2.0**-m
    stats = count_active(net)
    assert stats.active_count <= 49 * r * r * (M + 1) ** r * (1 + (m + 5) * 1)


def test_hat_support_containment_exact(rng):
    M, r = 2, 2
    net, _ = build_hat(M, 6, r)
    grid = np.array(list(itertools.product(range(M + 1), repeat=r))) / M
    pts = np.column_stack([dyadic(rng, 300, bits=10) for _ in range(r)])
    out = evaluate(net, pts)
    for l_idx in range(grid.shape[0]):
        outside = np.max(np.abs(pts - grid[l_idx]), axis=1) >= 1.0 / M
        assert np.all(out[outside, l_idx] == 0.0)


def test_hat_guard():
    with pytest.raises(RefusalError, match="10"):
        build_hat(1000, 4, 3)


def test_mult_zero_identities_hold_on_arbitrary_floats(rng):
    # the exactness contract is for dyadic inputs; the mirrored branch structure
    # makes it hold bitwise even off the dyadic lattice for these seeds
    net, _ = build_mult(10)
    y = rng.random(5000)
    assert np.max(np.abs(evaluate(net, np.column_stack([np.zeros_like(y), y])))) == 0.0
    assert np.max(np.abs(evaluate(net, np.column_stack([y, np.zeros_like(y)])))) == 0.0


def test_mon_integer_gamma_four(rng):
    # gamma = 4: degrees up to 3 appear; ceil(log2 3) = ceil(log2 4) = 2 stresses the sync margin
    net, cert = build_mon(5, 4.0, 2)
    assert net.depth == cert.claimed_depth == 1 + 10 * 2
    alphas = multi_indices(2, 4.0)
    assert len(alphas) == 10
    pts = rng.random((500, 2))
    out = evaluate(net, pts)
    for idx, alpha in enumerate(alphas):
        want = pts[:, 0] ** alpha[0] * pts[:, 1] ** alpha[1]
        assert np.max(np.abs(out[:, idx] - want)) <= 16.0 * 2.0**-5


def test_standard_grid_certificate_soundness():
    """Measured sup error on the module's own standard grid <= every claimed bound."""
    from relucert import check_certificate
    from relucert.targets import resolve_reference

    built = [build_mult(6), build_mult_r(6, 3), build_mon(6, 2.5, 2), build_hat(2, 6, 2)]
    for net, cert in built:
        report = check_certificate(net, cert, resolve_reference(cert.target))
        assert report.ok, (cert.bound_formula_id, report.failed_claims())
