import numpy as np
import pytest

from relucert import (
    RefusalError,
    build_holder_net,
    check_certificate,
    count_active,
    evaluate,
    holder_depth,
    holder_error_bound,
    largest_grid_M,
    named_target,
)
from relucert.certificates import dyadic_grid


def test_largest_grid_M():
    assert largest_grid_M(8, 1) == 7
    assert largest_grid_M(16, 2) == 3
    assert largest_grid_M(9, 2) == 2
    assert largest_grid_M(1000, 3) == 9


def test_structural_depth_formula():
    cases = {(1, 1.0, 6): 19, (2, 2.0, 8): 34, (1, 2.5, 8): 47}
    for (r, beta, m), want in cases.items():
        assert holder_depth(r, beta, m) == want
    # and the built networks match the formula exactly
    target = named_target("zero", 1, 1.0, 1.0)
    net, cert = build_holder_net(target, 6, 8)
    assert net.depth == 19 == cert.claimed_depth

    target = named_target("zero", 2, 2.0, 1.0)
    net, cert = build_holder_net(target, 8, 16)
    assert net.depth == 34 == cert.claimed_depth

    target = named_target("zero", 1, 2.5, 1.0)
    net, cert = build_holder_net(target, 8, 8)
    assert net.depth == 47 == cert.claimed_depth


def test_precondition_refusal():
    target = named_target("x_times_one_minus_x", 1, 2.0, 1.0)
    with pytest.raises(RefusalError, match=r"\(beta\+1\)\^r v \(K\+1\)e\^r"):
        build_holder_net(target, 10, 5)  # (K+1)e = 5.44 > 5


def test_x_one_minus_x_certified_error():
    target = named_target("x_times_one_minus_x", 1, 2.0, 1.0)
    x = dyadic_grid(12)[:, None]
    truth = target.value(x)
    for N in (8, 16, 32):
        net, cert = build_holder_net(target, 10, N)
        got = evaluate(net, x)[:, 0]
        measured = np.max(np.abs(got - truth))
        assert measured <= cert.claimed_sup_error
        assert cert.claimed_sup_error == holder_error_bound(1, 2.0, 1.0, 10, N)
        assert count_active(net).active_count <= cert.claimed_sparsity_bound
        assert max(net.widths[1:-1]) <= cert.claimed_width_bound
    # the N = 32 net should genuinely track the parabola, not just satisfy the slack bound
    assert measured <= 0.02


def test_net_tracks_local_taylor_reference():
    # against the non-network blended-Taylor oracle the error is pure network
    # error: (2K+1)(1+r^2+beta^2) 6^r N 2^-m, without the K M^-beta Taylor term
    from relucert import local_taylor_ref

    target = named_target("x_times_one_minus_x", 1, 2.0, 1.0)
    m, N = 10, 16
    net, cert = build_holder_net(target, m, N)
    M = cert.extras["M"]
    x = dyadic_grid(11)[:, None]
    ref = local_taylor_ref(target, M, x)
    got = evaluate(net, x)[:, 0]
    net_term = (2 * 1 + 1) * (1 + 1 + 4) * 6 * N * 2.0**-m
    assert np.max(np.abs(got - ref)) <= net_term
    # and the realized network error is far smaller than the certified slack
    assert np.max(np.abs(got - ref)) <= 0.01


def test_zero_function_stays_near_zero():
    target = named_target("zero", 1, 2.0, 1.0)
    net, cert = build_holder_net(target, 8, 8)
    x = dyadic_grid(10)[:, None]
    out = evaluate(net, x)[:, 0]
    assert np.max(np.abs(out)) <= cert.claimed_sup_error
    assert np.max(np.abs(out)) <= 0.05  # scaled residue B M^r (Q2 - c) with Q2 near c


def test_bivariate_target_certificate():
    target = named_target("prod", 2, 2.0, 4.0)
    net, cert = build_holder_net(target, 8, 45)
    axis = dyadic_grid(7)
    pts = np.stack([g.ravel() for g in np.meshgrid(axis, axis, indexing="ij")], axis=1)
    report = check_certificate(net, cert, reference=target.value, grid=pts)
    assert report.ok, report.failed_claims()
    # the bound has huge constants; the realized approximation is genuinely tight
    got = evaluate(net, pts)[:, 0]
    assert np.max(np.abs(got - target.value(pts))) <= 0.05


def test_trivariate_fractional_smoothness(rng):
    # r = 3 with beta = 3.5 > r exercises the deepest monomial/hat sync path
    from relucert import HolderTarget

    def value(x):
        x = np.atleast_2d(x)
        return (x[:, 0] + x[:, 1] + x[:, 2]) / 6.0

    def partials(alpha):
        order = sum(alpha)
        return lambda x: np.full(np.atleast_2d(x).shape[0], 1.0 / 6.0 if order == 1 else 0.0)

    target = HolderTarget(3, 3.5, 1.0, value, partials, name="mean3")
    N = 110  # >= (beta+1)^r v (K+1)e^r = 4.5^3 = 91.125 v 40.2
    net, cert = build_holder_net(target, 6, N)
    assert net.depth == cert.claimed_depth == 8 + 11 * (1 + 2)
    pts = rng.random((2000, 3))
    err = np.max(np.abs(evaluate(net, pts)[:, 0] - value(pts)))
    assert err <= cert.claimed_sup_error
    assert err <= 0.2
    assert max(net.widths[1:-1]) <= cert.claimed_width_bound
    assert count_active(net).active_count <= cert.claimed_sparsity_bound


def test_finite_difference_provenance_recorded():
    from relucert import HolderTarget

    target = HolderTarget(
        1, 2.0, 1.0, value=lambda x: np.asarray(x).reshape(-1) * (1 - np.asarray(x).reshape(-1))
    )
    net, cert = build_holder_net(target, 6, 8)
    assert cert.derivative_provenance.startswith("finite-difference")


def test_sup_bound_attachment():
    target = named_target("x_times_one_minus_x", 1, 2.0, 1.0)
    net, _ = build_holder_net(target, 6, 8, sup_bound=1.0)
    assert net.sup_bound == 1.0
