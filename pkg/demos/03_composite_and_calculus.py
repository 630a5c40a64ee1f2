"""Composite functions and the network-combination calculus.

Structured regression functions factor as g_q o ... o g_0 where each
coordinate depends on few variables.  The builder rescales every level onto
[0,1] cubes, approximates each coordinate function, clips intermediate
outputs into [0,1], runs coordinates of a level in parallel and composes
levels; the error certificate multiplies out through the composition
inequality err <= K_q prod (2K_l)^{beta_{l+1}} sum_i err_i^{prod (beta ^ 1)}.
"""

import numpy as np

from relucert import (
    ComponentSpec,
    CompositionSpec,
    HolderTarget,
    build_composite_net,
    count_active,
    evaluate,
)

print(__doc__)


def poly_target(coeffs, beta, K, name=""):
    base = np.asarray(coeffs, dtype=np.float64)

    def value(x):
        return np.polynomial.polynomial.polyval(np.asarray(x).reshape(-1), base)

    def partials(alpha):
        d = base.copy()
        for _ in range(alpha[0]):
            d = np.polynomial.polynomial.polyder(d)
        return lambda x: np.polynomial.polynomial.polyval(np.asarray(x).reshape(-1), d)

    return HolderTarget(1, beta, K, value, partials, name=name)


def sum_target(t, beta, K):
    def value(x):
        return np.atleast_2d(np.asarray(x, dtype=np.float64)).sum(axis=1)

    def partials(alpha):
        order = sum(alpha)
        return lambda x: np.full(np.atleast_2d(x).shape[0], 1.0 if order == 1 else 0.0)

    return HolderTarget(t, beta, K, value, partials, name="sum")


bump = poly_target([0.0, 0.25, -0.25], 2.0, 1.0, name="bump")  # x(1-x)/4, C^2 norm <= 1

print("=== additive model f0(x) = f1(x1) + f2(x2) ===")
spec = CompositionSpec(
    dims=(2, 2, 1),
    arities=(1, 2),
    smoothness=(2.0, 2.0),
    radii=(1.0, 4.0),
    components=(
        (ComponentSpec(bump, (0,)), ComponentSpec(bump, (1,))),
        (ComponentSpec(sum_target(2, 2.0, 4.0), (0, 1)),),
    ),
)
net, cert = build_composite_net(spec, m=10, N_per_level=[8, 126])
axis = np.linspace(0, 1, 101)
mesh = np.meshgrid(axis, axis, indexing="ij")
pts = np.stack([g.ravel() for g in mesh], axis=1)
err = np.max(np.abs(evaluate(net, pts)[:, 0] - spec.truth(pts)))
print(f"  depth {net.depth}, s = {count_active(net).active_count}")
print(f"  measured sup err {err:.3e} <= combined certificate {cert.claimed_sup_error:.3g}")
print(f"  per-level certified errors: {cert.extras['level_error_bounds']}")

print("\n=== sparse wiring: f0(x1,x2,x3) = g11(g01(x3), g02(x2)) ignores x1 exactly ===")
half = poly_target([0.0, 0.5], 2.0, 1.0, name="half")
spec3 = CompositionSpec(
    dims=(3, 2, 1),
    arities=(1, 2),
    smoothness=(2.0, 2.0),
    radii=(1.0, 4.0),
    components=(
        (ComponentSpec(bump, (2,)), ComponentSpec(half, (1,))),
        (ComponentSpec(sum_target(2, 2.0, 4.0), (0, 1)),),
    ),
)
net3, _ = build_composite_net(spec3, m=8, N_per_level=[8, 126])
rng = np.random.default_rng(0)
pts3 = rng.random((50, 3))
moved = pts3.copy()
moved[:, 0] = rng.random(50)
print("  max |f(x) - f(x with new x1)| =", np.max(np.abs(evaluate(net3, pts3) - evaluate(net3, moved))),
      "(no first-layer weight ever reads x1)")
