"""Rate calculators: effective smoothness, phi_n, entropy bounds, conditions.

A composite class has a ladder of smoothness indices; what matters for the
convergence rate at level i is the effective index beta*_i = beta_i times the
product of min(beta_l, 1) over the deeper levels, through the rate
phi_n = max_i n^(-2 beta*_i / (2 beta*_i + t_i)).  Alongside the rate, the
covering entropy of the sparse class and the oracle remainder tau tell you
what the estimation error costs, and the architecture checker tells you
whether a concrete (L, p, s, F) satisfies the four conditions under which
the risk bound applies at a given sample size.
"""

import math

from relucert import (
    check_architecture_conditions,
    entropy_bound,
    entropy_bound_refined,
    rate_profile,
    tau_bound,
)

print(__doc__)

print("=== additive model in d = 4, beta = 2 ===")
beta, d = 2.0, 4
profile = rate_profile([beta, max(beta, 2.0) * d], [1, d])
print("  beta       :", profile.beta)
print("  beta*      :", profile.beta_star)
print("  exponents  :", [round(e, 4) for e in profile.exponents()])
print("  the univariate level dominates: phi_n = n^(-2b/(2b+1)) = n^-0.8")
for n in (256, 1024, 4096, 16384):
    print(f"  n={n:6d}: phi_n = {profile.phi(n):.5f}, n phi_n = {n * profile.phi(n):8.2f}")

print("\n=== a composition where low smoothness deep in the chain hurts ===")
chain = rate_profile([2.0, 0.5], [1, 1])
print("  beta = (2, 1/2) -> beta* =", chain.beta_star, "(the outer 1/2 halves the inner index)")

print("\n=== covering entropy and the oracle remainder ===")
L, p, s = 6, (4, 32, 32, 32, 32, 32, 32, 1), 120
print(f"  log N(1/n) plain   <= {entropy_bound(L, p, s, 1e-3):10.1f}")
print(f"  log N(1/n) refined <= {entropy_bound_refined(L, p[0], p[-1], s, 1e-3):10.1f} (width-free)")
print(f"  tau(n=4096, F=2)    = {tau_bound(s, L, p[0], p[-1], 4096, 2.0, 1.0):10.4f}")

print("\n=== checking an architecture recipe at n = 4096 ===")
n = 4096
nphi = n * profile.phi(n)
L_rec = math.ceil(sum(math.log2(4 * max(t, b)) for t, b in zip(profile.t, profile.beta)) * math.log2(n))
s_rec = math.ceil(nphi * math.log(n))
width = max(8, math.ceil(nphi))
report = check_architecture_conditions(L_rec, (d, width, width, 1), s_rec, F=8.0, profile=profile, K=8.0, n=n)
print(report)
