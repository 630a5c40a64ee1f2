"""Closed-form rate and complexity calculators.

Everything here is a pure function of its arguments: effective smoothness
indices, the convergence rate phi_n, covering-entropy bounds for the sparse
network class, the oracle-inequality remainder tau, and the four architecture
conditions under which the main risk bound applies.  Asymptotic conditions are
operationalized with user-supplied constant bands (default [1/4, 4]); the
report always prints the computed quantity next to its band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "effective_smoothness",
    "rate_phi",
    "RateProfile",
    "rate_profile",
    "entropy_bound",
    "entropy_bound_refined",
    "tau_bound",
    "ConditionReport",
    "check_architecture_conditions",
]


def effective_smoothness(beta: Sequence[float]) -> list[float]:
    """beta*_i = beta_i * prod_{l > i} (beta_l ^ 1); the last entry equals beta_q."""
    betas = [float(b) for b in beta]
    if not betas:
        raise ValueError("smoothness sequence must be non-empty")
    if any(b <= 0 for b in betas):
        raise ValueError("smoothness indices must be positive")
    out = []
    for i in range(len(betas)):
        prod = 1.0
        for l in range(i + 1, len(betas)):
            prod *= min(betas[l], 1.0)
        out.append(betas[i] * prod)
    return out


def rate_phi(n: int, beta: Sequence[float], t: Sequence[int]) -> tuple[float, int]:
    """phi_n = max_i n^(-2 beta*_i / (2 beta*_i + t_i)) and the attaining level.

    Ties go to the smallest index.
    """
    if len(beta) != len(t):
        raise ValueError("beta and t must have equal length")
    if n < 1:
        raise ValueError("n must be >= 1")
    beta_star = effective_smoothness(beta)
    best, best_i = -math.inf, 0
    for i, (bs, ti) in enumerate(zip(beta_star, t)):
        val = float(n) ** (-2 * bs / (2 * bs + ti))
        if val > best + 1e-15 * max(best, 1.0):
            best, best_i = val, i
    return best, best_i


@dataclass(frozen=True)
class RateProfile:
    """Smoothness/arity ladder of a composite class and its rate."""

    t: tuple[int, ...]
    beta: tuple[float, ...]
    beta_star: tuple[float, ...]

    @property
    def q(self) -> int:
        return len(self.beta) - 1

    def phi(self, n: int) -> float:
        return rate_phi(n, self.beta, self.t)[0]

    def argmin_level(self, n: int) -> int:
        return rate_phi(n, self.beta, self.t)[1]

    def exponents(self) -> list[float]:
        """Per-level rate exponents 2 beta*_i / (2 beta*_i + t_i)."""
        return [2 * bs / (2 * bs + ti) for bs, ti in zip(self.beta_star, self.t)]


def rate_profile(beta: Sequence[float], t: Sequence[int]) -> RateProfile:
    if len(beta) != len(t):
        raise ValueError("beta and t must have equal length")
    return RateProfile(tuple(int(x) for x in t), tuple(float(b) for b in beta), tuple(effective_smoothness(beta)))


def entropy_bound(L: int, p: Sequence[int], s: int, delta: float) -> float:
    """(s+1) log(2 delta^-1 (L+1) V^2) with V = prod (p_l + 1); natural log."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if s < 0:
        raise ValueError("s must be non-negative")
    log_v = sum(math.log(pl + 1) for pl in p)
    return (s + 1) * (math.log(2.0) - math.log(delta) + math.log(L + 1) + 2 * log_v)


def entropy_bound_refined(L: int, p0: int, p_out: int, s: int, delta: float) -> float:
    """(s+1) log(2^(2L+5) delta^-1 (L+1) p0^2 p_out^2 s^(2L)); needs s >= 1."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if s < 1:
        raise ValueError("the refined bound degenerates for s = 0; use entropy_bound")
    inner = (
        (2 * L + 5) * math.log(2.0)
        - math.log(delta)
        + math.log(L + 1)
        + 2 * math.log(p0)
        + 2 * math.log(p_out)
        + 2 * L * math.log(s)
    )
    return (s + 1) * inner


def tau_bound(s: int, L: int, p0: int, p_out: int, n: int, F: float, C_eps: float) -> float:
    """C_eps F^2 (s+1) log(n (s+1)^L p0 p_out) / n; the constant is caller-supplied."""
    if min(s + 1, L + 1, p0, p_out, n) < 1 or F <= 0 or C_eps <= 0:
        raise ValueError("all tau_bound arguments must be positive")
    log_term = math.log(n) + L * math.log(s + 1) + math.log(p0) + math.log(p_out)
    return C_eps * F * F * (s + 1) * log_term / n


@dataclass(frozen=True)
class ConditionReport:
    """Per-condition outcome of the architecture check, with the computed thresholds."""

    passed: bool
    conditions: dict = field(default_factory=dict)

    def __str__(self) -> str:
        lines = [f"overall: {'PASS' if self.passed else 'FAIL'}"]
        for name, info in self.conditions.items():
            lines.append(f"  ({name}) {'PASS' if info['pass'] else 'FAIL'}: {info['detail']}")
        return "\n".join(lines)


def check_architecture_conditions(
    L: int,
    p: Sequence[int],
    s: int,
    F: float,
    profile: RateProfile,
    K: float,
    n: int,
    band: tuple[float, float] = (0.25, 4.0),
) -> ConditionReport:
    """Check the four architecture conditions for sample size n.

    (i)  F >= max(K, 1)                                   -- exact.
    (ii) sum_i log2(4 t_i v 4 beta_i) * log2(n) <= L      -- exact (gating);
         the asymptotic upper side L <~ n phi_n is reported against
         band[1] * n phi_n but does not gate (it hides a constant).
    (iii) n phi_n <= band[1] * min hidden width.
    (iv) band[0] * n phi_n log n <= s <= band[1] * n phi_n log n  (natural log).
    """
    lo, hi = band
    phi = profile.phi(n)
    nphi = n * phi
    conds: dict[str, dict] = {}

    i_ok = F >= max(K, 1.0)
    conds["i"] = {"pass": i_ok, "detail": f"F = {F} vs max(K, 1) = {max(K, 1.0)}"}

    lhs = sum(math.log2(4 * max(t, b)) for t, b in zip(profile.t, profile.beta)) * math.log2(n)
    ii_lower = lhs <= L
    ii_upper = L <= hi * nphi
    conds["ii"] = {
        "pass": ii_lower,
        "detail": (
            f"depth lower bound {lhs:.3f} <= L = {L}: {ii_lower}; "
            f"reported upper side L <= {hi} * n phi_n = {hi * nphi:.3f}: {ii_upper} (non-gating)"
        ),
        "upper_within_band": ii_upper,
    }

    hidden = list(p[1:-1])
    min_width = min(hidden) if hidden else 0
    iii_ok = nphi <= hi * min_width
    conds["iii"] = {
        "pass": iii_ok,
        "detail": f"n phi_n = {nphi:.3f} vs {hi} * min hidden width = {hi * min_width:.3f}",
    }

    target = nphi * math.log(n)
    iv_ok = lo * target <= s <= hi * target
    conds["iv"] = {
        "pass": iv_ok,
        "detail": f"s = {s} vs band [{lo * target:.3f}, {hi * target:.3f}] around n phi_n log n",
    }

    passed = i_ok and ii_lower and iii_ok and iv_ok
    return ConditionReport(passed, conds)
