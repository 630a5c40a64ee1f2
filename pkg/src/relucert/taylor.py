"""Holder targets and local Taylor approximation (the non-network references).

``taylor_poly`` expands the Taylor polynomial of order < beta around a point
into raw monomial coefficients c_gamma and validates the bounds
|c_gamma| <= K / gamma! and sum |c_gamma| <= K e^r implied by a correctly
declared Holder radius.  ``local_taylor_ref`` evaluates the partition-of-unity
blend of the local polynomials on the grid {l/M}; its error is at most
K M^-beta for genuine members of the declared ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .primitives import multi_indices

__all__ = [
    "HolderTarget",
    "DerivativeError",
    "taylor_poly",
    "eval_monomial_poly",
    "local_taylor_ref",
    "partition_of_unity",
]

FD_STEP = 1e-5


class DerivativeError(RuntimeError):
    """A derivative oracle failed; the message carries the multi-index."""


@dataclass(frozen=True)
class HolderTarget:
    """A function on [0,1]^dim declared to lie in the beta-Holder ball of radius K.

    ``value`` maps an (n, dim) batch to n values.  ``partials``, when given,
    maps a multi-index tuple to the exact partial-derivative callable (same
    batch convention); orders |alpha| < beta are required.  Without it, central
    finite differences are used and the degraded provenance is recorded on any
    certificate built from this target.
    """

    dim: int
    beta: float
    radius: float
    value: Callable[[np.ndarray], np.ndarray]
    partials: Callable[[tuple[int, ...]], Callable[[np.ndarray], np.ndarray]] | None = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1 or self.beta <= 0 or self.radius <= 0:
            raise ValueError("HolderTarget requires dim >= 1, beta > 0, radius > 0")

    @property
    def derivative_provenance(self) -> str:
        return "exact" if self.partials is not None else "finite-difference(step=1e-5)"

    def partial(self, alpha: tuple[int, ...]) -> Callable[[np.ndarray], np.ndarray]:
        if sum(alpha) == 0:
            return self.value
        if self.partials is not None:
            try:
                fn = self.partials(alpha)
            except Exception as exc:
                raise DerivativeError(f"derivative oracle failed at alpha={alpha}: {exc}") from exc
            if fn is None:
                raise DerivativeError(f"derivative oracle returned nothing for alpha={alpha}")
            return fn
        return _fd_partial(self.value, alpha)


def _fd_partial(f: Callable, alpha: tuple[int, ...], h: float = FD_STEP) -> Callable:
    """Nested central finite differences for the mixed partial named by alpha."""

    def deriv(x: np.ndarray, remaining=tuple(alpha)) -> np.ndarray:
        for axis, order in enumerate(remaining):
            if order > 0:
                rest = remaining[:axis] + (order - 1,) + remaining[axis + 1 :]
                up, down = np.array(x, dtype=np.float64), np.array(x, dtype=np.float64)
                up[..., axis] += h
                down[..., axis] -= h
                return (deriv(up, rest) - deriv(down, rest)) / (2 * h)
        return np.asarray(f(x), dtype=np.float64)

    return deriv


def _factorial_multi(alpha: tuple[int, ...]) -> float:
    out = 1.0
    for a in alpha:
        out *= math.factorial(a)
    return out


def taylor_poly(
    target: HolderTarget, a, validate: bool = True
) -> dict[tuple[int, ...], float]:
    """Monomial coefficients c_gamma of the Taylor polynomial of f around ``a``.

    The expansion sum_{|alpha| < beta} d^alpha f(a) (x-a)^alpha / alpha! is
    rearranged into sum_gamma c_gamma x^gamma with
    c_gamma = sum_{alpha >= gamma} d^alpha f(a) (-a)^(alpha-gamma) / (gamma! (alpha-gamma)!).
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (target.dim,):
        raise ValueError(f"expansion point must have shape ({target.dim},)")
    alphas = multi_indices(target.dim, target.beta)
    derivs = {}
    for alpha in alphas:
        val = np.asarray(target.partial(alpha)(a[None, :]), dtype=np.float64).reshape(-1)
        if val.shape != (1,) or not np.isfinite(val[0]):
            raise DerivativeError(f"derivative at alpha={alpha} returned a non-scalar or non-finite value")
        derivs[alpha] = float(val[0])
    coeffs: dict[tuple[int, ...], float] = {}
    for gamma in alphas:
        c = 0.0
        for alpha in alphas:
            if all(alpha[i] >= gamma[i] for i in range(target.dim)):
                diff = tuple(alpha[i] - gamma[i] for i in range(target.dim))
                c += derivs[alpha] * float(np.prod((-a) ** np.array(diff))) / (
                    _factorial_multi(gamma) * _factorial_multi(diff)
                )
        coeffs[gamma] = c
    if validate:
        K = target.radius
        slack = 1e-8 * max(1.0, K) if target.partials is not None else 1e-3 * max(1.0, K)
        for gamma, c in coeffs.items():
            if abs(c) > K / _factorial_multi(gamma) + slack:
                raise ValueError(
                    f"Taylor coefficient c_{gamma} = {c} exceeds K/gamma! = "
                    f"{K / _factorial_multi(gamma)}; the declared radius {K} is too small"
                )
        total = sum(abs(c) for c in coeffs.values())
        if total > K * math.e**target.dim + slack:
            raise ValueError(
                f"sum of |c_gamma| = {total} exceeds K e^r = {K * math.e ** target.dim}; "
                f"the declared radius {K} is too small"
            )
    return coeffs


def eval_monomial_poly(coeffs: dict[tuple[int, ...], float], x) -> np.ndarray:
    """Evaluate sum_gamma c_gamma x^gamma on a batch (n, r)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = np.zeros(x.shape[0])
    for gamma, c in coeffs.items():
        if c == 0.0:
            continue
        term = np.full(x.shape[0], c)
        for i, g in enumerate(gamma):
            if g:
                term = term * x[:, i] ** g
        out += term
    return out


def partition_of_unity(M: int, x) -> np.ndarray:
    """sum over grid points of prod_j (1 - M |x_j - l_j/M|)_+ (identically one on [0,1]^r)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    total = np.ones(x.shape[0])
    for j in range(x.shape[1]):
        knots = np.arange(M + 1) / M
        w = np.maximum(1.0 - M * np.abs(x[:, j, None] - knots[None, :]), 0.0)
        total = total * w.sum(axis=1)
    return total


def local_taylor_ref(target: HolderTarget, M: int, x) -> np.ndarray:
    """Reference evaluator of the hat-blended local Taylor approximation.

    P(x) = sum_l P_{x_l}(x) prod_j (1 - M |x_j - x_j^l|)_+ over the grid {l/M}^r.
    Not a network; used as an oracle against the network constructions.
    """
    import itertools

    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = np.zeros(x.shape[0])
    for l_tuple in itertools.product(range(M + 1), repeat=target.dim):
        anchor = np.array(l_tuple, dtype=np.float64) / M
        w = np.ones(x.shape[0])
        for j in range(target.dim):
            w = w * np.maximum(1.0 - M * np.abs(x[:, j] - anchor[j]), 0.0)
        live = w > 0
        if not live.any():
            continue
        coeffs = taylor_poly(target, anchor)
        out[live] += eval_monomial_poly(coeffs, x[live]) * w[live]
    return out
