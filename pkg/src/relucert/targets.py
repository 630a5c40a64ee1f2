"""Named analytic targets with exact partial derivatives.

The CLI works with registered names so that construction targets and
certificate references survive a JSON round trip; the library itself accepts
arbitrary callables.  Each factory takes (r, beta, K) and returns a
HolderTarget; the declared (beta, K) must be a valid ball for the function,
which is the caller's responsibility exactly as in the library API.
"""

from __future__ import annotations

import math

import numpy as np

from .primitives import hat_products_ref, multi_indices
from .taylor import HolderTarget

__all__ = ["named_target", "target_names", "resolve_reference", "composition_spec_from_doc"]


def _poly1d_target(name: str, coeffs: list[float], r: int, beta: float, K: float) -> HolderTarget:
    """Univariate polynomial sum c_k x^k with exact derivatives."""
    if r != 1:
        raise ValueError(f"target {name!r} is univariate")
    base = np.asarray(coeffs, dtype=np.float64)

    def value(x):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        return np.polynomial.polynomial.polyval(x, base)

    def partials(alpha):
        k = alpha[0]
        dcoef = base.copy()
        for _ in range(k):
            dcoef = np.polynomial.polynomial.polyder(dcoef)

        def deriv(x):
            x = np.asarray(x, dtype=np.float64).reshape(-1)
            return np.polynomial.polynomial.polyval(x, dcoef)

        return deriv

    return HolderTarget(1, beta, K, value, partials, name=name)


def _make_zero(r, beta, K):
    return HolderTarget(
        r,
        beta,
        K,
        value=lambda x: np.zeros(np.atleast_2d(x).shape[0]),
        partials=lambda alpha: (lambda x: np.zeros(np.atleast_2d(x).shape[0])),
        name="zero",
    )


def _make_identity(r, beta, K):
    return _poly1d_target("identity", [0.0, 1.0], r, beta, K)


def _make_x_one_minus_x(r, beta, K):
    return _poly1d_target("x_times_one_minus_x", [0.0, 1.0, -1.0], r, beta, K)


def _make_sin_pi(r, beta, K):
    if r != 1:
        raise ValueError("sin_pi is univariate")

    def value(x):
        return np.sin(math.pi * np.asarray(x, dtype=np.float64).reshape(-1))

    def partials(alpha):
        k = alpha[0]

        def deriv(x):
            x = np.asarray(x, dtype=np.float64).reshape(-1)
            return math.pi**k * np.sin(math.pi * x + k * math.pi / 2)

        return deriv

    return HolderTarget(1, beta, K, value, partials, name="sin_pi")


def _make_mean(r, beta, K):
    def value(x):
        return np.atleast_2d(np.asarray(x, dtype=np.float64)).mean(axis=1)

    def partials(alpha):
        total = sum(alpha)

        def deriv(x):
            n = np.atleast_2d(x).shape[0]
            if total == 1:
                return np.full(n, 1.0 / r)
            return np.zeros(n)

        return deriv

    return HolderTarget(r, beta, K, value, partials, name="mean")


def _make_prod(r, beta, K):
    def value(x):
        return np.atleast_2d(np.asarray(x, dtype=np.float64)).prod(axis=1)

    def partials(alpha):
        def deriv(x):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            if any(a > 1 for a in alpha):
                return np.zeros(x.shape[0])
            out = np.ones(x.shape[0])
            for i, a in enumerate(alpha):
                if a == 0:
                    out = out * x[:, i]
            return out

        return deriv

    return HolderTarget(r, beta, K, value, partials, name="prod")


_REGISTRY = {
    "zero": _make_zero,
    "identity": _make_identity,
    "x_times_one_minus_x": _make_x_one_minus_x,
    "sin_pi": _make_sin_pi,
    "mean": _make_mean,
    "prod": _make_prod,
}


def target_names() -> list[str]:
    return sorted(_REGISTRY)


def named_target(name: str, r: int, beta: float, K: float) -> HolderTarget:
    if name not in _REGISTRY:
        raise KeyError(f"unknown target {name!r}; known: {', '.join(target_names())}")
    return _REGISTRY[name](r, beta, K)


def composition_spec_from_doc(doc: dict):
    """Build a CompositionSpec from its JSON document of named components."""
    from .composite import ComponentSpec, CompositionSpec

    levels = []
    for i, level in enumerate(doc["levels"]):
        comps = []
        for entry in level:
            t = entry["target"]
            comps.append(
                ComponentSpec(
                    target=named_target(
                        t["name"], len(entry["vars"]), doc["smoothness"][i], doc["radii"][i]
                    ),
                    var_subset=tuple(entry["vars"]),
                )
            )
        levels.append(tuple(comps))
    return CompositionSpec(
        dims=tuple(doc["dims"]),
        arities=tuple(doc["arities"]),
        smoothness=tuple(doc["smoothness"]),
        radii=tuple(doc["radii"]),
        components=tuple(levels),
    )


def resolve_reference(descriptor: dict):
    """Rebuild the reference callable a certificate was measured against.

    Returns a function mapping an (n, r) batch to (n,) or (n, outputs) values.
    """
    kind = descriptor.get("kind")
    if kind == "product":
        return lambda x: np.atleast_2d(np.asarray(x, dtype=np.float64)).prod(axis=1)
    if kind == "monomials":
        alphas = multi_indices(int(descriptor["r"]), float(descriptor["gamma"]))

        def monomials(x):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            cols = []
            for alpha in alphas:
                col = np.ones(x.shape[0])
                for i, a in enumerate(alpha):
                    if a:
                        col = col * x[:, i] ** a
                cols.append(col)
            return np.stack(cols, axis=1)

        return monomials
    if kind == "hat_grid":
        M, r = int(descriptor["M"]), int(descriptor["r"])
        return lambda x: hat_products_ref(M, r, x)
    if kind == "named_holder":
        target = named_target(
            descriptor["name"], int(descriptor["r"]), float(descriptor["beta"]), float(descriptor["K"])
        )
        return target.value
    if kind == "composite" and "spec" in descriptor:
        spec = composition_spec_from_doc(descriptor["spec"])
        return spec.truth
    raise ValueError(f"cannot rebuild a reference for target descriptor {descriptor!r}")
