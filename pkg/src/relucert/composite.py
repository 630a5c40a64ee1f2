"""Networks for compositions g_q o ... o g_0 of Holder components.

Each level is first rewritten on [0,1]-cubes: h_0 = g_0/(2 K_0) + 1/2,
h_i = (g_i(2 K_{i-1} . - K_{i-1}))/(2 K_i) + 1/2 for the middle levels and
h_q = g_q(2 K_{q-1} . - K_{q-1}), so the composite is unchanged while every
intermediate output lives in [0,1].  Each h_ij is approximated with
``build_holder_net``, clipped into [0,1] (two layers plus the junction
activation), parallelized within the level and composed across levels with
exact depth bookkeeping.  The certificate's error claim combines the per-level
claims through ``composition_error_bound``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import compose, parallelize, remap_inputs, sync_depth
from .certificates import ConstructionCertificate
from .network import SparseNetwork, clip_unit, count_active
from .primitives import RefusalError
from .holder import build_holder_net
from .taylor import HolderTarget

__all__ = [
    "ComponentSpec",
    "CompositionSpec",
    "rescale_components",
    "composition_error_bound",
    "build_composite_net",
]


@dataclass(frozen=True)
class ComponentSpec:
    """One coordinate function of a level: a Holder target plus the inputs it reads."""

    target: HolderTarget
    var_subset: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "var_subset", tuple(int(v) for v in self.var_subset))
        if len(self.var_subset) != self.target.dim:
            raise ValueError(
                f"component reads {len(self.var_subset)} variables but its target is "
                f"{self.target.dim}-variate"
            )
        if len(set(self.var_subset)) != len(self.var_subset):
            raise ValueError("variable subset must not repeat indices")


@dataclass(frozen=True)
class CompositionSpec:
    """The hierarchy (q, d, t, beta, K) of a composite regression function.

    dims = (d_0, ..., d_{q+1}) with d_{q+1} = 1; level i holds d_{i+1}
    components, each depending on at most t_i of the d_i level inputs and
    declared beta_i-Holder with radius K_i.
    """

    dims: tuple[int, ...]
    arities: tuple[int, ...]
    smoothness: tuple[float, ...]
    radii: tuple[float, ...]
    components: tuple[tuple[ComponentSpec, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "arities", tuple(int(t) for t in self.arities))
        object.__setattr__(self, "smoothness", tuple(float(b) for b in self.smoothness))
        object.__setattr__(self, "radii", tuple(float(k) for k in self.radii))
        object.__setattr__(self, "components", tuple(tuple(level) for level in self.components))
        q = self.q
        if q < 0 or len(self.dims) != q + 2:
            raise ValueError("dims must hold q+2 entries")
        if not (len(self.arities) == len(self.smoothness) == len(self.radii) == q + 1):
            raise ValueError("arities, smoothness and radii must hold q+1 entries")
        if self.dims[-1] != 1:
            raise ValueError("the final output dimension d_{q+1} must be 1")
        if len(self.components) != q + 1:
            raise ValueError("components must hold one tuple per level")
        for i, level in enumerate(self.components):
            if len(level) != self.dims[i + 1]:
                raise ValueError(f"level {i} must hold d_{i + 1} = {self.dims[i + 1]} components")
            for j, comp in enumerate(level):
                if len(comp.var_subset) > self.arities[i]:
                    raise ValueError(
                        f"component ({i},{j}) depends on {len(comp.var_subset)} > t_{i} = "
                        f"{self.arities[i]} variables"
                    )
                if any(v < 0 or v >= self.dims[i] for v in comp.var_subset):
                    raise ValueError(f"component ({i},{j}) reads a variable outside level {i}")
                if comp.target.beta != self.smoothness[i] or comp.target.radius != self.radii[i]:
                    raise ValueError(
                        f"component ({i},{j}) declares (beta, K) = "
                        f"({comp.target.beta}, {comp.target.radius}) but level {i} declares "
                        f"({self.smoothness[i]}, {self.radii[i]})"
                    )

    @property
    def q(self) -> int:
        return len(self.dims) - 2

    def truth(self, x) -> np.ndarray:
        """Evaluate the composite g_q o ... o g_0 on a batch (n, d_0)."""
        z = np.atleast_2d(np.asarray(x, dtype=np.float64))
        for level in self.components:
            z = np.stack([comp.target.value(z[:, list(comp.var_subset)]) for comp in level], axis=1)
        return z[:, 0]


def _affine_wrap(
    target: HolderTarget, in_scale: float, in_shift: float, out_scale: float, out_shift: float, radius: float
) -> HolderTarget:
    """h(y) = out_scale * g(in_scale * y + in_shift) + out_shift with matching exact partials."""
    g_value = target.value
    g_partial = target.partial

    def value(y: np.ndarray) -> np.ndarray:
        return out_scale * np.asarray(g_value(np.asarray(y) * in_scale + in_shift)) + out_shift

    def partials(alpha: tuple[int, ...]):
        base = g_partial(alpha)
        factor = out_scale * in_scale ** sum(alpha)

        def deriv(y: np.ndarray) -> np.ndarray:
            return factor * np.asarray(base(np.asarray(y) * in_scale + in_shift))

        return deriv

    return HolderTarget(
        dim=target.dim,
        beta=target.beta,
        radius=radius,
        value=value,
        partials=partials if target.partials is not None else None,
        name=f"wrapped:{target.name}" if target.name else "",
    )


def rescale_components(spec: CompositionSpec) -> tuple[list[list[HolderTarget]], list[float]]:
    """The [0,1]-domain rewrite h_0, ..., h_q and the induced Holder radii.

    Middle levels map into [0,1]; the composite h_q o ... o h_0 equals the
    original g_q o ... o g_0 pointwise.  Requires every K_i >= 1.  For q = 0
    the single level is returned untouched (the affine wrap is the identity).
    """
    if any(k < 1 for k in spec.radii):
        raise RefusalError("rescale_components requires K_i >= 1 for every level")
    q = spec.q
    if q == 0:
        return [list(c.target for c in spec.components[0])], [spec.radii[0]]
    levels: list[list[HolderTarget]] = []
    radii: list[float] = []
    for i, level in enumerate(spec.components):
        K_i = spec.radii[i]
        K_prev = spec.radii[i - 1] if i > 0 else None
        if i == 0:
            radius = 1.0
            wrapped = [
                _affine_wrap(c.target, 1.0, 0.0, 1.0 / (2 * K_i), 0.5, radius) for c in level
            ]
        elif i < q:
            radius = (2 * K_prev) ** spec.smoothness[i]
            wrapped = [
                _affine_wrap(c.target, 2 * K_prev, -K_prev, 1.0 / (2 * K_i), 0.5, radius)
                for c in level
            ]
        else:
            radius = K_i * (2 * K_prev) ** spec.smoothness[i]
            wrapped = [
                _affine_wrap(c.target, 2 * K_prev, -K_prev, 1.0, 0.0, radius) for c in level
            ]
        levels.append(wrapped)
        radii.append(radius)
    return levels, radii


def composition_error_bound(per_level_errors: Sequence[float], spec: CompositionSpec) -> float:
    """K_q prod_{l<q} (2 K_l)^{beta_{l+1}} sum_i err_i^{prod_{l>i} (beta_l ^ 1)}."""
    errs = [float(e) for e in per_level_errors]
    if len(errs) != spec.q + 1:
        raise ValueError("need one error per level")
    if any(e < 0 for e in errs):
        raise ValueError("per-level errors must be non-negative")
    lead = spec.radii[-1]
    for l in range(spec.q):
        lead *= (2 * spec.radii[l]) ** spec.smoothness[l + 1]
    total = 0.0
    for i, err in enumerate(errs):
        expo = 1.0
        for l in range(i + 1, spec.q + 1):
            expo *= min(spec.smoothness[l], 1.0)
        total += err**expo
    return lead * total


def build_composite_net(
    spec: CompositionSpec, m: int, N_per_level: Sequence[int]
) -> tuple[SparseNetwork, ConstructionCertificate]:
    """Approximate the composite with per-level approximation budgets N_i.

    Levels below the top are clipped into [0,1] (two extra layers; the
    composition junction's activation completes the clip from below), then
    parallelized and composed with zero junction shifts.  Structural claims in
    the certificate are the exact integers of the assembled network; the error
    claim combines per-level claims through the composition error bound.
    """
    N_list = [int(n) for n in N_per_level]
    if len(N_list) != spec.q + 1:
        raise ValueError("need one N per level")
    levels, _ = rescale_components(spec)
    level_nets: list[SparseNetwork] = []
    level_errors: list[float] = []
    provenance = "exact"
    for i, level in enumerate(levels):
        members: list[SparseNetwork] = []
        errs: list[float] = []
        for j, h_target in enumerate(level):
            try:
                net_ij, cert_ij = build_holder_net(h_target, m, N_list[i])
            except (RefusalError, ValueError) as exc:
                raise RefusalError(f"level {i}, component {j}: {exc}") from exc
            if i < spec.q:
                net_ij = clip_unit(net_ij)
            if cert_ij.derivative_provenance != "exact":
                provenance = cert_ij.derivative_provenance
            members.append(net_ij)
            errs.append(cert_ij.claimed_sup_error)
        depth_i = max(net.depth for net in members)
        synced = []
        for net_ij, comp in zip(members, spec.components[i]):
            net_ij = sync_depth(net_ij, depth_i - net_ij.depth)
            synced.append(remap_inputs(net_ij, spec.dims[i], comp.var_subset))
        level_nets.append(parallelize(synced))
        level_errors.append(max(errs))
    net = level_nets[0]
    for i in range(1, spec.q + 1):
        net = compose(level_nets[i], net, 0.0)
    stats = count_active(net)
    hidden = net.widths[1:-1]
    cert = ConstructionCertificate(
        bound_formula_id="composite",
        claimed_depth=net.depth,
        claimed_width_bound=max(hidden) if hidden else 1,
        claimed_sparsity_bound=stats.active_count,
        claimed_sup_error=composition_error_bound(level_errors, spec),
        domain=((0.0, 1.0),) * spec.dims[0],
        target={"kind": "composite"},
        derivative_provenance=provenance,
        extras={"m": m, "N_per_level": N_list, "level_error_bounds": level_errors},
    )
    return net, cert
