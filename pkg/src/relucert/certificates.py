"""Machine-checkable certificates attached to every constructed network.

A certificate records the closed-form claims of the construction it came from:
exact depth, a width bound, a sparsity bound and a sup-norm error bound on a
stated domain.  ``check_certificate`` re-measures all of them; grids are
aligned to dyadic breakpoints so the grid sup is a faithful proxy for the true
sup of the piecewise-linear constructions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .network import SparseNetwork, count_active, evaluate

__all__ = [
    "ConstructionCertificate",
    "CertificateReport",
    "standard_grid",
    "dyadic_grid",
    "measure_sup_error",
    "check_certificate",
    "certificate_to_doc",
    "certificate_from_doc",
]

QUASI_RANDOM_POINTS = 10**5


@dataclass(frozen=True)
class ConstructionCertificate:
    """Claims a construction makes about its own output network.

    claimed_depth is exact; width/sparsity are upper bounds; claimed_sup_error
    bounds the sup-norm distance to the reference function on ``domain``
    (a per-axis list of [lo, hi] intervals).  ``bound_formula_id`` names the
    closed-form bound; ``target`` is a JSON-serializable descriptor from which
    the reference function can be rebuilt for re-measurement.
    """

    bound_formula_id: str
    claimed_depth: int
    claimed_width_bound: int
    claimed_sparsity_bound: int
    claimed_sup_error: float
    domain: tuple[tuple[float, float], ...]
    target: dict = field(default_factory=dict)
    derivative_provenance: str = "exact"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.claimed_depth < 0 or self.claimed_width_bound < 1 or self.claimed_sparsity_bound < 0:
            raise ValueError("certificate structural claims must be non-negative")
        if not (self.claimed_sup_error >= 0):
            raise ValueError("claimed_sup_error must be non-negative")


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of re-measuring a certificate against its network."""

    depth_ok: bool
    width_ok: bool
    sparsity_ok: bool
    error_ok: bool
    actual_depth: int
    actual_width: int
    actual_sparsity: int
    measured_error: float
    grid_spec: dict

    @property
    def ok(self) -> bool:
        return self.depth_ok and self.width_ok and self.sparsity_ok and self.error_ok

    def failed_claims(self) -> list[str]:
        fails = []
        if not self.depth_ok:
            fails.append("depth")
        if not self.width_ok:
            fails.append("width_bound")
        if not self.sparsity_ok:
            fails.append("sparsity_bound")
        if not self.error_ok:
            fails.append("sup_error_bound")
        return fails


def dyadic_grid(k: int) -> np.ndarray:
    """The 2^k + 1 exactly-representable points l * 2^-k on [0, 1]."""
    return np.arange(2**k + 1, dtype=np.float64) * 2.0**-k


def standard_grid(r: int, m: int, max_points: int = 2_000_000) -> np.ndarray:
    """The module's standard evaluation grid on [0,1]^r for a resolution-m construction.

    r <= 3: a tensor dyadic grid of step min(2^-(m+2), 1/256); the step divides
    2^-(m+1), so every dyadic breakpoint of the construction is a grid point.
    The per-axis refinement backs off (staying dyadic) when the tensor grid
    would exceed ``max_points``.  r > 3: 10^5 deterministic Sobol points.
    """
    if r <= 3:
        k = max(m + 2, 8)
        while (2**k + 1) ** r > max_points and k > 4:
            k -= 1
        axis = dyadic_grid(k)
        mesh = np.meshgrid(*([axis] * r), indexing="ij")
        return np.stack([a.ravel() for a in mesh], axis=1)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        sob = qmc.Sobol(d=r, scramble=False)
        return sob.random(QUASI_RANDOM_POINTS)


def measure_sup_error(
    net: SparseNetwork, reference: Callable[[np.ndarray], np.ndarray], grid: np.ndarray
) -> float:
    """max over grid points and output coordinates of |net(x) - reference(x)|."""
    got = evaluate(net, grid)
    want = np.asarray(reference(grid), dtype=np.float64)
    if got.ndim == 2 and got.shape[1] == 1 and want.ndim == 1:
        got = got[:, 0]
    if want.shape != got.shape:
        raise ValueError(f"reference output shape {want.shape} != network output shape {got.shape}")
    return float(np.max(np.abs(got - want)))


def check_certificate(
    net: SparseNetwork,
    cert: ConstructionCertificate,
    reference: Callable[[np.ndarray], np.ndarray] | None = None,
    grid: np.ndarray | None = None,
) -> CertificateReport:
    """Re-measure the structural counts and (when a reference is given) the grid error."""
    stats = count_active(net)
    hidden = net.widths[1:-1]
    actual_width = max(hidden) if hidden else 0
    measured = float("nan")
    grid_spec: dict = {"kind": "none"}
    error_ok = True
    if reference is not None:
        if grid is None:
            m = int(cert.extras.get("m", 8))
            grid = standard_grid(net.input_dim, m)
            grid_spec = {"kind": "standard", "r": net.input_dim, "m": m, "points": int(grid.shape[0])}
        else:
            grid_spec = {"kind": "explicit", "points": int(np.asarray(grid).shape[0])}
        lo = np.array([d[0] for d in cert.domain])
        hi = np.array([d[1] for d in cert.domain])
        scaled = lo + grid * (hi - lo) if not (np.all(lo == 0) and np.all(hi == 1)) else grid
        measured = measure_sup_error(net, reference, scaled)
        error_ok = measured <= cert.claimed_sup_error
    return CertificateReport(
        depth_ok=net.depth == cert.claimed_depth,
        width_ok=actual_width <= cert.claimed_width_bound,
        sparsity_ok=stats.active_count <= cert.claimed_sparsity_bound,
        error_ok=error_ok,
        actual_depth=net.depth,
        actual_width=actual_width,
        actual_sparsity=stats.active_count,
        measured_error=measured,
        grid_spec=grid_spec,
    )


def certificate_to_doc(cert: ConstructionCertificate, report: CertificateReport | None = None) -> dict:
    doc = {
        "statement_id": cert.bound_formula_id,
        "depth": cert.claimed_depth,
        "width_bound": cert.claimed_width_bound,
        "sparsity_bound": cert.claimed_sparsity_bound,
        "sup_error_bound": cert.claimed_sup_error,
        "domain": [list(d) for d in cert.domain],
        "target": cert.target,
        "derivative_provenance": cert.derivative_provenance,
        "extras": cert.extras,
    }
    if report is not None:
        doc["measured_grid_error"] = report.measured_error
        doc["grid_spec"] = report.grid_spec
    return doc


def certificate_from_doc(doc: dict) -> ConstructionCertificate:
    required = ["statement_id", "depth", "width_bound", "sparsity_bound", "sup_error_bound", "domain"]
    for key in required:
        if key not in doc:
            raise ValueError(f"certificate document missing field {key!r}")
    return ConstructionCertificate(
        bound_formula_id=doc["statement_id"],
        claimed_depth=int(doc["depth"]),
        claimed_width_bound=int(doc["width_bound"]),
        claimed_sparsity_bound=int(doc["sparsity_bound"]),
        claimed_sup_error=float(doc["sup_error_bound"]),
        domain=tuple((float(d[0]), float(d[1])) for d in doc["domain"]),
        target=doc.get("target", {}),
        derivative_provenance=doc.get("derivative_provenance", "exact"),
        extras=doc.get("extras", {}),
    )
