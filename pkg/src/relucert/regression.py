"""Desk-scale regression experiments: Y_i = f0(X_i) + eps_i with Gaussian noise.

The fitter is projected full-batch gradient descent with a backtracking step
rule (halve until the risk does not increase), parameter clipping to [-1, 1]
after every step, and magnitude pruning to the sparsity target on a fixed
epoch schedule.  The optimizer is deliberately simple: the backtracking rule
makes the risk trajectory nonincreasing between prunings, which is a testable
invariant, and the clipping keeps every iterate inside the bounded-parameter
class rather than projecting post hoc.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .network import SparseNetwork, count_active, evaluate, layer_from_dense

__all__ = [
    "RegressionDataset",
    "FitHyper",
    "FitResult",
    "SlopeReport",
    "sample_dataset",
    "empirical_risk",
    "fit_erm",
    "fit_result_from_net",
    "estimate_prediction_risk",
    "delta_proxy",
    "rate_experiment",
    "loglog_slope",
]


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class RegressionDataset:
    """n covariate/response pairs from the regression model, with the noise stored."""

    X: np.ndarray
    Y: np.ndarray
    truth: Callable[[np.ndarray], np.ndarray]
    noise_sd: float
    seed: int
    noise: np.ndarray
    design: str = "uniform"

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def key(self) -> str:
        return hashlib.sha256(self.X.tobytes() + self.Y.tobytes()).hexdigest()[:16]


def sample_dataset(
    f0: Callable[[np.ndarray], np.ndarray],
    n: int,
    d: int,
    noise_sd: float = 1.0,
    design: str | Sequence[Callable[[np.ndarray], np.ndarray]] = "uniform",
    seed: int = 0,
) -> RegressionDataset:
    """Draw X (uniform on [0,1]^d or a product density via per-axis inverse CDFs) and Y.

    Deterministic given the seed; the realized noise draws are stored so that
    Y - f0(X) is reproducible exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    u = rng.random((n, d))
    if design == "uniform":
        X = u
        design_tag = "uniform"
    else:
        if len(design) != d:
            raise ValueError("product design needs one inverse CDF per axis")
        X = np.column_stack([np.asarray(icdf(u[:, j])) for j, icdf in enumerate(design)])
        design_tag = "product"
    eps = rng.standard_normal(n) * noise_sd
    Y = np.asarray(f0(X), dtype=np.float64) + eps
    X.setflags(write=False)
    Y.setflags(write=False)
    return RegressionDataset(X, Y, f0, noise_sd, seed, eps, design_tag)


def _predict(f, X: np.ndarray) -> np.ndarray:
    if isinstance(f, SparseNetwork):
        out = evaluate(f, X)
        return out[:, 0] if out.ndim == 2 else out
    return np.asarray(f(X), dtype=np.float64)


def empirical_risk(f, dataset: RegressionDataset) -> float:
    """(1/n) sum (Y_i - f(X_i))^2 for a network or plain callable."""
    resid = dataset.Y - _predict(f, dataset.X)
    return float(np.mean(resid * resid))


@dataclass(frozen=True)
class FitHyper:
    restarts: int = 2
    epochs: int = 400
    step: float = 0.25
    seed: int = 0
    prune_fracs: tuple[float, ...] = (0.5, 0.75, 0.9)
    max_halvings: int = 40


@dataclass(frozen=True)
class FitResult:
    net: SparseNetwork
    empirical_risk: float
    restarts: int
    dropped_restarts: int
    best_restart_risk_gap: float
    trajectory: tuple[float, ...]
    sup_flagged: bool
    dataset_key: str


class _DenseParams:
    """Mutable dense parameter set for training; converts to SparseNetwork at the end."""

    def __init__(self, widths: Sequence[int], rng: np.random.Generator):
        self.widths = [int(w) for w in widths]
        self.W = [rng.uniform(-0.5, 0.5, size=(self.widths[j + 1], self.widths[j])) for j in range(len(self.widths) - 1)]
        self.v = [rng.uniform(-0.5, 0.5, size=self.widths[j + 1]) for j in range(len(self.widths) - 2)]
        self.W_mask = [np.ones_like(w, dtype=bool) for w in self.W]
        self.v_mask = [np.ones_like(s, dtype=bool) for s in self.v]

    def forward(self, X: np.ndarray):
        z = X
        acts = [z]
        for j in range(len(self.W) - 1):
            pre = z @ self.W[j].T - self.v[j]
            z = np.maximum(pre, 0.0)
            acts.append(z)
        out = z @ self.W[-1].T
        return out[:, 0], acts

    def risk(self, X: np.ndarray, Y: np.ndarray) -> float:
        pred, _ = self.forward(X)
        r = Y - pred
        return float(np.mean(r * r))

    def gradients(self, X: np.ndarray, Y: np.ndarray):
        n = X.shape[0]
        pred, acts = self.forward(X)
        gW = [np.zeros_like(w) for w in self.W]
        gv = [np.zeros_like(s) for s in self.v]
        delta = (2.0 / n) * (pred - Y)[:, None]  # d risk / d output
        gW[-1] = delta.T @ acts[-1]
        back = delta @ self.W[-1]
        for j in range(len(self.W) - 2, -1, -1):
            # ReLU subgradient at 0 taken as 0: strict inequality
            live = (acts[j + 1] > 0).astype(np.float64)
            back = back * live
            gW[j] = back.T @ acts[j]
            gv[j] = -back.sum(axis=0)
            if j > 0:
                back = back @ self.W[j]
        return gW, gv

    def flat_values(self) -> np.ndarray:
        parts = []
        for j in range(len(self.W)):
            parts.append(self.W[j].ravel())
            if j < len(self.v):
                parts.append(self.v[j])
        return np.concatenate(parts)

    def apply_flat_mask(self, keep: np.ndarray):
        pos = 0
        for j in range(len(self.W)):
            k = self.W[j].size
            self.W_mask[j] &= keep[pos : pos + k].reshape(self.W[j].shape)
            self.W[j] *= self.W_mask[j]
            pos += k
            if j < len(self.v):
                k = self.v[j].size
                self.v_mask[j] &= keep[pos : pos + k]
                self.v[j] *= self.v_mask[j]
                pos += k

    def step(self, gW, gv, eta: float) -> "_DenseParams":
        out = object.__new__(_DenseParams)
        out.widths = self.widths
        out.W = [np.clip(w - eta * g, -1.0, 1.0) * mk for w, g, mk in zip(self.W, gW, self.W_mask)]
        out.v = [np.clip(s - eta * g, -1.0, 1.0) * mk for s, g, mk in zip(self.v, gv, self.v_mask)]
        out.W_mask = self.W_mask
        out.v_mask = self.v_mask
        return out

    def to_network(self, sup_bound: float | None) -> SparseNetwork:
        layers = []
        for j in range(len(self.W)):
            shift = self.v[j] if j < len(self.v) else None
            layers.append(layer_from_dense(self.W[j], shift))
        return SparseNetwork(tuple(self.widths), tuple(layers), sup_bound)


def _prune_to(params: _DenseParams, s_target: int):
    """Zero and freeze everything but the s_target largest-magnitude parameters.

    Ties break to the earliest position in (layer, weights-then-shift,
    row-major) order via a stable sort.
    """
    flat = np.abs(params.flat_values())
    order = np.argsort(-flat, kind="stable")
    keep = np.zeros(flat.size, dtype=bool)
    keep[order[:s_target]] = True
    keep &= flat > 0
    params.apply_flat_mask(keep)


def fit_erm(
    dataset: RegressionDataset,
    arch: tuple[int, Sequence[int]],
    s_target: int,
    F: float,
    hyper: FitHyper = FitHyper(),
) -> FitResult:
    """Projected full-batch gradient descent toward the s-sparse bounded class.

    Keeps the best of ``hyper.restarts`` random initializations; a diverging
    restart (NaN risk) is consumed and counted.  The returned network carries
    ``sup_bound=F`` and is flagged when the fitted values on the training
    inputs exceed F in absolute value (audit, no clamping).
    """
    L, p = arch
    widths = tuple(int(w) for w in p)
    if len(widths) != L + 2:
        raise ValueError("width vector must hold L+2 entries")
    if widths[0] != dataset.d or widths[-1] != 1:
        raise ValueError("architecture must map the covariate dimension to one output")
    capacity = sum((widths[l] + 1) * widths[l + 1] for l in range(len(widths) - 1)) - widths[-1]
    if s_target > capacity:
        raise ValueError(f"s_target = {s_target} exceeds the architecture capacity {capacity}")
    prune_epochs = sorted({max(1, int(frac * hyper.epochs)) for frac in hyper.prune_fracs})
    seeds = np.random.SeedSequence(hyper.seed).spawn(hyper.restarts)
    X, Y = dataset.X, dataset.Y
    best = None
    risks = []
    dropped = 0
    for ss in seeds:
        params = _DenseParams(widths, _rng(ss))
        if s_target == 0:
            _prune_to(params, 0)
        risk = params.risk(X, Y)
        traj = [risk]
        diverged = False
        for epoch in range(1, hyper.epochs + 1):
            if epoch in prune_epochs and s_target < capacity:
                _prune_to(params, s_target)
                risk = params.risk(X, Y)
            gW, gv = params.gradients(X, Y)
            eta = hyper.step
            accepted = False
            for _ in range(hyper.max_halvings):
                cand = params.step(gW, gv, eta)
                cand_risk = cand.risk(X, Y)
                if np.isnan(cand_risk):
                    diverged = True
                    break
                if cand_risk <= risk:
                    params, risk = cand, cand_risk
                    accepted = True
                    break
                eta /= 2.0
            if diverged:
                break
            if not accepted:
                pass  # keep current iterate; risk unchanged
            traj.append(risk)
        if diverged or np.isnan(risk):
            dropped += 1
            continue
        risks.append(risk)
        if best is None or risk < best[1]:
            best = (params, risk, traj)
    if best is None:
        raise RuntimeError(f"all {hyper.restarts} restarts diverged")
    params, risk, traj = best
    net = params.to_network(sup_bound=F)
    fitted, _ = params.forward(X)
    return FitResult(
        net=net,
        empirical_risk=risk,
        restarts=hyper.restarts,
        dropped_restarts=dropped,
        best_restart_risk_gap=(max(risks) - min(risks)) if risks else 0.0,
        trajectory=tuple(traj),
        sup_flagged=bool(np.max(np.abs(fitted)) > F),
        dataset_key=dataset.key,
    )


def fit_result_from_net(net: SparseNetwork, dataset: RegressionDataset) -> FitResult:
    """Wrap a hand-constructed network as a pool entry for delta_proxy comparisons."""
    risk = empirical_risk(net, dataset)
    fitted = _predict(net, dataset.X)
    flagged = net.sup_bound is not None and bool(np.max(np.abs(fitted)) > net.sup_bound)
    return FitResult(net, risk, 0, 0, 0.0, (risk,), flagged, dataset.key)


def estimate_prediction_risk(
    f, f0: Callable[[np.ndarray], np.ndarray], d: int, mc_points: int = 4096, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate of E (f(X) - f0(X))^2 over fresh uniform draws, with its SE."""
    if mc_points < 100:
        raise ValueError("mc_points must be >= 100")
    X = _rng(seed).random((mc_points, d))
    sq = (_predict(f, X) - np.asarray(f0(X), dtype=np.float64)) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(mc_points))


def delta_proxy(fit: FitResult, reference_fits: Sequence[FitResult]) -> float:
    """Empirical-risk gap of ``fit`` against the best risk in the pool (including itself).

    Upper-biased proxy for the optimization-error quantity: the true class-wide
    minimum is unavailable, so the pool minimum stands in for it.
    """
    pool = [fit, *reference_fits]
    keys = {f.dataset_key for f in pool}
    if len(keys) != 1:
        raise ValueError("delta_proxy requires all fits to share one dataset")
    return fit.empirical_risk - min(f.empirical_risk for f in pool)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """OLS slope of log y against log x with its standard error."""
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    n = lx.size
    xc = lx - lx.mean()
    slope = float((xc * ly).sum() / (xc * xc).sum())
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    if n > 2:
        se = float(np.sqrt((resid * resid).sum() / (n - 2) / (xc * xc).sum()))
    else:
        se = float("nan")
    return slope, se


@dataclass(frozen=True)
class SlopeReport:
    """Per-n averaged risks and the fitted log-log rate exponent."""

    n_grid: tuple[int, ...]
    mean_risks: tuple[float, ...]
    slope: float
    slope_se: float
    theory_exponent: float | None
    degenerate: bool
    dropped_replications: int
    rows: tuple[dict, ...] = field(default_factory=tuple)


def rate_experiment(
    f0: Callable[[np.ndarray], np.ndarray],
    d: int,
    n_grid: Sequence[int],
    fit_recipe: Callable[[int], tuple[tuple[int, Sequence[int]], int, float, FitHyper]],
    replications: int,
    seed: int = 0,
    mc_points: int = 4096,
    noise_sd: float = 1.0,
    theory_exponent: float | None = None,
) -> SlopeReport:
    """Average prediction risks over replications per n and regress log risk on log n.

    ``fit_recipe(n)`` returns (arch, s_target, F, hyper); per-run seeds are
    derived deterministically from the root seed.  A failed fit drops that
    replication and is counted.
    """
    ns = [int(n) for n in n_grid]
    if len(ns) < 4 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_grid must be increasing with at least 4 points")
    rows = []
    dropped = 0
    for i, n in enumerate(ns):
        for rep in range(replications):
            ss = np.random.SeedSequence(entropy=seed, spawn_key=(i, rep))
            data_seed, fit_seed, mc_seed = (int(s) for s in ss.generate_state(3))
            dataset = sample_dataset(f0, n, d, noise_sd=noise_sd, seed=data_seed)
            arch, s_target, F, hyper = fit_recipe(n)
            hyper = replace(hyper, seed=fit_seed)
            try:
                fit = fit_erm(dataset, arch, s_target, F, hyper)
            except RuntimeError:
                dropped += 1
                continue
            pred, se = estimate_prediction_risk(fit.net, f0, d, mc_points, seed=mc_seed)
            rows.append(
                {
                    "n": n,
                    "replication": rep,
                    "empirical_risk": fit.empirical_risk,
                    "pred_risk": pred,
                    "pred_risk_se": se,
                    "s_final": count_active(fit.net).active_count,
                    "seed": data_seed,
                }
            )
    means = []
    for n in ns:
        vals = [row["pred_risk"] for row in rows if row["n"] == n]
        means.append(float(np.mean(vals)) if vals else float("nan"))
    degenerate = any(not np.isfinite(v) or v <= 1e-12 for v in means)
    if degenerate:
        slope, slope_se = float("nan"), float("nan")
    else:
        slope, slope_se = loglog_slope(ns, means)
    return SlopeReport(
        tuple(ns), tuple(means), slope, slope_se, theory_exponent, degenerate, dropped, tuple(rows)
    )
