"""Tensor-product wavelet series estimation and its structural lower bound.

The default basis is Haar (the only compactly supported wavelet with closed
forms for everything): psi = 1 on [0,1/2), -1 on [1/2,1), support exponent
q = 0, first non-vanishing moment r = 1 with mu_1 = -1/4.  Indices are pairs
lambda = (j, k) with j = -1 denoting the shifted scaling function.

``build_counterexample`` produces the additive ridge functions
f(x) = h(x_1 + ... + x_d) whose wavelet coefficients are constant over the
level-j lattice of translates and scale like 2^(-j(2 alpha + d)/2); summing
min(1/n, d_lambda^2) over that lattice gives the estimator-independent risk
floor used for the suboptimality diagnostics.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .primitives import ceil_log2
from .regression import RegressionDataset

__all__ = [
    "WaveletSpec",
    "haar",
    "psi_lambda",
    "empirical_coeff",
    "quad_coeff",
    "wavelet_estimate",
    "level_index_set",
    "fit_wavelet_truncated",
    "balanced_level",
    "build_counterexample",
    "CounterexampleFn",
    "lattice_coefficient",
    "lattice_size",
    "risk_floor",
    "counterexample_floor",
]

MIDPOINTS_2D = 2**12
MIDPOINTS_3D = 2**8
MC_POINTS = 2**14


@dataclass(frozen=True)
class WaveletSpec:
    """A compactly supported mother wavelet with its moment data.

    ``psi`` vanishes outside [0, 2^q]; ``r`` is the smallest positive integer
    with mu_r = int x^r psi(x) dx != 0; ``mu0`` is int psi (zero for genuine
    mother wavelets).  ``nu(d)`` is the lattice parameter ceil(log2 d) + 1.
    """

    psi: Callable[[np.ndarray], np.ndarray]
    phi: Callable[[np.ndarray], np.ndarray]
    q: int
    r: int
    mu0: float
    mu_r: float
    name: str = ""

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("the first non-vanishing moment index r must be >= 1")
        width = 2**self.q
        outside = np.concatenate([np.linspace(-1, 0, 257, endpoint=False), np.linspace(width, width + 1, 257)])
        if np.any(np.asarray(self.psi(outside)) != 0.0):
            raise ValueError(f"psi must vanish outside [0, 2^q] = [0, {width}]")
        mids = (np.arange(2**12) + 0.5) * (width / 2**12)
        vals = np.asarray(self.psi(mids))
        tol = 1e-6 * max(1.0, float(np.max(np.abs(vals))))
        for j in range(1, self.r):
            if abs(float((vals * mids**j).mean() * width)) > tol:
                raise ValueError(f"moment of order {j} must vanish below the declared r = {self.r}")
        quad_mu_r = float((vals * mids**self.r).mean() * width)
        if abs(quad_mu_r - self.mu_r) > tol or self.mu_r == 0.0:
            raise ValueError(
                f"declared mu_r = {self.mu_r} inconsistent with quadrature value {quad_mu_r:.8f}"
            )

    def nu(self, d: int) -> int:
        return ceil_log2(d) + 1


def haar() -> WaveletSpec:
    def psi(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where((x >= 0) & (x < 0.5), 1.0, 0.0) - np.where((x >= 0.5) & (x < 1.0), 1.0, 0.0)

    def phi(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where((x >= 0) & (x < 1.0), 1.0, 0.0)

    return WaveletSpec(psi=psi, phi=phi, q=0, r=1, mu0=0.0, mu_r=-0.25, name="haar")


def psi_lambda(spec: WaveletSpec, lam: tuple[int, int], x) -> np.ndarray:
    """psi_{j,k}(x) = 2^(j/2) psi(2^j x - k); j = -1 gives the shifted scaling function."""
    j, k = lam
    x = np.asarray(x, dtype=np.float64)
    if j == -1:
        return spec.phi(x - k)
    return 2.0 ** (j / 2.0) * spec.psi(2.0**j * x - k)


def _support(spec: WaveletSpec, lam: tuple[int, int]) -> tuple[float, float]:
    j, k = lam
    if j == -1:
        return (float(k), float(k + 1))
    w = 2.0**-j
    return (k * w, (k + 2**spec.q) * w)


def empirical_coeff(dataset: RegressionDataset, lam_tuple: Sequence[tuple[int, int]], spec: WaveletSpec) -> float:
    """(1/n) sum_i Y_i prod_r psi_{lambda_r}(X_ir); unbiased under uniform design."""
    if dataset.design != "uniform":
        raise ValueError(
            "empirical wavelet coefficients assume uniform design; "
            f"dataset has design {dataset.design!r}"
        )
    if len(lam_tuple) != dataset.d:
        raise ValueError("need one index pair per covariate axis")
    prod = dataset.Y.copy()
    for axis, lam in enumerate(lam_tuple):
        prod *= psi_lambda(spec, lam, dataset.X[:, axis])
    return float(prod.mean())


def quad_coeff(
    f0: Callable[[np.ndarray], np.ndarray],
    lam_tuple: Sequence[tuple[int, int]],
    spec: WaveletSpec,
    points_per_axis: int | None = None,
) -> float:
    """Tensor midpoint quadrature of int f0(x) prod_r psi_{lambda_r}(x_r) dx on [0,1]^d.

    d <= 3 uses a deterministic midpoint rule restricted to the support box
    (2^12 points per axis for d <= 2, 2^8 for d = 3).  d >= 4 falls back to
    quasi-random Monte Carlo over the support box and warns with the standard
    error of the estimate.
    """
    d = len(lam_tuple)
    if d >= 4:
        return _mc_coeff(f0, lam_tuple, spec)
    if points_per_axis is None:
        points_per_axis = MIDPOINTS_2D if d <= 2 else MIDPOINTS_3D
    h = 1.0 / points_per_axis
    axes = []
    weights = []
    for lam in lam_tuple:
        mids = (np.arange(points_per_axis) + 0.5) * h
        lo, hi = _support(spec, lam)
        live = (mids > lo) & (mids < hi) & (mids > 0.0) & (mids < 1.0)
        mids = mids[live]
        axes.append(mids)
        weights.append(psi_lambda(spec, lam, mids))
    if any(a.size == 0 for a in axes):
        return 0.0
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    w = weights[0]
    for wa in weights[1:]:
        w = np.multiply.outer(w, wa)
    vals = np.asarray(f0(pts), dtype=np.float64).reshape(w.shape)
    return float((vals * w).sum() * h**d)


def _mc_coeff(f0, lam_tuple, spec) -> float:
    from scipy.stats import qmc

    d = len(lam_tuple)
    boxes = [_support(spec, lam) for lam in lam_tuple]
    lo = np.array([max(b[0], 0.0) for b in boxes])
    hi = np.array([min(b[1], 1.0) for b in boxes])
    if np.any(hi <= lo):
        return 0.0
    vol = float(np.prod(hi - lo))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        pts = qmc.Sobol(d=d, scramble=False).random(MC_POINTS)
    pts = lo + pts * (hi - lo)
    vals = np.asarray(f0(pts), dtype=np.float64)
    for axis, lam in enumerate(lam_tuple):
        vals = vals * psi_lambda(spec, lam, pts[:, axis])
    est = vol * float(vals.mean())
    se = vol * float(vals.std(ddof=1) / math.sqrt(MC_POINTS))
    warnings.warn(
        f"quad_coeff: d = {d} >= 4, using quasi-Monte-Carlo fallback (se ~ {se:.3e})",
        RuntimeWarning,
        stacklevel=2,
    )
    return est


def wavelet_estimate(
    dataset: RegressionDataset,
    index_set: Sequence[tuple[tuple[int, int], ...]],
    spec: WaveletSpec,
) -> Callable[[np.ndarray], np.ndarray]:
    """The series estimator x -> sum_{lambda in I} d_hat_lambda prod_r psi_{lambda_r}(x_r)."""
    index_set = [tuple(lam) for lam in index_set]
    coeffs = [empirical_coeff(dataset, lam, spec) for lam in index_set]

    def estimator(x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.zeros(x.shape[0])
        for lam_tuple, c in zip(index_set, coeffs):
            if c == 0.0:
                continue
            term = np.full(x.shape[0], c)
            for axis, lam in enumerate(lam_tuple):
                term = term * psi_lambda(spec, lam, x[:, axis])
            out += term
        return out

    return estimator


def _axis_basis(spec: WaveletSpec, J: int) -> list[tuple[int, int]]:
    """Scaling level plus wavelet levels 0..J restricted to [0,1] (q = 0 layout)."""
    basis = [(-1, 0)]
    for j in range(J + 1):
        basis += [(j, k) for k in range(2**j)]
    return basis


def level_index_set(d: int, J: int, spec: WaveletSpec) -> list[tuple[tuple[int, int], ...]]:
    """All d-fold tensor indices with per-axis resolution at most J."""
    return list(itertools.product(_axis_basis(spec, J), repeat=d))


def balanced_level(n: int, alpha: float, d: int) -> int:
    """Truncation level balancing squared bias 2^(-2 alpha J) against variance 2^((J+1)d)/n.

    Minimizes the deterministic proxy of the two terms (unit constants), which
    scales as n^(-2 alpha / (2 alpha + d)) like the classical floor rule but
    avoids its variance spikes right after level transitions.
    """
    best_j, best = 0, math.inf
    for j in range(0, max(1, int(math.log2(max(n, 2))))):
        proxy = 2.0 ** ((j + 1) * d) / n + 2.0 ** (-2 * alpha * j)
        if proxy < best:
            best_j, best = j, proxy
    return best_j


def fit_wavelet_truncated(
    dataset: RegressionDataset, J: int, spec: WaveletSpec | None = None
) -> tuple[Callable[[np.ndarray], np.ndarray], int]:
    """Level-J truncated estimator via per-axis design matrices; returns (f_hat, |I|).

    Fast path for d <= 3 (einsum contractions); falls back to the generic
    estimator beyond that.
    """
    spec = spec or haar()
    if dataset.design != "uniform":
        raise ValueError("the truncated estimator assumes uniform design")
    d = dataset.d
    basis = _axis_basis(spec, J)
    if d > 3:
        index_set = level_index_set(d, J, spec)
        return wavelet_estimate(dataset, index_set, spec), len(index_set)
    mats = [
        np.stack([psi_lambda(spec, lam, dataset.X[:, axis]) for lam in basis], axis=1)
        for axis in range(d)
    ]
    n = dataset.n
    if d == 1:
        C = np.einsum("i,ia->a", dataset.Y, mats[0]) / n
    elif d == 2:
        C = np.einsum("i,ia,ib->ab", dataset.Y, mats[0], mats[1]) / n
    else:
        C = np.einsum("i,ia,ib,ic->abc", dataset.Y, mats[0], mats[1], mats[2]) / n

    def estimator(x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        qmats = [
            np.stack([psi_lambda(spec, lam, x[:, axis]) for lam in basis], axis=1)
            for axis in range(d)
        ]
        if d == 1:
            return np.einsum("a,ia->i", C, qmats[0])
        if d == 2:
            return np.einsum("ab,ia,ib->i", C, qmats[0], qmats[1])
        return np.einsum("abc,ia,ib,ic->i", C, qmats[0], qmats[1], qmats[2])

    return estimator, len(basis) ** d


# ---------------------------------------------------------------------------
# The additive ridge counterexample family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleFn:
    """f(x) = h(x_1 + ... + x_d) with h the scaled periodic power profile."""

    j: int
    alpha: float
    K: float
    d: int
    spec: WaveletSpec

    def __post_init__(self):
        nu = self.spec.nu(self.d)
        if not (0 < self.alpha <= self.spec.r):
            raise ValueError(
                f"alpha = {self.alpha} outside (0, r] with r = {self.spec.r} "
                "(the lattice-coefficient identity extends only to the first non-vanishing moment)"
            )
        if self.j < self.spec.q + nu:
            raise ValueError(f"need j >= q + nu = {self.spec.q + nu}")

    @property
    def power(self) -> int:
        # mu0 = 0 forces the d*r-power profile; otherwise the r-power profile works
        return self.d * self.spec.r if self.spec.mu0 == 0.0 else self.spec.r

    def g(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        p = self.power
        return np.where(u <= 0.5, u**p, (1.0 - u) ** p) / p

    def h(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        scale = 2.0 ** (self.j - self.spec.q - self.spec.nu(self.d))
        frac = np.mod(u * scale, 1.0)
        return self.K * 2.0 ** (-self.j * self.alpha - 1) * self.g(frac)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self.h(x.sum(axis=1))

    def lattice_tuples(self) -> list[tuple[tuple[int, int], ...]]:
        """The index tuples ((j, 2^(q+nu) p_1), ..., (j, 2^(q+nu) p_d)) sharing one coefficient."""
        nu = self.spec.nu(self.d)
        step = 2 ** (self.spec.q + nu)
        count = 2 ** (self.j - self.spec.q - nu)
        return [
            tuple((self.j, step * p) for p in ps)
            for ps in itertools.product(range(count), repeat=self.d)
        ]


def build_counterexample(j: int, alpha: float, K: float, d: int, spec: WaveletSpec | None = None) -> CounterexampleFn:
    """The hard additive function whose lattice coefficients are flat and slowly decaying."""
    return CounterexampleFn(j=j, alpha=alpha, K=K, d=d, spec=spec or haar())


def lattice_coefficient(j: int, alpha: float, K: float, d: int, spec: WaveletSpec | None = None) -> float:
    """Closed-form coefficient of the counterexample at every level-j lattice tuple.

    mu0 != 0:  d r^-1 2^(-qr - nu r - 1) K mu0^(d-1) mu_r 2^(-j(2 alpha + d)/2)
    mu0  = 0:  C(dr, r) (dr)^-1 2^(-dqr - d nu r - 1) K mu_r^d 2^(-j(2 alpha + d)/2)
    """
    spec = spec or haar()
    nu = spec.nu(d)
    r = spec.r
    decay = 2.0 ** (-0.5 * j * (2 * alpha + d))
    if spec.mu0 != 0.0:
        pref = d / r * 2.0 ** (-spec.q * r - nu * r - 1) * spec.mu0 ** (d - 1) * spec.mu_r
    else:
        pref = (
            math.comb(d * r, r)
            / (d * r)
            * 2.0 ** (-d * spec.q * r - d * nu * r - 1)
            * spec.mu_r**d
        )
    return pref * K * decay


def lattice_size(j: int, d: int, spec: WaveletSpec | None = None) -> int:
    spec = spec or haar()
    return 2 ** ((j - spec.q - spec.nu(d)) * d)


def risk_floor(coefficients: Mapping, n: int) -> float:
    """sum_lambda min(1/n, d_lambda^2): the estimator-independent risk floor."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(sum(min(1.0 / n, c * c) for c in coefficients.values()))


def wavelet_rate_experiment(
    f0,
    d: int,
    n_grid: Sequence[int],
    alpha: float,
    replications: int,
    seed: int = 0,
    mc_points: int = 4096,
    noise_sd: float = 1.0,
    spec: WaveletSpec | None = None,
):
    """Risk-vs-n sweep for the level-balanced truncated estimator; mirrors rate_experiment.

    Output rows use the simulate schema with s_final = |I| so neural and
    wavelet slope reports are directly comparable.
    """
    from .regression import SlopeReport, empirical_risk, estimate_prediction_risk, loglog_slope, sample_dataset

    spec = spec or haar()
    ns = [int(n) for n in n_grid]
    if len(ns) < 4 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_grid must be increasing with at least 4 points")
    rows = []
    for i, n in enumerate(ns):
        for rep in range(replications):
            ss = np.random.SeedSequence(entropy=seed, spawn_key=(i, rep))
            data_seed, mc_seed = (int(s) for s in ss.generate_state(2))
            dataset = sample_dataset(f0, n, d, noise_sd=noise_sd, seed=data_seed)
            J = balanced_level(n, alpha, d)
            estimator, n_coeffs = fit_wavelet_truncated(dataset, J, spec)
            pred, se = estimate_prediction_risk(estimator, f0, d, mc_points, seed=mc_seed)
            rows.append(
                {
                    "n": n,
                    "replication": rep,
                    "empirical_risk": empirical_risk(estimator, dataset),
                    "pred_risk": pred,
                    "pred_risk_se": se,
                    "s_final": n_coeffs,
                    "seed": data_seed,
                }
            )
    means = [float(np.mean([r["pred_risk"] for r in rows if r["n"] == n])) for n in ns]
    degenerate = any(not np.isfinite(v) or v <= 1e-12 for v in means)
    if degenerate:
        slope, slope_se = float("nan"), float("nan")
    else:
        slope, slope_se = loglog_slope(ns, means)
    return SlopeReport(tuple(ns), tuple(means), slope, slope_se, None, degenerate, 0, tuple(rows))


def counterexample_floor(
    n: int, alpha: float, K: float, d: int, spec: WaveletSpec | None = None
) -> tuple[float, int]:
    """Risk floor of the family member tuned to n, with the chosen level j*.

    j* is the largest integer with c^2 K^2 2^(-j(2 alpha + d)) >= 1/n, so the
    lattice coefficients still clear the 1/n variance floor; the floor is then
    (lattice size)/n.
    """
    spec = spec or haar()
    c0 = lattice_coefficient(0, alpha, K, d, spec)
    j_star = int(math.floor(math.log2(n * c0 * c0) / (2 * alpha + d)))
    min_j = spec.q + spec.nu(d)
    if j_star < min_j:
        raise ValueError(
            f"n = {n} too small for this family (j* = {j_star} < q + nu = {min_j}); increase K"
        )
    coeff = lattice_coefficient(j_star, alpha, K, d, spec)
    floor = lattice_size(j_star, d, spec) * min(1.0 / n, coeff * coeff)
    return floor, j_star
