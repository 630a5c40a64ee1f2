"""Command line entry point: construct, certify, eval, simulate, wavelet, rates.

Exit codes: 0 success, 1 certificate-claim failure, 2 domain refusal (a
builder precondition), 64 usage or config error.  Every output file embeds
the config digest, the root seed and the tool version; identical config and
seed reproduce byte-identical CSV output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .certificates import (
    certificate_from_doc,
    certificate_to_doc,
    check_certificate,
    dyadic_grid,
    standard_grid,
)
from .composite import build_composite_net
from .holder import build_holder_net
from .network import NetworkFormatError, deserialize, evaluate_with_flags, serialize
from .primitives import RefusalError, build_hat, build_mon, build_mult, build_mult_r
from .rates import check_architecture_conditions, rate_profile
from .regression import FitHyper
from .targets import composition_spec_from_doc, named_target, resolve_reference
from .wavelets import haar, wavelet_rate_experiment

EXIT_OK = 0
EXIT_CLAIM = 1
EXIT_REFUSED = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# experiment regression targets (plain callables, by name)
# ---------------------------------------------------------------------------


def _family_zero(d):
    return lambda x: np.zeros(np.atleast_2d(x).shape[0])


def _family_linear(d):
    return lambda x: 0.8 * np.atleast_2d(x)[:, 0] - 0.3


def _family_additive_bump(d):
    def f(x):
        x = np.atleast_2d(x)
        return (x * (1 - x)).sum(axis=1) / d

    return f


def _family_ridge_abs(d):
    def f(x):
        u = np.atleast_2d(x).sum(axis=1)
        return np.abs(u - d / 2.0) - d / 4.0

    return f


FAMILIES = {
    "zero": _family_zero,
    "linear": _family_linear,
    "additive_bump": _family_additive_bump,
    "ridge_abs": _family_ridge_abs,
}


def load_config(path: str) -> tuple[dict, str]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config: file {path!r} does not exist")
    raw = p.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if p.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        cfg = tomllib.loads(raw.decode())
    else:
        try:
            cfg = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: not valid JSON ({exc})") from exc
    return cfg, digest


def _need(cfg: dict, field: str, kind=None):
    if field not in cfg:
        raise ConfigError(f"config: missing field {field!r}")
    value = cfg[field]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"config: field {field!r} has wrong type {type(value).__name__}")
    return value


def _resolve_family(cfg: dict):
    fam = _need(cfg, "family", dict)
    name = _need(fam, "name", str)
    d = int(_need(fam, "d", int))
    if name not in FAMILIES:
        raise ConfigError(f"config: family.name {name!r} unknown; known: {sorted(FAMILIES)}")
    return FAMILIES[name](d), d


def _write_csv(path: Path, rows, digest: str, seed: int):
    cols = ["n", "replication", "empirical_risk", "pred_risk", "pred_risk_se", "s_final", "seed"]
    lines = [f"# relucert {__version__} config_sha256={digest} seed={seed}", ",".join(cols)]
    for row in sorted(rows, key=lambda r: (r["n"], r["replication"])):
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols))
    path.write_text("\n".join(lines) + "\n")


def _provenance(digest: str, seed) -> dict:
    return {"tool_version": __version__, "config_sha256": digest, "seed": seed}


def _out_dir(args) -> Path:
    """--out flag, RELUCERT_OUT env var, then the working directory."""
    if args.out is not None:
        return Path(args.out)
    return Path(os.environ.get("RELUCERT_OUT", "."))


# ---------------------------------------------------------------------------
# construct
# ---------------------------------------------------------------------------


def _holder_target_from_args(args) -> tuple:
    spec = {}
    if args.target:
        path = Path(args.target)
        if path.exists():
            spec = json.loads(path.read_text())
        else:
            spec = {"name": args.target}
    name = spec.get("name")
    if name is None:
        raise ConfigError("config: holder target needs a 'name' (registry name or target spec file)")
    r = int(args.r if args.r is not None else spec.get("r", 1))
    beta = float(args.beta if args.beta is not None else spec.get("beta", 1.0))
    K = float(args.K if args.K is not None else spec.get("K", 1.0))
    return named_target(name, r, beta, K), name


def cmd_construct(args) -> int:
    out_dir = _out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.what == "mult":
        net, cert = build_mult(args.m)
        reference = resolve_reference(cert.target)
    elif args.what == "multr":
        net, cert = build_mult_r(args.m, args.r)
        reference = resolve_reference(cert.target)
    elif args.what == "mon":
        net, cert = build_mon(args.m, args.gamma, args.r)
        reference = resolve_reference(cert.target)
    elif args.what == "hat":
        net, cert = build_hat(args.M, args.m, args.r)
        reference = resolve_reference(cert.target)
    elif args.what == "holder":
        target, name = _holder_target_from_args(args)
        net, cert = build_holder_net(target, args.m, args.N)
        reference = target.value
    else:  # composite
        doc = json.loads(Path(args.spec).read_text())
        spec = composition_spec_from_doc(doc)
        n_levels = [int(x) for x in args.N_per_level.split(",")]
        net, cert = build_composite_net(spec, args.m, n_levels)
        import dataclasses

        cert = dataclasses.replace(cert, target={"kind": "composite", "spec": doc})
        reference = spec.truth
    grid = None
    if args.grid_step is not None:
        grid = _grid_from_step(net.input_dim, args.grid_step)
    elif net.input_dim > 3:
        grid = standard_grid(net.input_dim, 8)
    elif args.what == "composite" and net.input_dim > 1:
        grid = _grid_from_step(net.input_dim, 7)  # composite nets are large; keep the default grid modest
    report = check_certificate(net, cert, reference, grid=grid)
    name = args.what
    (out_dir / f"{name}.net.json").write_bytes(serialize(net) + b"\n")
    cert_doc = certificate_to_doc(cert, report)
    arg_digest = hashlib.sha256(
        json.dumps({k: v for k, v in vars(args).items() if k != "out"}, sort_keys=True, default=str).encode()
    ).hexdigest()
    cert_doc["provenance"] = _provenance(arg_digest, None)
    (out_dir / f"{name}.cert.json").write_text(json.dumps(cert_doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir / f'{name}.net.json'} and {out_dir / f'{name}.cert.json'}")
    print(
        f"depth={report.actual_depth} width={report.actual_width} s={report.actual_sparsity} "
        f"measured_error={report.measured_error:.6g} claimed={cert.claimed_sup_error:.6g}"
    )
    if not report.ok:
        print(f"certificate claims FAILED: {', '.join(report.failed_claims())}", file=sys.stderr)
        return EXIT_CLAIM
    return EXIT_OK


def _grid_from_step(r: int, k: int) -> np.ndarray:
    axis = dyadic_grid(k)
    if r == 1:
        return axis[:, None]
    if r <= 3:
        mesh = np.meshgrid(*([axis] * r), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)
    return standard_grid(r, 8)


def cmd_certify(args) -> int:
    try:
        net = deserialize(Path(args.net).read_bytes())
    except (OSError, NetworkFormatError) as exc:
        print(f"cannot load network: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        doc = json.loads(Path(args.cert).read_text())
        cert = certificate_from_doc(doc)
    except (OSError, ValueError) as exc:
        print(f"cannot load certificate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        reference = resolve_reference(cert.target)
    except ValueError as exc:
        print(f"cannot rebuild reference: {exc}", file=sys.stderr)
        return EXIT_USAGE
    grid = None
    if args.grid_step is not None or net.input_dim > 3:
        grid = _grid_from_step(net.input_dim, args.grid_step or 8)
    report = check_certificate(net, cert, reference, grid=grid)
    rows = [
        ("depth", cert.claimed_depth, report.actual_depth, report.depth_ok),
        ("width_bound", cert.claimed_width_bound, report.actual_width, report.width_ok),
        ("sparsity_bound", cert.claimed_sparsity_bound, report.actual_sparsity, report.sparsity_ok),
        ("sup_error_bound", cert.claimed_sup_error, report.measured_error, report.error_ok),
    ]
    print(f"{'claim':<16}{'claimed':>16}{'measured':>16}  ok")
    for label, claimed, measured, ok in rows:
        print(f"{label:<16}{claimed:>16.6g}{measured:>16.6g}  {'yes' if ok else 'NO'}")
    if not report.ok:
        print(f"failed claims: {', '.join(report.failed_claims())}", file=sys.stderr)
        return EXIT_CLAIM
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        net = deserialize(Path(args.net).read_bytes())
    except (OSError, NetworkFormatError) as exc:
        print(f"cannot load network: {exc}", file=sys.stderr)
        return EXIT_USAGE
    x = np.array([float(v) for v in args.x.split(",")])
    values, flags = evaluate_with_flags(net, x)
    print(json.dumps({"values": list(values), "sup_bound_exceeded": [bool(b) for b in flags]}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate / wavelet / rates
# ---------------------------------------------------------------------------


def _simulate_job(payload):
    (family_name, d, n, rep, seed, noise_sd, fit_cfg, mc_points) = payload
    from .regression import estimate_prediction_risk, fit_erm, sample_dataset
    from .network import count_active

    f0 = FAMILIES[family_name](d)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(n, rep))
    data_seed, fit_seed, mc_seed = (int(s) for s in ss.generate_state(3))
    dataset = sample_dataset(f0, n, d, noise_sd=noise_sd, seed=data_seed)
    arch, s_target, F, hyper = _recipe_from_cfg(fit_cfg, d, n)
    from dataclasses import replace

    fit = fit_erm(dataset, arch, s_target, F, replace(hyper, seed=fit_seed))
    pred, se = estimate_prediction_risk(fit.net, f0, d, mc_points, seed=mc_seed)
    return {
        "n": n,
        "replication": rep,
        "empirical_risk": fit.empirical_risk,
        "pred_risk": pred,
        "pred_risk_se": se,
        "s_final": count_active(fit.net).active_count,
        "seed": data_seed,
    }


def _recipe_from_cfg(fit_cfg: dict, d: int, n: int):
    depth = int(fit_cfg.get("depth", 3))
    width = int(fit_cfg.get("width", 16))
    widths = (d,) + (width,) * depth + (1,)
    capacity = sum((widths[l] + 1) * widths[l + 1] for l in range(len(widths) - 1)) - 1
    scale = float(fit_cfg.get("s_target_scale", 4.0))
    s_target = min(capacity, max(8, math.ceil(scale * n ** (1.0 / 3.0) * math.log(n))))
    F = float(fit_cfg.get("F", 2.0))
    hyper = FitHyper(
        restarts=int(fit_cfg.get("restarts", 2)),
        epochs=int(fit_cfg.get("epochs", 300)),
        step=float(fit_cfg.get("step", 0.25)),
    )
    return (depth, widths), s_target, F, hyper


def cmd_simulate(args) -> int:
    cfg, digest = load_config(args.config)
    f0, d = _resolve_family(cfg)
    n_grid = [int(n) for n in _need(cfg, "n_grid", list)]
    if len(n_grid) < 4:
        raise ConfigError("config: n_grid needs at least 4 points for a slope")
    replications = int(cfg.get("replications", 1))
    seed = int(cfg.get("seed", 0))
    noise_sd = float(cfg.get("noise_sd", 1.0))
    mc_points = int(cfg.get("mc_points", 2048))
    fit_cfg = cfg.get("fit", {})
    family_name = cfg["family"]["name"]
    jobs = [
        (family_name, d, n, rep, seed, noise_sd, fit_cfg, mc_points)
        for n in n_grid
        for rep in range(replications)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_simulate_job, jobs))
    else:
        rows = [_simulate_job(j) for j in jobs]
    rows.sort(key=lambda r: (r["n"], r["replication"]))
    out_dir = _out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "results.csv", rows, digest, seed)
    from .regression import loglog_slope

    means = [float(np.mean([r["pred_risk"] for r in rows if r["n"] == n])) for n in n_grid]
    degenerate = any(not np.isfinite(v) or v <= 1e-12 for v in means)
    slope, slope_se = (float("nan"), float("nan")) if degenerate else loglog_slope(n_grid, means)
    report = {
        "n_grid": n_grid,
        "mean_pred_risks": means,
        "slope": slope,
        "slope_se": slope_se,
        "degenerate": degenerate,
        "theory_exponent": cfg.get("theory_exponent"),
        "provenance": _provenance(digest, seed),
    }
    (out_dir / "slope_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir / 'results.csv'} and {out_dir / 'slope_report.json'}")
    print(f"slope = {slope:.4f} +- {slope_se:.4f}")
    return EXIT_OK


def cmd_wavelet(args) -> int:
    cfg, digest = load_config(args.config)
    f0, d = _resolve_family(cfg)
    n_grid = [int(n) for n in _need(cfg, "n_grid", list)]
    if len(n_grid) < 4:
        raise ConfigError("config: n_grid needs at least 4 points for a slope")
    replications = int(cfg.get("replications", 1))
    seed = int(cfg.get("seed", 0))
    report = wavelet_rate_experiment(
        f0,
        d,
        n_grid,
        alpha=float(cfg.get("alpha", 1.0)),
        replications=replications,
        seed=seed,
        mc_points=int(cfg.get("mc_points", 2048)),
        noise_sd=float(cfg.get("noise_sd", 1.0)),
        spec=haar(),
    )
    out_dir = _out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "results.csv", list(report.rows), digest, seed)
    doc = {
        "n_grid": list(report.n_grid),
        "mean_pred_risks": list(report.mean_risks),
        "slope": report.slope,
        "slope_se": report.slope_se,
        "degenerate": report.degenerate,
        "provenance": _provenance(digest, seed),
    }
    (out_dir / "slope_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir / 'results.csv'} and {out_dir / 'slope_report.json'}")
    print(f"slope = {report.slope:.4f} +- {report.slope_se:.4f}")
    return EXIT_OK


def cmd_rates(args) -> int:
    cfg, digest = load_config(args.config)
    beta = [float(b) for b in _need(cfg, "beta", list)]
    t = [int(x) for x in _need(cfg, "t", list)]
    n_grid = [int(n) for n in _need(cfg, "n_grid", list)]
    profile = rate_profile(beta, t)
    report = {
        "beta": beta,
        "t": t,
        "beta_star": list(profile.beta_star),
        "exponents": profile.exponents(),
        "phi": {str(n): profile.phi(n) for n in n_grid},
        "provenance": _provenance(digest, int(cfg.get("seed", 0))),
    }
    if "arch" in cfg:
        arch = cfg["arch"]
        K = float(cfg.get("K", 1.0))
        band = tuple(cfg.get("band", (0.25, 4.0)))
        checks = {}
        for n in n_grid:
            cr = check_architecture_conditions(
                int(_need(arch, "L", int)),
                [int(w) for w in _need(arch, "widths", list)],
                int(_need(arch, "s", int)),
                float(_need(arch, "F", (int, float))),
                profile,
                K,
                n,
                band,
            )
            checks[str(n)] = {"passed": cr.passed, "conditions": cr.conditions}
        report["architecture_conditions"] = checks
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rates_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'rates_report.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="relucert", description=__doc__)
    parser.add_argument("--version", action="version", version=f"relucert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a certified network")
    cs = c.add_subparsers(dest="what", required=True)
    p = cs.add_parser("mult")
    p.add_argument("--m", type=int, required=True)
    p = cs.add_parser("multr")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p = cs.add_parser("mon")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--r", type=int, required=True)
    p = cs.add_parser("hat")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p = cs.add_parser("holder")
    p.add_argument("--target", required=True, help="registry name or target spec file")
    p.add_argument("--beta", type=float)
    p.add_argument("--r", type=int)
    p.add_argument("--K", type=float)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p = cs.add_parser("composite")
    p.add_argument("--spec", required=True, help="composition spec JSON file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N-per-level", dest="N_per_level", required=True, help="comma-separated")
    for sp in cs.choices.values():
        sp.add_argument("--out", default=None)
        sp.add_argument("--grid-step", type=int, default=None, help="dyadic grid refinement 2^-k")

    p = sub.add_parser("certify", help="re-measure a certificate against its network")
    p.add_argument("net")
    p.add_argument("cert")
    p.add_argument("--grid-step", type=int, default=None)

    p = sub.add_parser("eval", help="evaluate a network document at a point")
    p.add_argument("net")
    p.add_argument("--x", required=True, help="comma-separated input coordinates")

    for name in ("simulate", "wavelet", "rates"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "construct": cmd_construct,
        "certify": cmd_certify,
        "eval": cmd_eval,
        "simulate": cmd_simulate,
        "wavelet": cmd_wavelet,
        "rates": cmd_rates,
    }
    try:
        return handlers[args.command](args)
    except RefusalError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_REFUSED
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError) as exc:
        print(f"config/usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
