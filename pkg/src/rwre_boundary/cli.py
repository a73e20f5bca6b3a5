"""Batch command-line front end.

Subcommands: rate, exact, green, phase, simulate, validate.  Configuration
comes from a JSON file (--config) with flag overrides; the master seed is
split into per-task seeds by the documented counter scheme in _rng.  Every
record carries the resolved-config hash, the seed, the mode and a standard
error where applicable, and repeated runs with an identical config and seed
produce byte-identical JSON (the timestamp field aside).

Exit codes: 0 success, 2 validation failure, 3 resource limit exceeded,
4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, exact_kernel, phase_scan, rate_functions, stochastics
from .environment import DisorderSpec, EtaLaw, JumpLaw, validate_eta_law
from .errors import ConvergenceError, ResourceBudgetError, ValidationError
from .geometry import BoundaryPoint, Face, admissible_counts

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_CONVERGENCE = 4

_DEFAULTS = {
    "dimension": 4,
    "face": None,          # default: all +1
    "alpha": "uniform",    # or a list of 2d weights
    "eta": {"preset": "two_point"},
    "eps": 0.1,
    "eps_grid": None,
    "n": 8,
    "n_list": None,
    "theta": None,         # default: zeros(d-1)
    "delta": None,         # default: face minimizer weights
    "samples": 1000,
    "seed": 12345,
    "out": ".",
    "format": "json",
    "workers": 1,
    "budget_mb": 512.0,
    "plot": True,
    "quantity": "all",
    "terms_limit": 200,
    "fourier_r": 1.0,
    "fourier_grid": 24,
    "replicas": 10000,
    "record_paths": False,
    "cross_check": False,
}

_FLAG_KEYS = ("seed", "out", "format", "workers", "budget_mb", "eps", "n",
              "samples", "quantity", "terms_limit", "replicas")


def _resolve_config(args) -> dict:
    cfg = dict(_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "no_plot", False):
        cfg["plot"] = False
    if getattr(args, "cross_check", False):
        cfg["cross_check"] = True
    if getattr(args, "record_paths", False):
        cfg["record_paths"] = True
    return cfg


def _config_hash(cfg: dict) -> str:
    payload = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _build_model(cfg):
    d = int(cfg["dimension"])
    face = Face(tuple(cfg["face"]) if cfg["face"] else tuple([1] * d))
    if face.d != d:
        raise ValidationError("face length must equal dimension")
    alpha = JumpLaw.uniform(d) if cfg["alpha"] == "uniform" else JumpLaw(tuple(cfg["alpha"]))
    eta_cfg = cfg["eta"]
    if isinstance(eta_cfg, dict) and eta_cfg.get("preset") == "two_point":
        eta = EtaLaw.two_point(alpha, pattern=eta_cfg.get("pattern"))
    elif isinstance(eta_cfg, dict) and "support" in eta_cfg:
        if "weights" in eta_cfg:
            eta = EtaLaw(tuple(tuple(v) for v in eta_cfg["support"]),
                         tuple(eta_cfg["weights"]))
        else:
            eta = EtaLaw.uniform_discrete(np.asarray(eta_cfg["support"], dtype=float))
    else:
        raise ValidationError(f"unrecognized eta configuration: {eta_cfg!r}")
    report = validate_eta_law(eta, alpha)
    if not report.ok:
        raise ValidationError("eta law failed validation: " + "; ".join(report.messages))
    return face, alpha, eta


def _theta(cfg, d) -> np.ndarray:
    if cfg["theta"] is None:
        return np.zeros(d - 1)
    theta = np.asarray(cfg["theta"], dtype=float)
    if theta.shape != (d - 1,):
        raise ValidationError(f"theta must have {d - 1} components")
    return theta


def _boundary_point(cfg, face, alpha) -> BoundaryPoint:
    if cfg["delta"] is None:
        return rate_functions.face_minimizer(alpha, face).minimizer
    return BoundaryPoint(face, tuple(float(v) for v in cfg["delta"]))


def _record(cfg, seed=None, **fields) -> dict:
    base = {"config_hash": _config_hash(cfg), "seed": cfg["seed"] if seed is None else seed}
    base.update(fields)
    return base


def _warn_low_dimension(cfg, records):
    if int(cfg["dimension"]) < 4:
        records.append(_record(cfg, kind="warning",
                               message="equality diagnostics assume dimension >= 4"))


def _write_outputs(cfg, command: str, records: list, csv_blocks: dict | None = None):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    envelope = {
        "command": command,
        "version": __version__,
        "config_hash": _config_hash(cfg),
        "seed": cfg["seed"],
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "records": records,
    }
    (out / f"{command}.json").write_text(json.dumps(envelope, sort_keys=True, indent=2) + "\n")
    if csv_blocks:
        for name, text in csv_blocks.items():
            (out / name).write_text(text)
    if cfg["format"] == "csv" and records:
        keys = sorted({k for r in records for k in r})
        lines = [",".join(keys)]
        for r in records:
            lines.append(",".join(_csv_cell(r.get(k)) for k in keys))
        (out / f"{command}.csv").write_text("\n".join(lines) + "\n")
    return out


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return '"' + " ".join(str(v) for v in value) + '"'
    return str(value)


# ---------------------------------------------------------------------------
# subcommands


def cmd_rate(cfg) -> int:
    face, alpha, _ = _build_model(cfg)
    x = _boundary_point(cfg, face, alpha)
    summary = rate_functions.face_minimizer(alpha, face)
    records = [
        _record(cfg, kind="face_summary", mode="exact",
                min_value=summary.min_value,
                minimizer_delta=[float(v) for v in summary.minimizer.delta]),
        _record(cfg, kind="annealed_rate", mode="exact",
                delta=[float(v) for v in x.delta],
                value=rate_functions.annealed_rate_boundary(alpha, x)),
    ]
    tilt = rate_functions.legendre_sup(alpha, face, x)
    records.append(_record(
        cfg, kind="legendre_sup", mode="exact",
        value=tilt.value, attained=tilt.attained,
        theta=None if tilt.theta is None else [float(v) for v in tilt.theta]))
    out = _write_outputs(cfg, "rate", records)
    if cfg["plot"]:
        from . import figures

        figures.render_rate_figure(alpha, face, out / "rate.png")
    return EXIT_OK


def cmd_exact(cfg) -> int:
    face, alpha, eta = _build_model(cfg)
    spec = DisorderSpec(alpha, eta, float(cfg["eps"]))
    x = _boundary_point(cfg, face, alpha)
    n = int(cfg["n"])
    counts = admissible_counts(x, n)
    theta = _theta(cfg, face.d)
    seed = int(cfg["seed"])
    quantity = cfg["quantity"]
    wanted = ("annealed", "quenched", "partition", "second_moment", "dn",
              "dn_derivative") if quantity == "all" else (quantity,)
    records = []

    def maybe_oracle(kind, value, oracle_fn, with_theta=False):
        rec = _record(cfg, kind=kind, n=n, eps=spec.eps, mode="exact", log_value=value)
        if with_theta:
            rec["theta"] = [float(v) for v in theta]
        if cfg["cross_check"] and n <= 7:
            ref = oracle_fn()
            rec["oracle"] = "match" if abs(ref - value) <= 1e-9 else "mismatch"
            rec["oracle_value"] = ref
        return rec

    for q in wanted:
        if q == "annealed":
            records.append(_record(
                cfg, kind="annealed_prob", n=n, eps=0.0, mode="exact",
                counts=[int(c) for c in counts],
                log_value=exact_kernel.annealed_point_log_prob(alpha, face, counts)))
        elif q == "quenched":
            val = exact_kernel.quenched_point_log_prob(spec, seed, face, counts)
            records.append(maybe_oracle(
                "quenched_prob", val,
                lambda: exact_kernel.brute_force_quenched_point_log_prob(
                    spec, seed, face, counts)))
        elif q == "partition":
            val = exact_kernel.partition_function(spec, seed, face, theta, n)
            records.append(maybe_oracle(
                "partition", val,
                lambda: exact_kernel.brute_force_partition_function(
                    spec, seed, face, theta, n),
                with_theta=True))
        elif q == "second_moment":
            val = exact_kernel.second_moment_exact(spec, face, theta, n)
            records.append(_record(cfg, kind="second_moment", n=n, eps=spec.eps,
                                   mode="exact", theta=[float(v) for v in theta],
                                   log_value=float(np.log(val)), value=val))
        elif q == "dn":
            est = exact_kernel.dn_value(spec, face, counts, samples=int(cfg["samples"]),
                                        seed=seed)
            records.append(_record(cfg, kind="dn", n=n, eps=spec.eps, mode=est.mode,
                                   log_value=est.value, stderr=est.stderr,
                                   samples=est.samples))
        elif q == "dn_derivative":
            if spec.eps > 0:
                est = exact_kernel.dn_derivative(spec, face, counts,
                                                 samples=int(cfg["samples"]), seed=seed)
                records.append(_record(cfg, kind="derivative_pair", n=n, eps=spec.eps,
                                       mode=est.mode, log_value=est.value,
                                       stderr=est.stderr, samples=est.samples))
        else:
            raise ValidationError(f"unknown quantity {q!r}")
    _write_outputs(cfg, "exact", records)
    return EXIT_OK


def cmd_green(cfg) -> int:
    face, alpha, eta = _build_model(cfg)
    spec = DisorderSpec(alpha, eta, float(cfg["eps"]))
    theta = _theta(cfg, face.d)
    law = stochastics.tilted_law(alpha, face, theta)
    records = []
    _warn_low_dimension(cfg, records)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        green = stochastics.green_function(law, int(cfg["terms_limit"]),
                                           budget_mb=float(cfg["budget_mb"]))
    records.append(_record(
        cfg, kind="green", mode="exact", theta=[float(v) for v in theta],
        partial_sum=green.partial_sum, truncated_at=green.truncated_at,
        tail_estimate_heuristic=green.tail_estimate,
        divergence_warning=green.divergence_warning))
    records.append(_record(cfg, kind="l2_threshold", mode="exact",
                           value=1.0 / green.partial_sum,
                           note="disorder below this keeps the second moment bounded"))
    v_max = stochastics.max_collision_potential(spec, face)
    if v_max * green.partial_sum < 1.0:
        records.append(_record(cfg, kind="khasminskii", mode="exact", eps=spec.eps,
                               v_max=v_max,
                               bound=stochastics.khasminskii_bound(v_max, green.partial_sum)))
    else:
        records.append(_record(cfg, kind="khasminskii", mode="exact", eps=spec.eps,
                               v_max=v_max, bound=None, note="bound inapplicable: C*eta >= 1"))
    fourier = None
    if face.d >= 4:
        fourier = stochastics.fourier_bound(law, float(cfg["fourier_r"]),
                                            grid=int(cfg["fourier_grid"]))
        records.append(_record(cfg, kind="fourier_bound", mode="exact",
                               r=float(cfg["fourier_r"]), bound=fourier))
    terms_csv = "j,term,partial_sum\n" + "\n".join(
        f"{j},{repr(t)},{repr(float(s))}"
        for j, (t, s) in enumerate(zip(green.terms, np.cumsum(green.terms)))) + "\n"
    out = _write_outputs(cfg, "green", records, csv_blocks={"green_terms.csv": terms_csv})
    if cfg["plot"]:
        from . import figures

        figures.render_green_figure(green, out / "green.png", fourier=fourier)
    return EXIT_OK


def cmd_phase(cfg) -> int:
    face, alpha, eta = _build_model(cfg)
    x = _boundary_point(cfg, face, alpha)
    n_list = cfg["n_list"] or [2, 4, 8]
    eps_grid = cfg["eps_grid"]
    records = []
    _warn_low_dimension(cfg, records)
    result = phase_scan.scan(alpha, eta, x, n_list, eps_grid=eps_grid,
                             samples=int(cfg["samples"]), seed=int(cfg["seed"]),
                             workers=int(cfg["workers"]))
    bracket = phase_scan.estimate_eps_c(result)
    records.append(_record(
        cfg, kind="eps_c_bracket", mode="mc", n=bracket.n, tau=bracket.tau,
        eps_c_hat=bracket.eps_c_hat, lower=bracket.lower, upper=bracket.upper,
        crossing_detected=bracket.crossing_detected, label=bracket.label))
    grid = np.asarray(result.eps_grid)
    positive = grid[grid > 0]
    if len(positive) >= 2:
        lip = phase_scan.lipschitz_check(result, float(positive[-1]))
        records.append(_record(cfg, kind="lipschitz", mode="exact",
                               eps_prime=lip.eps_prime, c_hat=list(lip.c_hat),
                               c_analytic=lip.c_analytic, n_list=list(lip.n_list)))
    extrap = phase_scan.richardson_extrapolate(result)
    if extrap is not None:
        records.append(_record(cfg, kind="dn_extrapolation_heuristic", mode="mc",
                               values=[float(v) for v in extrap]))
    csv_blocks = {
        "phase.csv": phase_scan.scan_to_csv(result),
        "phase_long.csv": phase_scan.scan_to_long_csv(result),
        "phase_scan.json": phase_scan.scan_to_json(result) + "\n",
    }
    out = _write_outputs(cfg, "phase", records, csv_blocks=csv_blocks)
    if cfg["plot"]:
        from . import figures

        figures.render_phase_figure(result, out / "phase.png")
    return EXIT_OK


def cmd_simulate(cfg) -> int:
    face, alpha, eta = _build_model(cfg)
    spec = DisorderSpec(alpha, eta, float(cfg["eps"]))
    n = int(cfg["n"])
    replicas = int(cfg["replicas"])
    record_paths = bool(cfg["record_paths"]) and replicas <= 1000
    result = stochastics.simulate_walk(spec, int(cfg["seed"]), face, n,
                                       walk_seed=int(cfg["seed"]) + 1,
                                       replicas=replicas, record_paths=record_paths)
    rate = float(result.stayed_on_face.mean())
    stderr = float(np.sqrt(max(rate * (1 - rate), 1e-300) / replicas))
    records = [_record(
        cfg, kind="simulate_summary", n=n, eps=spec.eps, mode="mc",
        replicas=replicas, face_event_rate=rate, stderr=stderr,
        mean_projection=[float(v) for v in result.s_final.mean(axis=0)])]
    csv_blocks = {}
    if record_paths:
        lines = ["replica,step," + ",".join(f"x{i + 1}" for i in range(face.d))]
        for rep in range(replicas):
            for step in range(n + 1):
                coords = ",".join(str(int(v)) for v in result.paths[rep, step])
                lines.append(f"{rep},{step},{coords}")
        csv_blocks["trajectories.csv"] = "\n".join(lines) + "\n"
    _write_outputs(cfg, "simulate", records, csv_blocks=csv_blocks)
    return EXIT_OK


def cmd_validate(cfg) -> int:
    d = int(cfg["dimension"])
    face = Face(tuple(cfg["face"]) if cfg["face"] else tuple([1] * d))
    alpha = JumpLaw.uniform(d) if cfg["alpha"] == "uniform" else JumpLaw(tuple(cfg["alpha"]))
    eta_cfg = cfg["eta"]
    if isinstance(eta_cfg, dict) and eta_cfg.get("preset") == "two_point":
        eta = EtaLaw.two_point(alpha, pattern=eta_cfg.get("pattern"))
    else:
        eta = EtaLaw(tuple(tuple(v) for v in eta_cfg["support"]), tuple(eta_cfg["weights"]))
    report = validate_eta_law(eta, alpha)
    spec = DisorderSpec(alpha, eta, float(cfg["eps"]))
    records = [_record(
        cfg, kind="validation", mode="exact",
        support_not_singleton=report.support_not_singleton,
        mean_zero=report.mean_zero, envelope_member=report.envelope_member,
        messages=list(report.messages), ellipticity=spec.ellipticity,
        face=list(face.signs), ok=report.ok)]
    _write_outputs(cfg, "validate", records)
    return EXIT_OK if report.ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwre-boundary",
        description="large-deviation diagnostics for face-restricted walks "
                    "in random environments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("rate", "face minimum, rate values and exposing tilts"),
        ("exact", "exact path-sum kernels: point probabilities, partition "
                  "function, second moments, D_n and its derivative"),
        ("green", "collision Green function, Khas'minskii and Fourier bounds"),
        ("phase", "D_n(eps) sweep with eps_c bracketing"),
        ("simulate", "quenched trajectory simulation"),
        ("validate", "check the environment-law requirements"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=["json", "csv"])
        p.add_argument("--workers", type=int)
        p.add_argument("--budget-mb", dest="budget_mb", type=float)
        p.add_argument("--eps", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--no-plot", action="store_true")
        if name == "exact":
            p.add_argument("--quantity", choices=["all", "annealed", "quenched",
                                                  "partition", "second_moment",
                                                  "dn", "dn_derivative"])
            p.add_argument("--cross-check", dest="cross_check", action="store_true")
        if name == "green":
            p.add_argument("--terms-limit", dest="terms_limit", type=int)
        if name == "simulate":
            p.add_argument("--replicas", type=int)
            p.add_argument("--record-paths", dest="record_paths", action="store_true")
    return parser


_HANDLERS = {
    "rate": cmd_rate,
    "exact": cmd_exact,
    "green": cmd_green,
    "phase": cmd_phase,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        code = _HANDLERS[args.command](cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceBudgetError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return code


if __name__ == "__main__":
    sys.exit(main())
