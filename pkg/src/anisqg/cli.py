"""Batch command-line entry point.

Exit codes: 0 every verdict passed, 1 some verdict failed, 2 bad config or
arguments, 3 runtime or numerical error, 4 file I/O error.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import inequalities as ineq
from .analysis import DecaySeries, compare_to_theory, fit_decay_rate
from .config import coerce, load_config, resolve
from .errors import AnisqgError, ConfigError, PreconditionViolated
from .linear import ProfileKind, QuadratureSpec, SpectrumProfile, two_sided_bound_check
from .outputs import SeedSplitter, read_csv, write_csv, write_json, write_manifest
from .solver import (DEFAULT_LP_TOL, Scheme, SolverConfig, difference_run, energy_identity_residual, evolve,
                     lp_monotonicity_check)
from .spectral import GridSpec, random_band_limited
from .theory import (DecayQuery, DissipationParams, critical_exponent, decay_exponent,
                     difference_exponent, difference_exponent_l2only, region_threshold,
                     regularity_region, small_data_sobolev_index)

EXIT_PASS, EXIT_VERDICT, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3, 4

DEFAULT_TOLS = {
    "linear-decay": 0.02,
    "splitting": 1e-6,
    "fit": 0.02,
    "simulate": 1e-6,
}


def _pairs(cfg):
    return [DissipationParams(a, b) for a, b in itertools.product(cfg["alpha"], cfg["beta"])]


def _single(cfg):
    pairs = _pairs(cfg)
    if len(pairs) != 1:
        raise ConfigError("this command takes a single alpha and beta")
    return pairs[0]


def _table(out: Path, stem: str, rows: list, fmt: str) -> Path:
    if fmt == "json":
        return write_json(out / f"{stem}.json", rows)
    names = list(rows[0]) if rows else []
    return write_csv(out / f"{stem}.csv", [(k, [r[k] for r in rows]) for k in names])


def _opt(fn, *args):
    try:
        return fn(*args)
    except PreconditionViolated:
        return float("nan")


# -- commands: each returns (verdicts, output paths) ---------------------------------

def cmd_rates(cfg, out):
    rows = []
    for params in _pairs(cfg):
        verdict = regularity_region(params)
        note = "" if verdict.admissible else "small data only"
        for s, p in itertools.product(cfg["s_list"], cfg["p_list"]):
            a, b = params.alpha, params.beta
            rows.append({
                "alpha": a, "beta": b, "s": s, "p": p,
                "admissible": int(verdict.admissible), "branch": verdict.branch.value, "note": note,
                "decay_exponent": decay_exponent(params, DecayQuery(s, p)),
                "difference_exponent": difference_exponent(params, p) if p < 2 else float("nan"),
                "difference_exponent_l2only": _opt(difference_exponent_l2only, params),
                "critical_exponent": critical_exponent(s, p) if a == b == 0.5 else float("nan"),
                "small_data_index": small_data_sobolev_index(params),
            })
    return [], [_table(out, "rates", rows, cfg["format"])]


def cmd_region(cfg, out):
    rows = []
    for params in _pairs(cfg):
        v = regularity_region(params)
        rows.append({"alpha": params.alpha, "beta": params.beta, "admissible": int(v.admissible),
                     "branch": v.branch.value, "threshold": region_threshold(params.alpha)})
    return [], [_table(out, "region", rows, cfg["format"])]


def _torus_setup(cfg, stream):
    params = _single(cfg)
    grid = GridSpec(cfg["n1"], cfg["n2"], cfg["l1"], cfg["l2"])
    seed = SeedSplitter(cfg["seed"]).integer_seed(stream)
    theta0 = random_band_limited(seed, grid, (cfg["band_lo"], cfg["band_hi"]), cfg["spectrum_slope"],
                                 cfg["amplitude"])
    return params, grid, theta0


def cmd_simulate(cfg, out):
    params, grid, theta0 = _torus_setup(cfg, "initial_data")
    p_list = tuple(sorted(set(cfg["p_list"]) | {2.0, math.inf}))
    scfg = SolverConfig.uniform_samples(params, grid, cfg["dt"], cfg["t_end"], cfg["sample_count"],
                                        scheme=cfg["scheme"], p_list=p_list, s_list=cfg["s_list"],
                                        adaptive_cfl=cfg["adaptive_cfl"])
    traj = evolve(theta0, scfg)
    resid = float(np.max(energy_identity_residual(traj)))
    tol = cfg["tol"] if cfg["tol"] is not None else DEFAULT_TOLS["simulate"]
    e0 = traj.l2_norms[0] ** 2
    verdicts = [
        {"check": "energy_identity", "value": resid, "threshold": tol, "pass": resid <= tol},
        {"check": "l2_per_step_increase", "value": traj.max_energy_increase / e0 if e0 else 0.0,
         "threshold": 1e-10, "pass": traj.max_energy_increase <= 1e-10 * e0},
    ]
    for p in p_list:
        if p == 2.0:
            continue
        r = lp_monotonicity_check(traj, p)
        verdicts.append({"check": f"lp_ratio_{p:g}", "value": r, "threshold": 1 + DEFAULT_LP_TOL,
                         "pass": r <= 1 + DEFAULT_LP_TOL})
    return verdicts, [_table(out, "trajectory", _rows(traj.columns()), cfg["format"])]


def _rows(columns):
    names = [n for n, _ in columns]
    return [dict(zip(names, vals)) for vals in zip(*[c for _, c in columns])]


def cmd_difference(cfg, out):
    params, grid, theta0 = _torus_setup(cfg, "initial_data")
    scfg = SolverConfig.uniform_samples(params, grid, cfg["dt"], cfg["t_end"], cfg["sample_count"],
                                        scheme=cfg["scheme"])
    series, report = difference_run(theta0, scfg)
    rows = _rows([("t", series.times), ("w_l2", series.w_norms), ("theta_l2", series.theta_norms),
                  ("linear_l2", series.linear_norms)])
    verdict = {"check": "duhamel_fourier_bound", "violations": report.violations,
               "checked": report.checked, "q_tol": report.q_tol, "time_error": report.time_error,
               "worst_ratio": report.worst_ratio, "pass": report.passed}
    return [verdict], [_table(out, "difference", rows, cfg["format"])]


def _profile(cfg):
    return SpectrumProfile(cfg["profile"], R=cfg["R"], sigma=cfg["sigma"], R1=cfg["R1"], R2=cfg["R2"],
                           r_inner=cfg["r_inner"])


def cmd_linear_decay(cfg, out):
    profile = _profile(cfg)
    q = QuadratureSpec(rel_tol=cfg["quad_rel_tol"])
    tol = cfg["tol"] if cfg["tol"] is not None else DEFAULT_TOLS["linear-decay"]
    times = np.geomspace(cfg["t_lo"], cfg["t_hi"], cfg["t_count"])
    verdicts, paths = [], []
    for params in _pairs(cfg):
        for s in cfg["s_list"]:
            rep = two_sided_bound_check(profile, params, s, times, tol, q, cfg["jobs"],
                                        window=(cfg["t_lo"], cfg["t_hi"]))
            stem = f"linear_a{params.alpha:g}_b{params.beta:g}_s{s:g}"
            rows = _rows([("t", rep.times), ("norm", rep.norms), ("est_error", rep.errors)])
            paths.append(_table(out, stem, rows, cfg["format"]))
            verdicts.append(rep.to_json())
    return verdicts, paths


def cmd_ineq(cfg, out):
    ids = [ineq.InequalityId(i) for i in cfg["ids"]]
    seeds = SeedSplitter(cfg["seed"])
    verdicts = []
    hard = [i for i in ids if i in ineq.CONSTANT_ONE_IDS]
    if hard:
        verdicts += ineq.constant_one_suite(cfg["samples"], cfg["n"], seeds.integer_seed("constant_one"), hard)
    params = _single(cfg) if any(i in ineq.EMPIRICAL_IDS for i in ids) else None
    for iid in ids:
        if iid in ineq.EMPIRICAL_IDS:
            verdicts.append(ineq.empirical_ratio_report(iid, cfg["samples"], params,
                                                        seeds.integer_seed(iid.value), cfg["n"]))
    return verdicts, []


def cmd_splitting(cfg, out):
    tol = cfg["tol"] if cfg["tol"] is not None else DEFAULT_TOLS["splitting"]
    rows = []
    for params in _pairs(cfg):
        for rho in cfg["rho_list"]:
            for m in (ineq.Moment.AREA, ineq.Moment.XI1_SQ, ineq.Moment.XI2_SQ):
                closed = ineq.splitting_moment(params, rho, m)
                quad, err = ineq.splitting_moment_quadrature(params, rho, m)
                rel = abs(closed - quad) / abs(closed)
                rows.append({"alpha": params.alpha, "beta": params.beta, "rho": rho, "moment": m.value,
                             "closed_form": closed, "quadrature": quad, "quad_error": err,
                             "rel_dev": rel, "pass": int(rel <= tol)})
    worst = max(r["rel_dev"] for r in rows)
    verdict = {"check": "splitting_closed_forms", "worst_rel_dev": worst, "threshold": tol,
               "cases": len(rows), "pass": worst <= tol}
    return [verdict], [_table(out, "splitting", rows, cfg["format"])]


def cmd_fit(cfg, out):
    if not cfg["series"]:
        raise ConfigError("fit needs a series file (positional argument or 'series' key)")
    if cfg["theory"] is None:
        raise ConfigError("fit needs a theory exponent (--theory or 'theory' key)")
    cols = read_csv(cfg["series"])
    column = cfg["column"] or next((c for c in cols if c != "t"), None)
    if "t" not in cols or column not in cols:
        raise ConfigError(f"series file needs columns 't' and {column!r}")
    series = DecaySeries.from_samples(cols["t"], cols[column], {"source": cfg["series"], "column": column})
    window = (cfg["t_lo"], cfg["t_hi"]) if cfg.get("_window") else None
    fit = fit_decay_rate(series, window)
    tol = cfg["tol"] if cfg["tol"] is not None else DEFAULT_TOLS["fit"]
    verdict = compare_to_theory(fit, cfg["theory"], tol, series.label)
    return [verdict.to_json()], []


def cmd_report(cfg, out):
    # every run directory below out holds one verdicts.json; the report's own lives at the top
    files = sorted(p for p in Path(out).rglob("verdicts.json") if p.parent != Path(out))
    entries = []
    for p in files:
        data = json.loads(p.read_text(encoding="utf-8"))
        entries.append({"file": str(p.relative_to(out)), "verdicts": len(data),
                        "pass": all(v.get("pass", False) for v in data)})
    summary = {"check": "report", "runs": len(entries), "failed": [e["file"] for e in entries if not e["pass"]],
               "pass": bool(entries) and all(e["pass"] for e in entries)}
    return [summary], [write_json(Path(out) / "summary.json", {"runs": entries, **summary})]


COMMANDS = {
    "rates": cmd_rates,
    "region": cmd_region,
    "simulate": cmd_simulate,
    "linear-decay": cmd_linear_decay,
    "difference": cmd_difference,
    "ineq": cmd_ineq,
    "splitting": cmd_splitting,
    "fit": cmd_fit,
    "report": cmd_report,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"status": "error", "kind": "config", "message": message}), file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    parser = _Parser(prog="anisqg", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, help="output directory (default: out)")
    common.add_argument("--jobs", type=int)
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--tol", type=float)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "fit":
            sp.add_argument("series", nargs="?", help="CSV with a 't' column")
            sp.add_argument("--column")
            sp.add_argument("--theory", type=float)
            sp.add_argument("--window", type=float, nargs=2, metavar=("T_LO", "T_HI"))
        if name == "ineq":
            sp.add_argument("--ids", help="comma-separated inequality ids")
    return parser


def _settings(args):
    settings = load_config(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        settings[k.strip()] = coerce(k.strip(), v)
    flags = {"seed": args.seed, "out_dir": args.out and str(args.out), "jobs": args.jobs,
             "format": args.format, "tol": args.tol}
    if args.command == "fit":
        flags.update(series=args.series, column=args.column, theory=args.theory)
        if args.window:
            flags.update(t_lo=args.window[0], t_hi=args.window[1])
    if args.command == "ineq" and args.ids:
        flags["ids"] = coerce("ids", args.ids)
    settings.update({k: v for k, v in flags.items() if v is not None})
    cfg = resolve(settings)
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    if cfg["jobs"] < 1:
        raise ConfigError("jobs must be >= 1")
    _validate(cfg)
    cfg["_window"] = args.command == "fit" and ("t_lo" in settings or "t_hi" in settings)
    return cfg


def _validate(cfg):
    checks = [
        ("ids", lambda v: [ineq.InequalityId(i) for i in v]),
        ("profile", ProfileKind),
        ("scheme", Scheme),
        ("alpha", lambda v: [DissipationParams(a, 1.0) for a in v]),
        ("beta", lambda v: [DissipationParams(1.0, b) for b in v]),
    ]
    for key, check in checks:
        try:
            check(cfg[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _settings(args)
        out = Path(cfg["out_dir"])
        verdicts, paths = COMMANDS[args.command](cfg, out)
        verdict_path = write_json(out / "verdicts.json", verdicts) if args.command != "report" else None
        public = {k: v for k, v in cfg.items() if not k.startswith("_")}
        write_manifest(out, args.command, public, [p for p in [*paths, verdict_path] if p])
    except ConfigError as exc:
        print(json.dumps({"status": "error", "kind": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(json.dumps({"status": "error", "kind": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_IO
    except (AnisqgError, ArithmeticError, ValueError) as exc:
        print(json.dumps({"status": "error", "kind": "runtime", "type": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return EXIT_RUNTIME
    failures = [v for v in verdicts if not v.get("pass", False)]
    if failures:
        write_json(out / "failures.json", failures)
        print(json.dumps({"status": "fail", "failures": failures}, default=str), file=sys.stderr)
        return EXIT_VERDICT
    print(json.dumps({"status": "pass", "command": args.command, "verdicts": len(verdicts), "out": str(out)}))
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
