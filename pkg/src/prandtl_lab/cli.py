"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical gate failure,
4 acceptance (verdict) failure.
"""
from __future__ import annotations

import argparse
import csv
import glob
import logging
import os
import sys

import numpy as np

from .blasius import ShootingError, build_profile
from .config import ConfigError, load_config
from .decay import (
    FitError,
    expected_exponent,
    fit_exponent,
    parse_field_id,
    read_series,
    verdict,
    write_verdicts,
)
from .positivity import audit
from .runner import (
    HEAT_TOL,
    GateFailure,
    heat_gate,
    orchestrate,
    profile_rows,
    read_manifest,
    write_csv,
)
from .vonmises import output_schedule

EXIT_OK, EXIT_CONFIG, EXIT_GATE, EXIT_ACCEPT = 0, 2, 3, 4
NASH_MAX_VARIATION = 10.0


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _sink(args, name):
    """Open ``--out/<name>`` or stdout."""
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        return open(os.path.join(args.out, name), "w", newline="")
    return sys.stdout


def cmd_blasius(args):
    try:
        prof = build_profile(eta_max=args.eta_max, tol=args.tol, h=args.h)
    except (ShootingError, ValueError) as exc:
        print(f"blasius: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_GATE
    fh = _sink(args, "blasius.csv")
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["eta", "f", "fp", "fpp", "fppp"])
    wr.writerows(profile_rows(prof))
    if fh is not sys.stdout:
        fh.close()
    summary = f"fpp0={prof.fpp0!r} beta={prof.beta!r}"
    print(summary, file=sys.stderr if fh is sys.stdout else sys.stdout)
    return EXIT_OK


def cmd_verify_omega(args):
    prof = build_profile(eta_max=args.eta_max)
    rep = audit(prof, tol=args.neg_tol)
    fh = _sink(args, "omega.csv")
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["eta", "omega", "domega", "neg_eta_fppp"])
    for r in zip(rep.grid, rep.omega_vals, rep.domega_vals, rep.neg_eta_fppp_vals):
        wr.writerow([repr(float(v)) for v in r])
    if fh is not sys.stdout:
        fh.close()
    stream = sys.stderr if fh is sys.stdout else sys.stdout
    if not args.quiet:
        print(
            f"min_omega={rep.min_omega!r} min_domega={rep.min_domega!r} "
            f"min_neg_eta_fppp={rep.min_neg_eta_fppp!r} identity_residual={rep.identity_residual_max!r} "
            f"{'PASS' if rep.passed else 'FAIL'}",
            file=stream,
        )
    return EXIT_OK if rep.passed else EXIT_GATE


def cmd_march(args):
    plan = load_config(args.plan or args.config)
    out = args.out or "runs"
    bundle = orchestrate(plan, out, write_stations=not args.no_stations)
    for line in bundle.summary:
        _say(args, line)
    _say(args, f"run_id={bundle.run_id} files={len(bundle.files)} out={out}")
    return EXIT_OK


def cmd_decay_fit(args):
    try:
        lo, hi = (float(v) for v in args.window.split(","))
    except ValueError:
        print("decay-fit: --window must be 'lo,hi'", file=sys.stderr)
        return EXIT_CONFIG
    try:
        series = read_series(args.ledger, args.field)
    except KeyError as exc:
        print(f"decay-fit: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        fld, a, b, p = parse_field_id(args.field)
        predicted = expected_exponent(a, b, p, fld) if fld in ("u", "v") else float("nan")
    except ValueError:
        predicted = float("nan")
    if args.predicted is not None:
        predicted = args.predicted
    try:
        fit = fit_exponent(series, (lo, hi), args.field, predicted, args.kappa)
    except FitError as exc:
        print(f"decay-fit: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"field={fit.field_id} window={lo:g},{hi:g} n={fit.n_points} slope={fit.slope:.6f} "
          f"stderr={fit.stderr:.6f} predicted={fit.predicted:.6f}")
    if np.isnan(predicted):
        return EXIT_OK
    v = verdict([fit], args.tol)[0]
    print("PASS" if v.passed else "FAIL")
    return EXIT_OK if v.passed else EXIT_ACCEPT


def cmd_heat_calibrate(args):
    plan = load_config(args.config)
    schedule = output_schedule(plan["x_start"], plan["x_end"], plan["output_per_decade"])
    _, verdicts = heat_gate(plan, schedule)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_verdicts(os.path.join(args.out, "heat_verdict.csv"), verdicts)
    for v in verdicts:
        _say(args, f"{v.fit.field_id}: slope={v.fit.slope:+.4f} predicted={v.fit.predicted:+.4f} "
                   f"tol={HEAT_TOL} {'PASS' if v.passed else 'FAIL'}")
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_GATE


def nash_summary(rows, x_end: float):
    """``(sup ratio, variation over the final two decades)`` from ledger rows."""
    xs = np.array([r["x"] for r in rows])
    ratios = np.array([r["nash_ratio"] for r in rows])
    tail = ratios[xs >= xs.max() / 100.0]
    if not np.all(np.isfinite(ratios)) or tail.min() <= 0.0:
        return float("inf"), float("inf")
    return float(ratios.max()), float(tail.max() / tail.min())


def cmd_nash_check(args):
    with open(args.ledger, newline="") as fh:
        rd = csv.DictReader(fh)
        if "nash_ratio" not in (rd.fieldnames or []):
            print("nash-check: not a ledger file", file=sys.stderr)
            return EXIT_CONFIG
        rows = [{k: float(v) for k, v in r.items()} for r in rd]
    if not rows:
        print("nash-check: empty ledger", file=sys.stderr)
        return EXIT_CONFIG
    sup, var = nash_summary(rows, rows[-1]["x"])
    ok = np.isfinite(sup) and var < NASH_MAX_VARIATION
    _say(args, f"nash sup ratio={sup:.6e} variation over final two decades={var:.4g} "
               f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_ACCEPT


def cmd_report(args):
    out = args.out or "runs"
    manifests = sorted(glob.glob(os.path.join(out, "manifest_*.txt")))
    if not manifests:
        print(f"report: no manifest under {out}", file=sys.stderr)
        return EXIT_CONFIG
    code = EXIT_OK
    for path in manifests:
        man = read_manifest(path)
        status = man["close"].get("status", "STALE (no close record)")
        _say(args, f"run {man['run_id']}: {status}; {len(man['files'])} files")
        if not man["closed"] or status != "ok":
            code = EXIT_ACCEPT
        verdict_file = os.path.join(out, f"verdict_{man['run_id']}.csv")
        if os.path.exists(verdict_file):
            with open(verdict_file, newline="") as fh:
                for r in csv.DictReader(fh):
                    _say(args, "  " + ", ".join(f"{k}={v}" for k, v in r.items()))
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="plan file of 'key = value' lines")
    common.add_argument("--out", help="output directory")
    common.add_argument("--quiet", action="store_true")

    ap = argparse.ArgumentParser(prog="prandtl-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("blasius", parents=[common], help="solve the Blasius profile")
    p.add_argument("--eta-max", type=float, default=20.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--h", type=float, default=1e-3)
    p.set_defaults(func=cmd_blasius)

    p = sub.add_parser("verify-omega", parents=[common], help="audit Omega >= 0 for Blasius")
    p.add_argument("--eta-max", type=float, default=20.0)
    p.add_argument("--neg-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify_omega)

    p = sub.add_parser("march", parents=[common], help="run the full staged experiment")
    p.add_argument("--plan", help="plan file (same format as --config)")
    p.add_argument("--no-stations", action="store_true", help="skip per-station CSV dumps")
    p.set_defaults(func=cmd_march)

    p = sub.add_parser("decay-fit", parents=[common], help="fit a log-log slope from a series CSV")
    p.add_argument("--ledger", required=True, help="CSV with an x column (norms or ledger file)")
    p.add_argument("--field", required=True, help="column, e.g. u_a0_b0_p2 or nash_ratio")
    p.add_argument("--window", default="100,10000")
    p.add_argument("--predicted", type=float, default=None)
    p.add_argument("--tol", type=float, default=0.10)
    p.add_argument("--kappa", type=float, default=0.0)
    p.set_defaults(func=cmd_decay_fit)

    p = sub.add_parser("heat-calibrate", parents=[common], help="heat-equation calibration gate")
    p.set_defaults(func=cmd_heat_calibrate)

    p = sub.add_parser("nash-check", parents=[common], help="Nash ratio summary from a ledger CSV")
    p.add_argument("--ledger", required=True)
    p.set_defaults(func=cmd_nash_check)

    p = sub.add_parser("report", parents=[common], help="summarize runs under --out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GateFailure as exc:
        print(f"gate failure: {exc}", file=sys.stderr)
        return EXIT_GATE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
