"""Staged orchestration: profile, Omega audit, heat gate, march, ledgers, fits, verdict."""
from __future__ import annotations

import csv
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .blasius import build_profile, evaluate
from .config import Plan
from .decay import (
    SUPPORTED_P,
    FitError,
    expected_exponent,
    field_id,
    fit_exponent,
    heat_exponent,
    heat_oracle_run,
    make_initial_data,
    measure_norms,
    noise_floor_verdict,
    parse_field_id,
    similarity_normalized,
    verdict,
    write_series,
    write_verdicts,
)
from .functionals import ledger, phi_field, write_ledger
from .positivity import audit
from .vonmises import PsiGrid, init_station, march, output_schedule

log = logging.getLogger(__name__)

HEAT_TOL = 0.03
NOISE_FLOOR = 1e-6
DERIV_ORDERS = ((0, 0), (0, 1), (1, 0))


class GateFailure(RuntimeError):
    """A numerical gate failed; ``stage`` names where."""

    def __init__(self, stage: str, detail: str):
        super().__init__(f"[{stage}] {detail}")
        self.stage = stage


@dataclass
class ReportBundle:
    run_id: str
    out_dir: str
    files: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def decay_fields():
    """``(field, alpha, beta, p)`` of the measured sweep.

    ``v - v_bar`` tends to a nonzero constant above the layer, so only its
    sup norm is finite and it is measured for ``p = inf`` only.
    """
    out = [("u", a, b, p) for a, b in DERIV_ORDERS for p in SUPPORTED_P]
    out.append(("v", 0, 0, np.inf))
    return out


def field_tol(fid: str) -> float:
    return 0.10 if fid.startswith("u_a0_b0") else 0.15


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def profile_rows(profile):
    f, fp, fpp, fppp = evaluate(profile, profile.eta_grid)
    return [[repr(float(v)) for v in r] for r in zip(profile.eta_grid, f, fp, fpp, fppp)]


def station_name(run_id: str, x: float) -> str:
    return f"station_{run_id}_{x:.6e}.csv"


class Manifest:
    """Text manifest, rewritten after every stage; a run is complete only once closed."""

    def __init__(self, path, plan: Plan, run_id: str):
        self.path = path
        self.plan = plan
        self.run_id = run_id
        self.start = time.strftime("%Y-%m-%dT%H:%M:%S")
        self.files = []
        self.stages = []

    def add(self, name):
        self.files.append(name)
        self.flush()

    def stage(self, name):
        self.stages.append(name)
        self.flush()

    def flush(self, close: str | None = None):
        lines = [
            f"run_id = {self.run_id}",
            f"version = {__version__}",
            f"start = {self.start}",
            "[config]",
            self.plan.echo().rstrip("\n"),
            "[stages]",
            *self.stages,
            "[files]",
            *self.files,
        ]
        if close is not None:
            lines += ["[close]", f"end = {time.strftime('%Y-%m-%dT%H:%M:%S')}", f"status = {close}"]
        tmp = self.path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, self.path)


def read_manifest(path) -> dict:
    """Parse a manifest; ``closed`` is False for runs that never finished (stale artifacts)."""
    section, out = None, {"config": [], "stages": [], "files": [], "close": {}}
    with open(path) as fh:
        for line in fh.read().splitlines():
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                continue
            if section is None:
                k, v = line.split(" = ", 1)
                out[k] = v
            elif section == "close":
                k, v = line.split(" = ", 1)
                out["close"][k] = v
            else:
                out[section].append(line)
    out["closed"] = "status" in out["close"]
    return out


def heat_gate(plan: Plan, schedule, tol: float = HEAT_TOL):
    spec = plan.initial_data
    series = heat_oracle_run(spec, schedule[schedule > 0.0], wall=plan["heat_wall"])
    fits = []
    for fid, s in series.items():
        _, a, b, p = parse_field_id(fid)
        fits.append(fit_exponent(s, plan["fit_window"], fid, heat_exponent(a, b, p), plan["kappa"]))
    return series, verdict(fits, tol)


def orchestrate(plan: Plan, out_dir: str, write_stations: bool = True) -> ReportBundle:
    """Run every stage in order, writing CSVs and a manifest under ``out_dir``.

    Gate failures raise :class:`GateFailure` after the manifest records the
    failing stage; no fits are written after a failed heat gate.
    """
    os.makedirs(out_dir, exist_ok=True)
    run_id = plan.run_id()
    bundle = ReportBundle(run_id, out_dir)
    man = Manifest(os.path.join(out_dir, f"manifest_{run_id}.txt"), plan, run_id)
    man.flush()

    def emit(name):
        bundle.files.append(name)
        man.add(name)
        return os.path.join(out_dir, name)

    try:
        _run(plan, run_id, bundle, man, emit, write_stations)
    except GateFailure as exc:
        man.flush(close=f"gate-failure {exc.stage}")
        raise
    except Exception as exc:
        man.flush(close=f"error {type(exc).__name__}")
        raise
    man.flush(close="ok" if bundle.passed else "verdict-fail")
    return bundle


def _run(plan, run_id, bundle, man, emit, write_stations):
    x_start, x_end = plan["x_start"], plan["x_end"]
    schedule = output_schedule(x_start, x_end, plan["output_per_decade"])

    man.stage("blasius")
    try:
        profile = build_profile()
    except Exception as exc:
        raise GateFailure("blasius", str(exc)) from exc
    write_csv(emit(f"blasius_{run_id}.csv"), ["eta", "f", "fp", "fpp", "fppp"], profile_rows(profile))
    bundle.summary.append(f"fpp0={profile.fpp0:.10f} beta={profile.beta:.8f}")

    man.stage("verify-omega")
    rep = audit(profile)
    write_csv(
        emit(f"omega_{run_id}.csv"),
        ["eta", "omega", "domega", "neg_eta_fppp"],
        [[repr(float(v)) for v in r] for r in zip(rep.grid, rep.omega_vals, rep.domega_vals, rep.neg_eta_fppp_vals)],
    )
    bundle.summary.append(
        f"omega audit: min omega={rep.min_omega:.3e} min domega={rep.min_domega:.3e} "
        f"min -eta f'''={rep.min_neg_eta_fppp:.3e} identity residual={rep.identity_residual_max:.3e}"
    )
    if not rep.passed:
        raise GateFailure("verify-omega", "; ".join(rep.failures()))

    man.stage("heat-calibrate")
    heat_series, heat_verdicts = heat_gate(plan, schedule)
    write_series(emit(f"heat_{run_id}.csv"), heat_series)
    write_verdicts(emit(f"heat_verdict_{run_id}.csv"), heat_verdicts)
    bad = [v.fit.field_id for v in heat_verdicts if not v.passed]
    bundle.summary.append(f"heat gate: {len(heat_verdicts) - len(bad)}/{len(heat_verdicts)} within {HEAT_TOL}")
    if bad:
        raise GateFailure("heat-calibrate", f"fits off the heat rates: {', '.join(bad)}")
    if plan["initial_data.kind"] == "heat-calibration":
        bundle.verdicts = heat_verdicts
        return

    man.stage("march")
    grid = PsiGrid.for_run(plan["n_psi"], x_start, x_end, plan["xi_cover"], plan["psi_stretch"])
    cfg = plan.march_config
    spec = plan.initial_data
    perturbed = spec.kind == "bump" and spec.eps > 0.0
    t0 = time.time()
    start = init_station(profile, make_initial_data(spec, profile, x_start), x_start, grid)
    history = march(start, schedule, cfg)
    refs = None
    if perturbed:
        refs = march(init_station(profile, None, x_start, grid), schedule, cfg)
    log.info("march: %d stations in %.1fs", len(history), time.time() - t0)
    if write_stations:
        for i, st in enumerate(history):
            phi = phi_field(st, profile, refs[i] if refs is not None else None)
            rows = [[repr(float(v)) for v in r] for r in zip(st.grid.nodes, st.w, st.u, phi)]
            write_csv(emit(station_name(run_id, st.x)), ["psi", "w", "u", "phi"], rows)

    man.stage("ledgers")
    rows = ledger(history, profile, refs, eps=spec.eps)
    write_ledger(emit(f"ledger_{run_id}.csv"), rows)
    tail = [r for r in rows if r.x >= x_end / 100.0]
    ratios = np.array([r.nash_ratio for r in rows])
    if tail:
        var = max(r.nash_ratio for r in tail) / max(min(r.nash_ratio for r in tail), 1e-300)
        bundle.summary.append(f"nash: sup ratio={ratios.max():.4e} variation over final two decades={var:.3g}")

    man.stage("fits")
    series = {}
    for fld, a, b, p in decay_fields():
        series[field_id(fld, a, b, p)] = measure_norms(history, profile, a, b, p, fld, refs)
    write_series(emit(f"norms_{run_id}.csv"), series)
    fits, floor_ok = [], []
    for fid, s in series.items():
        fld, a, b, p = parse_field_id(fid)
        pred = expected_exponent(a, b, p, fld)
        if not perturbed:
            floor_ok.append((fid, noise_floor_verdict(similarity_normalized(s, a, b, p, fld), NOISE_FLOOR)))
            continue
        try:
            fits.append(fit_exponent(s, plan["fit_window"], fid, pred, plan["kappa"]))
        except FitError as exc:
            raise GateFailure("fits", f"{fid}: {exc}") from exc

    man.stage("verdict")
    if perturbed:
        bundle.verdicts = verdict(fits, {f.field_id: field_tol(f.field_id) for f in fits})
        write_verdicts(emit(f"verdict_{run_id}.csv"), bundle.verdicts)
        for v in bundle.verdicts:
            bundle.summary.append(
                f"{v.fit.field_id}: slope={v.fit.slope:+.4f} predicted={v.fit.predicted:+.4f} "
                f"{'PASS' if v.passed else 'FAIL'}"
            )
    else:
        write_csv(emit(f"verdict_{run_id}.csv"), ["field", "noise_floor", "pass"],
                  [[fid, NOISE_FLOOR, "PASS" if ok else "FAIL"] for fid, ok in floor_ok])
        bundle.verdicts = [_FloorVerdict(ok) for _, ok in floor_ok]
        bundle.summary.append(f"blasius run: noise floor {'PASS' if all(ok for _, ok in floor_ok) else 'FAIL'}")


@dataclass(frozen=True)
class _FloorVerdict:
    passed: bool
