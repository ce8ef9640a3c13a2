"""Localized perturbations of Blasius, decay-norm measurement and exponent fits.

Norm series are measured on recorded march histories and fitted by ordinary
least squares in log-log.  The heat-equation oracle produces the same series
for ``h_x = h_yy`` from closed-form kernels and calibrates the whole
measurement/fit pipeline independently of the Prandtl solver.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_hermite

from .blasius import BlasiusProfile, base_flow, similarity_scale
from .vonmises import Station, three_point_weights, wbar

SUPPORTED_P = (1, 2, np.inf)
KINDS = ("blasius", "bump", "heat-calibration")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class InitialDataSpec:
    kind: str = "bump"
    eps: float = 0.05
    center: float = 2.0
    width: float = 0.5
    moment_free: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial_data.kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.eps <= 0.1:
            raise ValueError(f"initial_data.eps={self.eps} outside [0, 0.1]")
        if self.width <= 0.0 or self.center <= 0.0:
            raise ValueError("initial_data.center and width must be positive")
        if self.kind == "bump" and self.center - self.width < 0.05 * self.center:
            raise ValueError("bump support reaches xi <= 0.05 * center (wall compatibility)")


def bump_profile(xi, center: float, width: float):
    """``C^inf`` bump ``exp(1 - 1/(1 - z^2))``, ``z = (xi - center)/width``, peak 1."""
    xi = np.asarray(xi, dtype=float)
    z = (xi - center) / width
    out = np.zeros_like(xi)
    m = np.abs(z) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - z[m] ** 2))
    return out


def _shape(spec: InitialDataSpec, xi):
    b = bump_profile(xi, spec.center, spec.width)
    if spec.moment_free:
        # equal and opposite bump just outboard: zero mean in xi
        b = b - bump_profile(xi, spec.center + 2.0 * spec.width, spec.width)
    return b


def make_initial_data(spec: InitialDataSpec, profile: BlasiusProfile, x_start: float):
    """Callable ``psi -> w0(psi)``.

    ``kind="bump"`` gives ``w_bar (1 + eps B(xi))``; ``"blasius"`` gives ``w_bar``.
    """
    if spec.kind == "heat-calibration":
        raise ValueError("heat-calibration data drives heat_oracle_run, not the march")
    scale = float(similarity_scale(x_start, profile.x0))

    def w0(psi):
        w = wbar(profile, x_start, psi)
        if spec.kind == "blasius" or spec.eps == 0.0:
            return w
        return w * (1.0 + spec.eps * _shape(spec, np.asarray(psi) / scale))

    return w0


def expected_exponent(alpha: int, beta: int, p, field: str = "u") -> float:
    """Decay exponent of ``||d_x^alpha d_y^beta (u - u_bar)||_{L^p_y}`` (or ``v``)."""
    if alpha not in (0, 1) or beta not in (0, 1):
        raise ValueError("only alpha, beta in {0, 1} are supported")
    if p not in SUPPORTED_P:
        raise ValueError(f"p must be one of {SUPPORTED_P}")
    inv = 0.0 if np.isinf(p) else 1.0 / (2.0 * p)
    if field == "u":
        return -0.5 + inv - alpha - beta / 2.0
    if field == "v":
        return -1.0 + inv - alpha - beta / 2.0
    raise ValueError(f"field must be 'u' or 'v', got {field!r}")


def field_id(field: str, alpha: int, beta: int, p) -> str:
    return f"{field}_a{alpha}_b{beta}_p{'inf' if np.isinf(p) else int(p)}"


def parse_field_id(fid: str):
    try:
        field, a, b, p = fid.split("_")
        pv = np.inf if p[1:] == "inf" else int(p[1:])
        return field, int(a[1:]), int(b[1:]), pv
    except (ValueError, IndexError) as exc:
        raise ValueError(f"bad field id {fid!r}; expected e.g. u_a0_b1_p2") from exc


def lp_norm(y, g, p) -> float:
    g = np.abs(g)
    if np.isinf(p):
        return float(g.max())
    return float(np.trapezoid(g**p, y) ** (1.0 / p))


class _Base:
    """Blasius reference as functions of physical ``y`` at a station's x."""

    def __init__(self, profile: BlasiusProfile, x: float, reference: Station | None):
        self.profile, self.x, self.ref = profile, x, reference

    def u(self, y):
        if self.ref is None:
            return base_flow(self.profile, self.x, y)[0]
        return self._clip(self.ref.u_of_y, y, 1.0)

    def u_y(self, y):
        if self.ref is None:
            return base_flow(self.profile, self.x, y)[2]
        return self._clip(self.ref.u_of_y.derivative(), y, 0.0)

    def psi(self, y):
        if self.ref is None:
            d = similarity_scale(self.x, self.profile.x0)
            f = self.profile.eval(np.asarray(y) / d)[0]
            return d * f
        yt = self.ref.y[-1]
        inside = self.ref.psi_of_y(np.minimum(y, yt))
        return np.where(y <= yt, inside, self.ref.grid.nodes[-1] + (y - yt))

    @staticmethod
    def _clip(spline, y, far):
        yt = spline.x[-1]
        return np.where(y <= yt, spline(np.minimum(y, yt)), far)


def _pert_u(st: Station, y, deriv: int):
    yt = st.y[-1]
    sp = st.u_of_y if deriv == 0 else st.u_of_y.derivative()
    return np.where(y <= yt, sp(np.minimum(y, yt)), 1.0 if deriv == 0 else 0.0)


def _pert_psi(st: Station, y):
    yt = st.y[-1]
    return np.where(y <= yt, st.psi_of_y(np.minimum(y, yt)), st.grid.nodes[-1] + (y - yt))


def _difference(st, base, y, field, beta):
    if field == "u":
        return _pert_u(st, y, beta) - (base.u(y) if beta == 0 else base.u_y(y))
    # v - v_bar = -d/dx (psi - psi_bar) at fixed y; the x derivative is applied by the caller
    if beta != 0:
        raise ValueError("v - v_bar is measured for beta = 0 only")
    return -(_pert_psi(st, y) - base.psi(y))


def _rho(st: Station, profile: BlasiusProfile, ref: Station | None):
    """``rho = phi / (u + u_bar)`` at equal ``psi`` (zero at the wall)."""
    if ref is None:
        wb = wbar(profile, st.x, st.grid.nodes)
        ub = np.sqrt(wb)
    else:
        wb, ub = ref.w, ref.u
    den = st.u + ub
    out = np.zeros_like(den)
    m = den > 0.0
    out[m] = (st.w - wb)[m] / den[m]
    return out


def _psi_frame(st: Station, profile: BlasiusProfile, ref, beta: int):
    rho = _rho(st, profile, ref)
    if beta == 0:
        return rho
    # d_y = u d_psi; at the wall u d_psi rho stays bounded since rho ~ psi^(1/2)
    return st.u * st.grid.d1(rho)


def measure_norms(history, profile: BlasiusProfile, alpha: int, beta: int, p, field: str = "u",
                  references=None, gamma: float = 0.0, frame: str = "psi") -> np.ndarray:
    """Series ``(x, ||d_x^alpha d_y^beta (q - q_bar) <eta>^gamma||_{L^p_y})``, ``q`` = ``u`` or ``v``.

    ``frame="psi"`` compares at equal stream function: ``u - u_bar = rho =
    phi/(u + u_bar)``, ``d_y = u d_psi``, and the ``y`` measure is the node
    heights ``int dpsi / u``.  ``frame="y"`` compares at equal physical height
    through Hermite interpolants in ``y``.  ``v - v_bar = -d_x (psi - psi_bar)``
    at fixed ``y`` in both frames.  ``d_x`` uses the three-point stencil over
    recorded stations, so end stations are skipped whenever it is needed.
    ``references`` (a Blasius march on the same grid and schedule) replaces
    the analytic profile as ``q_bar``, cancelling the solver's own error.
    """
    if field not in ("u", "v"):
        raise ValueError("field must be 'u' or 'v'")
    if frame not in ("psi", "y"):
        raise ValueError("frame must be 'psi' or 'y'")
    expected_exponent(alpha, beta, p, field)
    n_dx = alpha + (1 if field == "v" else 0)
    if n_dx > 1:
        raise ValueError("at most one x derivative (alpha = 0 for v)")

    def diff(k, y):
        st = history[k]
        ref = references[k] if references is not None else None
        if field == "u" and frame == "psi":
            return _psi_frame(st, profile, ref, beta)
        return _difference(st, _Base(profile, st.x, ref), y, field, beta)

    out = []
    for i, st in enumerate(history):
        if n_dx and (i == 0 or i == len(history) - 1):
            continue
        y = st.y
        if n_dx == 0:
            g = diff(i, y)
        else:
            ks = (i - 1, i, i + 1)
            c = three_point_weights(*(history[k].x for k in ks), st.x)
            if field == "u" and frame == "psi":
                # equal-psi differences on a shared grid: the stencil acts at fixed psi
                g = sum(ck * diff(k, None) for ck, k in zip(c, ks))
            else:
                g = sum(ck * diff(k, y) for ck, k in zip(c, ks))
        if gamma:
            eta = y / similarity_scale(st.x, profile.x0)
            g = g * (1.0 + eta**2) ** (gamma / 2.0)
        out.append((st.x, lp_norm(y, g, p)))
    return np.array(out)


def eventually_monotone(series, x_from: float) -> bool:
    """True if the series is nonincreasing for ``x >= x_from``."""
    s = np.asarray(series)
    v = s[s[:, 0] >= x_from, 1]
    return bool(np.all(np.diff(v) <= 0.0))


@dataclass(frozen=True)
class DecayFit:
    field_id: str
    window: tuple
    slope: float
    stderr: float
    predicted: float
    kappa_slack: float
    n_points: int
    intercept: float = 0.0


def fit_exponent(series, window, field_id: str = "", predicted: float = float("nan"),
                 kappa: float = 0.0, min_points: int = 12, min_decades: float = 1.5) -> DecayFit:
    """OLS slope of ``log(value)`` on ``log(x)`` for ``x`` in ``window``."""
    series = np.asarray(series, dtype=float)
    lo, hi = window
    if np.log10(hi / lo) < min_decades - 1e-12:
        raise FitError(f"window [{lo}, {hi}] spans fewer than {min_decades} decades")
    m = (series[:, 0] >= lo * (1 - 1e-12)) & (series[:, 0] <= hi * (1 + 1e-12))
    xs, vs = series[m, 0], series[m, 1]
    if xs.size < min_points:
        raise FitError(f"only {xs.size} points in window, need {min_points}")
    if np.any(vs <= 0.0) or not np.all(np.isfinite(vs)):
        raise FitError("nonpositive or non-finite values in fit window")
    X = np.log(xs)
    Y = np.log(vs)
    Xc = X - X.mean()
    slope = float(np.dot(Xc, Y - Y.mean()) / np.dot(Xc, Xc))
    intercept = float(Y.mean() - slope * X.mean())
    resid = Y - (intercept + slope * X)
    dof = max(xs.size - 2, 1)
    stderr = float(np.sqrt(np.dot(resid, resid) / dof / np.dot(Xc, Xc)))
    return DecayFit(field_id, (float(lo), float(hi)), slope, stderr, float(predicted), float(kappa),
                    int(xs.size), intercept)


def heat_solution_norms(x_values, alpha: int, beta: int, p, center: float = 2.0, width: float = 0.5,
                        wall: str = "reflecting", n_y: int = 4001) -> np.ndarray:
    """``||d_x^alpha d_y^beta h(x, .)||_{L^p(y>0)}`` for ``h_x = h_yy`` on ``y > 0``.

    ``h(0, y)`` is a Gaussian of std ``width`` centred at ``center``.  The wall
    is handled by images: even extension for ``"reflecting"`` (zero flux, mass
    conserved), odd extension for ``"absorbing"`` (``h = 0``).  Each image
    spreads to a Gaussian of variance ``width^2 + 2x``, and since
    ``d_x = d_y^2`` the derivatives are Hermite functions:
    ``d_y^n exp(-q^2) = (-1)^n s^-n H_n(q) exp(-q^2)`` with ``q = (y - c)/s``.
    """
    if wall not in ("reflecting", "absorbing"):
        raise ValueError("wall must be 'reflecting' or 'absorbing'")
    sign = 1.0 if wall == "reflecting" else -1.0
    n = beta + 2 * alpha
    out = []
    for x in np.asarray(x_values, dtype=float):
        sigma = np.sqrt(width**2 + 2.0 * x)
        s = np.sqrt(2.0) * sigma
        y = np.linspace(0.0, center + 14.0 * sigma, n_y)
        total = np.zeros_like(y)
        for weight, c in ((1.0, center), (sign, -center)):
            q = (y - c) / s
            total += weight * (-1.0) ** n * s ** (-n) * eval_hermite(n, q) * np.exp(-q * q)
        out.append((x, lp_norm(y, (width / sigma) * total, p)))
    return np.array(out)


def heat_oracle_run(spec: InitialDataSpec, x_values, combos=None, wall: str = "reflecting") -> dict:
    """Norm series of the heat solution for every ``(alpha, beta, p)`` in ``combos``."""
    if combos is None:
        combos = [(a, b, p) for (a, b) in ((0, 0), (0, 1), (1, 0)) for p in SUPPORTED_P]
    return {
        field_id("h", a, b, p): heat_solution_norms(x_values, a, b, p, spec.center, spec.width, wall)
        for a, b, p in combos
    }


def heat_exponent(alpha: int, beta: int, p) -> float:
    """Heat-equation rate ``-1/2 + 1/(2p) - alpha - beta/2``."""
    return expected_exponent(alpha, beta, p, "u")


@dataclass(frozen=True)
class Verdict:
    fit: DecayFit
    tol: float
    passed: bool


def verdict(fits, tol) -> list[Verdict]:
    """PASS iff ``|slope - predicted| <= tol + kappa_slack`` (``tol`` scalar or per field)."""
    out = []
    for fit in fits:
        t = tol[fit.field_id] if isinstance(tol, dict) else float(tol)
        ok = bool(np.isfinite(fit.slope) and abs(fit.slope - fit.predicted) <= t + fit.kappa_slack)
        out.append(Verdict(fit, t, ok))
    return out


def similarity_normalized(series, alpha: int, beta: int, p, field: str = "u", x0: float = 1.0) -> np.ndarray:
    """Divide norms by those of a unit-amplitude self-similar error.

    A profile ``g(y / d)`` with ``d = sqrt(2 (x + x0))`` has
    ``||d_x^alpha d_y^beta g||_{L^p_y} ~ d^(1/p - beta) (x + x0)^(-alpha)``;
    ``v`` carries one more factor ``1/d``.
    """
    s = np.array(series, dtype=float)
    d = similarity_scale(s[:, 0], x0)
    inv = 0.0 if np.isinf(p) else 1.0 / p
    k = inv - beta - (1.0 if field == "v" else 0.0)
    s[:, 1] = s[:, 1] / (d**k * (s[:, 0] + x0) ** (-alpha))
    return s


def noise_floor_verdict(series, floor: float = 1e-6) -> bool:
    """Vacuous pass for Blasius runs: every value (normalized if needed) under the floor."""
    return bool(np.all(np.asarray(series)[:, 1] <= floor))


VERDICT_HEADER = ["field", "alpha", "beta", "p", "slope", "stderr", "predicted", "kappa", "pass"]


def write_verdicts(path, verdicts) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(VERDICT_HEADER)
        for v in verdicts:
            f = v.fit
            field, a, b, p = parse_field_id(f.field_id)
            wr.writerow([field, a, b, "inf" if np.isinf(p) else p, f"{f.slope:.6f}", f"{f.stderr:.6f}",
                         f"{f.predicted:.6f}", f"{f.kappa_slack:.6f}", "PASS" if v.passed else "FAIL"])


def write_series(path, series_by_id: dict) -> None:
    """Write aligned norm series as CSV ``x,<field ids...>``; missing entries blank."""
    xs = sorted({float(x) for s in series_by_id.values() for x in np.asarray(s)[:, 0]})
    cols = list(series_by_id)
    lookup = {k: {float(x): float(v) for x, v in np.asarray(s)} for k, s in series_by_id.items()}
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x"] + cols)
        for x in xs:
            wr.writerow([repr(x)] + [repr(lookup[k][x]) if x in lookup[k] else "" for k in cols])


def read_series(path, column: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if column not in (rd.fieldnames or []):
            raise KeyError(f"column {column!r} not in {path}")
        rows = [(float(r["x"]), float(r[column])) for r in rd if r[column] not in ("", None)]
    return np.array(rows)
