"""Blasius self-similar profile: shooting, tabulation and base-flow evaluation.

The profile solves ``f''' + f f'' = 0`` with ``f(0) = f'(0) = 0`` and
``f'(inf) = 1``.  With this normalization the Blasius solution of
``u u_x + v u_y = u_yy`` at downstream position ``x`` is

    u_bar = f'(eta),  v_bar = (eta f' - f) / sqrt(2 (x + x0)),  eta = y / sqrt(2 (x + x0))

and its stream function is ``psi = sqrt(2 (x + x0)) f(eta)``, so the stream
variable ``xi = psi / sqrt(2 (x + x0))`` equals ``f(eta)``.  The virtual
origin ``x0`` is fixed to 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.interpolate import CubicHermiteSpline

X0 = 1.0

BRACKET = (0.1, 1.0)


class ShootingError(RuntimeError):
    """Raised when the shooting bracket or a profile invariant fails."""


class DivergentGuess(ArithmeticError):
    """The IVP blew up (overflow / NaN) for the given wall curvature."""


@njit(cache=True)
def _rk4_blasius(fpp0, eta_max, h, store):
    n = int(round(eta_max / h))
    out = np.empty((3, n + 1 if store else 1))
    y0, y1, y2 = 0.0, 0.0, fpp0
    if store:
        out[0, 0] = y0
        out[1, 0] = y1
        out[2, 0] = y2
    for i in range(n):
        k10, k11, k12 = y1, y2, -y0 * y2
        a0, a1, a2 = y0 + 0.5 * h * k10, y1 + 0.5 * h * k11, y2 + 0.5 * h * k12
        k20, k21, k22 = a1, a2, -a0 * a2
        a0, a1, a2 = y0 + 0.5 * h * k20, y1 + 0.5 * h * k21, y2 + 0.5 * h * k22
        k30, k31, k32 = a1, a2, -a0 * a2
        a0, a1, a2 = y0 + h * k30, y1 + h * k31, y2 + h * k32
        k40, k41, k42 = a1, a2, -a0 * a2
        y0 += h / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
        y1 += h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        y2 += h / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        if store:
            out[0, i + 1] = y0
            out[1, i + 1] = y1
            out[2, i + 1] = y2
        if not (abs(y0) < 1e150 and abs(y1) < 1e150 and abs(y2) < 1e150):
            return out, False
    if not store:
        out[0, 0] = y0
        out[1, 0] = y1
        out[2, 0] = y2
    return out, True


def integrate_ivp(fpp0_guess: float, eta_max: float = 20.0, h: float = 1e-3):
    """Integrate ``(f, f', f'')' = (f', f'', -f f'')`` from ``(0, 0, fpp0_guess)``
    with classical RK4 on a uniform grid.

    Returns ``(eta, f, fp, fpp)``.  Raises :class:`DivergentGuess` on overflow.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if fpp0_guess < 0:
        raise ValueError("fpp0_guess must be nonnegative")
    traj, ok = _rk4_blasius(float(fpp0_guess), float(eta_max), float(h), True)
    if not ok:
        raise DivergentGuess(f"integration diverged for fpp0={fpp0_guess!r}")
    eta = np.arange(traj.shape[1]) * h
    return eta, traj[0], traj[1], traj[2]


def _fp_end(fpp0: float, eta_max: float, h: float) -> float:
    end, ok = _rk4_blasius(fpp0, eta_max, h, False)
    if not ok:
        return np.inf
    return end[1, 0]


def shoot(eta_max: float = 20.0, tol: float = 1e-10, h: float = 1e-3) -> float:
    """Find ``f''(0)`` with ``|f'(eta_max) - 1| <= tol`` by bisection.

    ``fpp0 -> f'(eta_max)`` is strictly increasing, so the bracket
    ``[0.1, 1.0]`` is bisected until the target is met or the bracket
    collapses to machine precision.
    """
    if tol < 100 * np.finfo(float).eps:
        raise ValueError(f"tol={tol} below 100 machine epsilon")
    lo, hi = BRACKET
    g_lo = _fp_end(lo, eta_max, h) - 1.0
    g_hi = _fp_end(hi, eta_max, h) - 1.0
    if not (g_lo < 0.0 < g_hi):
        raise ShootingError(
            f"bracket {BRACKET} does not straddle f'({eta_max})=1 "
            f"(residuals {g_lo:.3e}, {g_hi:.3e})"
        )
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = _fp_end(mid, eta_max, h) - 1.0
        if abs(g) <= tol:
            return mid
        if g < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2 * np.finfo(float).eps * hi:
            break
    g = _fp_end(mid, eta_max, h) - 1.0
    if abs(g) > tol:
        raise ShootingError(f"bisection stalled with |f'(eta_max)-1|={abs(g):.3e} > tol={tol}")
    return mid


@dataclass(frozen=True)
class BlasiusProfile:
    eta_grid: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    fpp0: float
    beta: float
    eta_max: float
    x0: float = X0
    tol: float = 1e-10
    _splines: tuple = field(default=(), repr=False, compare=False)

    @property
    def fppp(self) -> np.ndarray:
        return -self.f * self.fpp

    def eval(self, eta):
        """Return ``(f, f', f'', f''')`` at ``eta``; linear closure beyond ``eta_max``."""
        return evaluate(self, eta)


def build_profile(eta_max: float = 20.0, tol: float = 1e-10, h: float = 1e-3) -> BlasiusProfile:
    """Shoot, tabulate on the RK4 grid and validate every profile invariant."""
    fpp0 = shoot(eta_max, tol, h)
    eta, f, fp, fpp = integrate_ivp(fpp0, eta_max, h)
    beta = float(eta[-1] - f[-1])
    _check_invariants(eta, f, fp, fpp, tol)
    fppp = -f * fpp
    splines = (
        CubicHermiteSpline(eta, f, fp),
        CubicHermiteSpline(eta, fp, fpp),
        CubicHermiteSpline(eta, fpp, fppp),
        _inverse_spline(eta, f, fp, fpp0),
    )
    for arr in (eta, f, fp, fpp):
        arr.setflags(write=False)
    return BlasiusProfile(eta, f, fp, fpp, float(fpp0), beta, float(eta[-1]), X0, tol, splines)


def _check_invariants(eta, f, fp, fpp, tol):
    if f[0] != 0.0 or fp[0] != 0.0:
        raise ShootingError("wall values f(0)=f'(0)=0 violated")
    if abs(fp[-1] - 1.0) > tol:
        raise ShootingError(f"far-field f'(eta_max)=1 violated: {fp[-1]!r}")
    if np.any(fp < 0.0) or np.any(fp > 1.0 + tol) or np.any(np.diff(fp) < 0.0):
        raise ShootingError("0 <= f' <= 1 nondecreasing violated")
    if np.any(fpp <= 0.0) or np.any(np.diff(fpp) > 0.0):
        raise ShootingError("f'' > 0 nonincreasing violated")
    if np.any(np.diff(eta - f) < -64 * np.finfo(float).eps * eta[-1]):
        raise ShootingError("eta - f nondecreasing violated")


def _inverse_spline(eta, f, fp, fpp0):
    # eta as a function of s = sqrt(f) is smooth at the wall (eta ~ sqrt(2/fpp0) s)
    s = np.sqrt(f)
    deta_ds = np.empty_like(eta)
    deta_ds[0] = np.sqrt(2.0 / fpp0)
    deta_ds[1:] = 2.0 * s[1:] / fp[1:]
    keep = np.concatenate([[True], np.diff(s) > 0])
    return CubicHermiteSpline(s[keep], eta[keep], deta_ds[keep])


def evaluate(profile: BlasiusProfile, eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0.0):
        raise ValueError("eta must be nonnegative")
    sf, sfp, sfpp, _ = profile._splines
    inside = eta <= profile.eta_max
    e_in = np.where(inside, eta, 0.0)
    f = np.where(inside, sf(e_in), eta - profile.beta)
    fp = np.where(inside, sfp(e_in), 1.0)
    fpp = np.where(inside, sfpp(e_in), 0.0)
    fppp = -f * fpp
    if eta.ndim == 0:
        return float(f), float(fp), float(fpp), float(fppp)
    return f, fp, fpp, fppp


def similarity_scale(x, x0: float = X0):
    """``sqrt(2 (x + x0))``: the length scale with ``eta = y / scale``."""
    return np.sqrt(2.0 * (np.asarray(x, dtype=float) + x0))


def base_flow(profile: BlasiusProfile, x, y):
    """Blasius ``(u, v, u_y, u_yy, u_x)`` at physical ``(x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0.0) or np.any(y < 0.0):
        raise ValueError("x and y must be nonnegative")
    s = x + profile.x0
    d = similarity_scale(x, profile.x0)
    eta = y / d
    f, fp, fpp, fppp = evaluate(profile, eta)
    u = fp
    v = (eta * fp - f) / d
    u_y = fpp / d
    u_yy = fppp / (d * d)
    u_x = -0.5 * eta * fpp / s
    return u, v, u_y, u_yy, u_x


def map_eta_xi(profile: BlasiusProfile, x, eta):
    """Stream function and self-similar stream variable ``(psi, xi)`` at ``eta``."""
    f = evaluate(profile, eta)[0]
    return similarity_scale(x, profile.x0) * f, f


def eta_of_xi(profile: BlasiusProfile, xi):
    """Invert ``xi = f(eta)``; linear closure ``eta = xi + beta`` past the table."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0.0):
        raise ValueError("xi must be nonnegative")
    f_max = profile.f[-1]
    inside = xi <= f_max
    s = np.sqrt(np.where(inside, xi, 0.0))
    eta = profile._splines[3](s)
    # two Newton passes on f(eta) = xi polish the spline guess
    for _ in range(2):
        f, fp, _, _ = evaluate(profile, np.clip(eta, 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.where(fp > 1e-3, (f - np.where(inside, xi, 0.0)) / fp, 0.0)
        eta = np.clip(eta - corr, 0.0, None)
    eta = np.where(inside, eta, xi + profile.beta)
    if eta.ndim == 0:
        return float(eta)
    return eta


def wbar_of_xi(profile: BlasiusProfile, xi):
    """``u_bar^2`` as a function of ``xi = psi / sqrt(x + 1)``."""
    fp = evaluate(profile, eta_of_xi(profile, xi))[1]
    return fp * fp
