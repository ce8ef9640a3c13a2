"""Floating-point audit of the global nonnegativity of Omega for Blasius.

``Omega = -u_bar_yy + u_bar u_bar_x / 2`` reduces to a self-similar product:
``4 (x + x0) Omega = omega(eta) f''(eta)`` with ``omega = 2 f - eta f'``.
Since ``f'' > 0`` the sign question is the sign of ``omega``, which follows
from the ladder ``-eta f''' >= 0  =>  omega' = f' - eta f'' >= 0  =>  omega >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blasius import BlasiusProfile, base_flow, evaluate, similarity_scale

NEG_TOL = 1e-8
IDENTITY_TOL = 1e-8

# 4 (x + x0) Omega = omega f''  (the factor is 4 because eta = y / sqrt(2 (x + x0)))
IDENTITY_FACTOR = 4.0


def omega_ss(profile: BlasiusProfile, eta):
    f, fp, _, _ = evaluate(profile, eta)
    return 2.0 * f - np.asarray(eta) * fp


def domega(profile: BlasiusProfile, eta):
    _, fp, fpp, _ = evaluate(profile, eta)
    return fp - np.asarray(eta) * fpp


def neg_eta_fppp(profile: BlasiusProfile, eta):
    """``d/deta domega = -eta f'''``."""
    return -np.asarray(eta) * evaluate(profile, eta)[3]


def omega_physical(profile: BlasiusProfile, x, y):
    """``Omega(x, y) = -u_bar_yy + u_bar u_bar_x / 2`` from the base-flow derivatives."""
    u, _, _, u_yy, u_x = base_flow(profile, x, y)
    return -u_yy + 0.5 * u * u_x


def taylor_wall_checks(profile: BlasiusProfile) -> dict:
    """Wall derivatives from the differentiated ODE.

    ``f''' = -f f''``, ``f'''' = -f' f'' - f f'''`` and
    ``f^(5) = -f''^2 - 2 f' f''' - f f''''``, all evaluated at ``eta = 0``.
    """
    f0, f1, f2 = 0.0, 0.0, profile.fpp0
    f3 = -f0 * f2
    f4 = -f1 * f2 - f0 * f3
    f5 = -f2 * f2 - 2.0 * f1 * f3 - f0 * f4
    return {
        "fppp0": f3,
        "f4_0": f4,
        "f5_0": f5,
        "f5_plus_fpp0_sq": f5 + f2 * f2,
        # leading wall behaviour omega ~ c eta^5, c = f5 (2/5! - 1/4!) = fpp0^2 / 40
        "omega_eta5_coeff": f5 * (2.0 / 120.0 - 1.0 / 24.0),
    }


def audit_grid(eta_max: float, fine_to: float = 5.0, step: float = 1e-3, n_geom: int = 400):
    """Uniform on ``[0, fine_to]`` plus geometric on ``[fine_to, eta_max]``."""
    fine = np.arange(0.0, fine_to, step)
    tail = np.geomspace(fine_to, eta_max, n_geom)
    return np.concatenate([fine, tail])


@dataclass(frozen=True)
class PositivityReport:
    grid: np.ndarray
    omega_vals: np.ndarray
    domega_vals: np.ndarray
    neg_eta_fppp_vals: np.ndarray
    omega_phys_vals: np.ndarray
    min_omega: float
    min_domega: float
    min_neg_eta_fppp: float
    identity_residual_max: float
    wall_checks: dict
    tol: float = NEG_TOL

    @property
    def passed(self) -> bool:
        return (
            self.min_omega >= -self.tol
            and self.min_domega >= -self.tol
            and self.min_neg_eta_fppp >= -self.tol
            and self.identity_residual_max <= IDENTITY_TOL
            and self.wall_checks["fppp0"] == 0.0
            and self.wall_checks["f4_0"] == 0.0
        )

    def failures(self) -> list[str]:
        out = []
        if self.min_omega < -self.tol:
            out.append(f"min omega {self.min_omega:.3e}")
        if self.min_domega < -self.tol:
            out.append(f"min domega {self.min_domega:.3e}")
        if self.min_neg_eta_fppp < -self.tol:
            out.append(f"min -eta f''' {self.min_neg_eta_fppp:.3e}")
        if self.identity_residual_max > IDENTITY_TOL:
            out.append(f"identity residual {self.identity_residual_max:.3e}")
        if self.wall_checks["fppp0"] != 0.0 or self.wall_checks["f4_0"] != 0.0:
            out.append("wall derivatives nonzero")
        return out


def identity_residual(profile: BlasiusProfile, x, eta) -> np.ndarray:
    """``|4 (x + x0) Omega(x, y(eta)) - omega(eta) f''(eta)|`` on ``eta``."""
    y = np.asarray(eta) * similarity_scale(x, profile.x0)
    lhs = IDENTITY_FACTOR * (x + profile.x0) * omega_physical(profile, x, y)
    rhs = omega_ss(profile, eta) * evaluate(profile, eta)[2]
    return np.abs(lhs - rhs)


def audit(profile: BlasiusProfile, grid=None, xs=(1.0, 10.0, 100.0), x_ref: float = 1.0,
          tol: float = NEG_TOL) -> PositivityReport:
    if grid is None:
        grid = audit_grid(profile.eta_max)
    grid = np.asarray(grid, dtype=float)
    om = omega_ss(profile, grid)
    dom = domega(profile, grid)
    ladder = neg_eta_fppp(profile, grid)
    phys = omega_physical(profile, x_ref, grid * similarity_scale(x_ref, profile.x0))
    resid = max(float(identity_residual(profile, x, grid).max()) for x in xs)
    return PositivityReport(
        grid=grid,
        omega_vals=om,
        domega_vals=dom,
        neg_eta_fppp_vals=ladder,
        omega_phys_vals=phys,
        min_omega=float(om.min()),
        min_domega=float(dom.min()),
        min_neg_eta_fppp=float(ladder.min()),
        identity_residual_max=resid,
        wall_checks=taylor_wall_checks(profile),
        tol=tol,
    )
