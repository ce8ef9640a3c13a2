"""Independent reference computations used only by the tests.

None of these import the package's numerics: Blasius uses scipy's DOP853
with Brent root-finding, the heat norms use brute-force image quadrature,
tridiagonal systems go through LAPACK banded solves.
"""
import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import brentq


def _blasius_rhs(scale):
    # f''' + scale * f f'' = 0
    def rhs(_, y):
        return [y[1], y[2], -scale * y[0] * y[2]]

    return rhs


def blasius_shoot(eta_max=20.0, scale=1.0, rtol=1e-12):
    """``f''(0)`` with ``f'(eta_max) = 1`` for ``f''' + scale f f'' = 0``."""

    def miss(s):
        sol = solve_ivp(_blasius_rhs(scale), (0.0, eta_max), [0.0, 0.0, s], method="DOP853",
                        rtol=rtol, atol=1e-14)
        return sol.y[1, -1] - 1.0

    return brentq(miss, 0.1, 1.0, xtol=1e-15, rtol=1e-15)


def blasius_state(fpp0, eta, scale=1.0):
    """``(f, f', f'')`` at the sorted points ``eta``."""
    sol = solve_ivp(_blasius_rhs(scale), (0.0, float(eta[-1])), [0.0, 0.0, fpp0], method="DOP853",
                    rtol=1e-12, atol=1e-14, t_eval=eta)
    return sol.y


def blasius_displacement(fpp0, eta_max=20.0, scale=1.0):
    f, _, _ = blasius_state(fpp0, np.array([eta_max]), scale)
    return eta_max - f[-1]


def rk4_step_halving(eta_max=20.0, h=0.01, tol=1e-12):
    """Plain-python RK4 bisection, Richardson-extrapolated over one step halving."""

    def fp_end(s, hh):
        n = int(round(eta_max / hh))
        y = np.array([0.0, 0.0, s])

        def F(v):
            return np.array([v[1], v[2], -v[0] * v[2]])

        for _ in range(n):
            k1 = F(y)
            k2 = F(y + 0.5 * hh * k1)
            k3 = F(y + 0.5 * hh * k2)
            k4 = F(y + hh * k3)
            y = y + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y[1]

    def root(hh):
        lo, hi = 0.1, 1.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if fp_end(mid, hh) < 1.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    r1, r2 = root(h), root(h / 2)
    return r2 + (r2 - r1) / 15.0


def thomas_oracle(a, b, c, d):
    ab = np.zeros((3, len(b)))
    ab[0, 1:] = c[:-1]
    ab[1] = b
    ab[2, :-1] = a[1:]
    return solve_banded((1, 1), ab, d)


def heat_norm_quadrature(x, n_deriv, p, center=2.0, width=0.5, wall="reflecting"):
    """``||d_y^n h(x, .)||_{L^p(0, inf)}`` by kernel quadrature against ``h_0``.

    Derivatives by repeated finite differences of the quadrature solution.
    """
    sign = 1.0 if wall == "reflecting" else -1.0
    z = np.linspace(max(0.0, center - 10 * width), center + 10 * width, 2001)
    h0 = np.exp(-0.5 * ((z - center) / width) ** 2)
    L = center + 14.0 * np.sqrt(width**2 + 2 * x)
    y = np.linspace(0.0, L, 6001)
    K = lambda d: np.exp(-d * d / (4 * x)) / np.sqrt(4 * np.pi * x)
    h = np.trapezoid((K(y[:, None] - z[None, :]) + sign * K(y[:, None] + z[None, :])) * h0, z, axis=1)
    g = h
    for _ in range(n_deriv):
        g = np.gradient(g, y, edge_order=2)
    g = np.abs(g)
    if np.isinf(p):
        return g.max()
    return np.trapezoid(g**p, y) ** (1 / p)


def fine_trapezoid(fun, a, b, n):
    x = np.linspace(a, b, n)
    return np.trapezoid(fun(x), x)
