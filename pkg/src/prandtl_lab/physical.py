"""Physical-variable Prandtl marcher, kept only as a cross-check on the von Mises march.

Solves ``u u_x + v u_y = u_yy`` with ``v = -int_0^y u_x dy'`` on a fixed
stretched y grid.  Each step is a theta scheme with coefficients ``u`` and
``v`` Picard-lagged at the half step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .blasius import BlasiusProfile, base_flow, similarity_scale
from .tridiag import solve_tridiag
from .vonmises import MAX_HALVINGS, MarchConfig, PicardFailure, Station


@dataclass(frozen=True)
class YGrid:
    nodes: np.ndarray

    @classmethod
    def for_run(cls, n: int, x_start: float, x_end: float, eta_cover: float = 10.0) -> "YGrid":
        """``y(s) = y_max * s * exp(k (s - 1))`` with ``s = 1/2`` at ``eta = eta_cover`` for ``x_start``."""
        y_max = eta_cover * float(similarity_scale(x_end))
        target = eta_cover * float(similarity_scale(x_start))
        k = max(0.0, 2.0 * np.log(0.5 * y_max / target))
        s = np.linspace(0.0, 1.0, n)
        y = y_max * s * np.exp(k * (s - 1.0))
        y[-1] = y_max
        return cls(y)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]


@dataclass(frozen=True)
class PhysicalStation:
    x: float
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray


def _stencils(y):
    hm = np.diff(y)[:-1]
    hp = np.diff(y)[1:]
    lo2 = 2.0 / (hm * (hm + hp))
    up2 = 2.0 / (hp * (hm + hp))
    lo1 = -hp / (hm * (hm + hp))
    mid1 = (hp - hm) / (hm * hp)
    up1 = hm / (hp * (hm + hp))
    return (lo1, mid1, up1), (lo2, -(lo2 + up2), up2)


def continuity_v(y, u_x):
    """``v(y) = -int_0^y u_x dy'`` by the trapezoid rule; ``v(0) = 0``."""
    return -cumulative_trapezoid(u_x, y, initial=0.0)


def _step(st: PhysicalStation, dx: float, config: MarchConfig, stencils) -> PhysicalStation:
    (l1, m1, p1), (l2, m2, p2) = stencils
    y, u = st.y, st.u
    theta = config.theta
    n = y.shape[0]
    du_old = l1 * u[:-2] + m1 * u[1:-1] + p1 * u[2:]
    d2u_old = l2 * u[:-2] + m2 * u[1:-1] + p2 * u[2:]
    u_new = u.copy()
    for _ in range(config.picard_max):
        U = 0.5 * (u + u_new)[1:-1]
        v_half = continuity_v(y, (u_new - u) / dx)
        V = v_half[1:-1]
        a = np.zeros(n)
        b = np.ones(n)
        c = np.zeros(n)
        a[1:-1] = theta * (V * l1 - l2)
        b[1:-1] = U / dx + theta * (V * m1 - m2)
        c[1:-1] = theta * (V * p1 - p2)
        d = np.empty(n)
        d[0], d[-1] = 0.0, 1.0
        d[1:-1] = U * u[1:-1] / dx - (1.0 - theta) * (V * du_old - d2u_old)
        nxt = solve_tridiag(a, b, c, d)
        change = np.max(np.abs(nxt - u_new))
        u_new = nxt
        if change <= config.picard_tol:
            break
    else:
        raise PicardFailure(f"physical march: Picard stalled at x={st.x}")
    v_new = continuity_v(y, (u_new - u) / dx)
    return PhysicalStation(st.x + dx, y, u_new, v_new)


def march_physical(u0, x_start: float, schedule, grid: YGrid, config: MarchConfig) -> list[PhysicalStation]:
    """March ``u0`` (array on ``grid`` or callable of y) through ``schedule``."""
    y = grid.nodes
    u = np.asarray(u0(y) if callable(u0) else u0, dtype=float).copy()
    u[0], u[-1] = 0.0, 1.0
    st = PhysicalStation(float(x_start), y, u, np.zeros_like(u))
    stencils = _stencils(y)
    history = [st]
    dx = config.dx0
    scale = config.dx0 / (x_start + 1.0)
    for target in np.asarray(schedule, dtype=float)[1:]:
        while st.x < target - 1e-12 * (1 + target):
            dx = min(dx * config.dx_growth, scale * (st.x + 1.0))
            h = min(dx, target - st.x)
            if target - st.x - h < 0.25 * h:
                h = target - st.x
            for attempt in range(MAX_HALVINGS + 1):
                try:
                    nxt = _step(st, h, config, stencils)
                    break
                except PicardFailure:
                    if attempt == MAX_HALVINGS:
                        raise
                    h *= 0.5
            st = nxt
        st = PhysicalStation(float(target), y, st.u, st.v)
        history.append(st)
    return history


def blasius_u0(profile: BlasiusProfile, x_start: float):
    return lambda y: base_flow(profile, x_start, y)[0]


def u0_from_station(station: Station):
    """Physical initial profile ``u0(y)`` matching a von Mises station."""
    spline = station.u_of_y
    y_top = station.y[-1]
    return lambda yy: np.where(yy < y_top, spline(np.minimum(yy, y_top)), 1.0)
