"""Downstream march of the Prandtl system in von Mises variables.

In ``(x, psi)`` with ``w = u**2`` the stationary Prandtl equations become the
degenerate parabolic equation ``w_x = sqrt(w) w_psipsi`` with ``w(x, 0) = 0``
and ``w(x, inf) = 1``.  The march uses a theta scheme on a nonuniform psi grid
with Picard iteration on the ``sqrt(w)`` coefficient; every Picard pass is a
single tridiagonal solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .blasius import BlasiusProfile, evaluate, eta_of_xi, similarity_scale, wbar_of_xi
from .tridiag import solve_tridiag

log = logging.getLogger(__name__)

WALL_TOL = 1e-12
FAR_TOL = 1e-8
MAX_HALVINGS = 5


class MarchError(RuntimeError):
    pass


class PicardFailure(MarchError):
    pass


class PositivityFailure(MarchError):
    pass


class CompatibilityError(ValueError):
    """Initial data incompatible with the wall / far-field conditions."""


@dataclass(frozen=True)
class PsiGrid:
    """Stream-function grid ``psi(s) = psi_max * s**2 * exp(stretch * (s - 1))``.

    ``s`` is uniform on ``[0, 1]``.  The ``s**2`` factor clusters nodes like
    ``j**2`` at the wall where ``u ~ psi**(1/2)``; ``stretch > 0`` adds
    geometric grading so one grid resolves the boundary layer from
    ``x_start`` out to ``x_end``.  ``stretch = 0`` is pure square clustering.
    """

    nodes: np.ndarray
    psi_max: float
    stretch: float

    @classmethod
    def build(cls, n: int, psi_max: float, stretch: float = 0.0) -> "PsiGrid":
        if n < 5:
            raise ValueError("need at least 5 grid nodes")
        if psi_max <= 0 or stretch < 0:
            raise ValueError("psi_max must be positive and stretch nonnegative")
        s = np.linspace(0.0, 1.0, n)
        nodes = psi_max * s**2 * np.exp(stretch * (s - 1.0))
        nodes[0] = 0.0
        nodes[-1] = psi_max
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("grid nodes not strictly increasing")
        nodes.setflags(write=False)
        return cls(nodes, float(psi_max), float(stretch))

    @classmethod
    def for_run(cls, n: int, x_start: float, x_end: float, xi_cover: float = 8.0,
                stretch: float | None = None) -> "PsiGrid":
        """Grid covering ``xi <= xi_cover`` up to ``x_end``.

        With ``stretch=None`` the grading is chosen so that ``s = 1/2`` lands
        at ``xi = xi_cover`` for ``x = x_start``: half the nodes sit inside
        the initial boundary layer.
        """
        if xi_cover < 8.0:
            raise ValueError("xi_cover must be >= 8 to keep the far field in the domain")
        psi_max = float(similarity_scale(x_end)) * xi_cover
        if stretch is None:
            target = xi_cover * float(similarity_scale(x_start))
            stretch = max(0.0, 2.0 * np.log(0.25 * psi_max / target))
        return cls.build(n, psi_max, stretch)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @cached_property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @cached_property
    def d2_coeffs(self):
        """Three-point second-difference weights ``(lo, mid, up)`` at interior nodes."""
        hm = self.spacing[:-1]
        hp = self.spacing[1:]
        lo = 2.0 / (hm * (hm + hp))
        up = 2.0 / (hp * (hm + hp))
        return lo, -(lo + up), up

    def d2(self, w: np.ndarray) -> np.ndarray:
        """Second difference at interior nodes (length ``n - 2``)."""
        lo, mid, up = self.d2_coeffs
        return lo * w[:-2] + mid * w[1:-1] + up * w[2:]

    def d1(self, w: np.ndarray) -> np.ndarray:
        """Second-order first derivative at every node (one-sided at the ends)."""
        return np.gradient(w, self.nodes, edge_order=2)


@dataclass(frozen=True)
class Station:
    """``w = u**2`` on a :class:`PsiGrid` at downstream position ``x``."""

    x: float
    w: np.ndarray
    grid: PsiGrid = field(repr=False)

    def __post_init__(self):
        self.w.setflags(write=False)

    @cached_property
    def u(self) -> np.ndarray:
        return np.sqrt(np.clip(self.w, 0.0, None))

    @cached_property
    def xi(self) -> np.ndarray:
        return self.grid.nodes / similarity_scale(self.x)

    @cached_property
    def y(self) -> np.ndarray:
        """Physical height of each node, ``y = int_0^psi dpsi' / u``."""
        return y_of_psi(self.grid.nodes, self.w)

    @cached_property
    def u_y(self) -> np.ndarray:
        """``u_y = u u_psi = w_psi / 2``."""
        return 0.5 * self.grid.d1(self.w)

    @cached_property
    def u_of_y(self) -> CubicHermiteSpline:
        """``u`` as a function of physical ``y`` (Hermite, slopes ``w_psi / 2``)."""
        return CubicHermiteSpline(self.y, self.u, self.u_y)

    @cached_property
    def psi_of_y(self) -> CubicHermiteSpline:
        """Stream function as a function of ``y`` (Hermite, slopes ``u``)."""
        return CubicHermiteSpline(self.y, self.grid.nodes, self.u)

    def phi(self, profile: BlasiusProfile) -> np.ndarray:
        return self.w - wbar(profile, self.x, self.grid.nodes)

    def check(self, tol: float = 1e-6) -> None:
        """Wall, far-field and maximum-principle checks; raise on violation."""
        w = self.w
        if not np.all(np.isfinite(w)):
            raise PositivityFailure(f"non-finite w at x={self.x}")
        if abs(w[0]) > WALL_TOL:
            raise CompatibilityError(f"w(psi=0)={w[0]!r} at x={self.x}")
        if abs(w[-1] - 1.0) > FAR_TOL:
            raise CompatibilityError(f"w(psi_max)={w[-1]!r} at x={self.x}")
        if w.max() > 1.0 + tol:
            raise PositivityFailure(f"max w={w.max()!r} exceeds 1 at x={self.x}")
        if np.any(w[1:-1] <= 0.0):
            j = int(np.argmin(w[1:-1])) + 1
            raise PositivityFailure(f"w <= 0 in interior at psi={self.grid.nodes[j]} x={self.x}")


@dataclass(frozen=True)
class MarchConfig:
    theta: float = 0.5
    dx0: float = 0.01
    dx_growth: float = 1.05
    picard_tol: float = 1e-12
    picard_max: int = 30

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta={self.theta} outside [0.5, 1]")
        if self.dx0 <= 0 or self.dx_growth < 1.0:
            raise ValueError("dx0 must be positive and dx_growth >= 1")
        if self.picard_tol <= 0 or self.picard_max < 1:
            raise ValueError("picard_tol must be positive and picard_max >= 1")


def y_of_psi(psi, w) -> np.ndarray:
    """Cumulative ``y = int_0^psi dpsi' / sqrt(w)`` with ``w`` linear per cell.

    Each cell contributes ``2 dpsi / (sqrt(w_i) + sqrt(w_i+1))``, exact for
    the wall behaviour ``w ~ psi`` where ``1 / u`` is singular.
    """
    u = np.sqrt(np.clip(np.asarray(w, dtype=float), 0.0, None))
    dy = 2.0 * np.diff(psi) / (u[:-1] + u[1:])
    return np.concatenate([[0.0], np.cumsum(dy)])


def wbar(profile: BlasiusProfile, x: float, psi) -> np.ndarray:
    """Blasius ``u_bar**2`` at ``(x, psi)``."""
    return wbar_of_xi(profile, np.asarray(psi) / similarity_scale(x, profile.x0))


def init_station(profile: BlasiusProfile, initial_data, x_start: float, grid: PsiGrid) -> Station:
    """Sample ``initial_data(psi)`` (a callable returning ``w``) on ``grid``.

    ``initial_data`` may be ``None`` for the Blasius profile itself.
    """
    psi = grid.nodes
    if initial_data is None:
        w = wbar(profile, x_start, psi)
    else:
        w = np.asarray(initial_data(psi), dtype=float)
    w = np.array(w, dtype=float)
    if abs(w[0]) > WALL_TOL:
        raise CompatibilityError(f"initial data violates no-slip: w(0)={w[0]!r}")
    if abs(w[-1] - 1.0) > FAR_TOL:
        raise CompatibilityError(f"initial data violates far field: w(psi_max)={w[-1]!r}")
    if w.min() < 0.0:
        raise CompatibilityError("initial data has negative w")
    w[0] = 0.0
    w[-1] = 1.0
    return Station(float(x_start), w, grid)


def _assemble(station: Station, ustar, dx, theta):
    grid = station.grid
    lo, mid, up = grid.d2_coeffs
    n = grid.n
    w = station.w
    ui = ustar[1:-1]
    a = np.zeros(n)
    b = np.ones(n)
    c = np.zeros(n)
    a[1:-1] = -dx * theta * ui * lo
    b[1:-1] = 1.0 - dx * theta * ui * mid
    c[1:-1] = -dx * theta * ui * up
    d = np.empty(n)
    d[0] = 0.0
    d[-1] = 1.0
    d[1:-1] = w[1:-1] + dx * (1.0 - theta) * ui * grid.d2(w)
    return a, b, c, d


def step(station: Station, dx: float, config: MarchConfig) -> Station:
    """Advance one theta-scheme step of ``w_x = sqrt(w) w_psipsi``.

    The coefficient ``u* = sqrt((w + w_new) / 2)`` is Picard-iterated until
    successive iterates differ by at most ``picard_tol`` in max norm.
    """
    if dx <= 0:
        raise ValueError("dx must be positive")
    w = station.w
    ustar = station.u
    w_new = None
    for it in range(config.picard_max):
        a, b, c, d = _assemble(station, ustar, dx, config.theta)
        w_next = solve_tridiag(a, b, c, d)
        if w_new is not None and np.max(np.abs(w_next - w_new)) <= config.picard_tol:
            w_new = w_next
            break
        w_new = w_next
        ustar = np.sqrt(np.clip(0.5 * (w + w_new), 0.0, None))
    else:
        raise PicardFailure(f"Picard did not converge in {config.picard_max} passes at x={station.x}, dx={dx}")
    if w_new[1:-1].min() < -1e-10:
        j = int(np.argmin(w_new[1:-1])) + 1
        raise PositivityFailure(
            f"negative w={w_new[j]:.3e} at psi={station.grid.nodes[j]:.3e}, x={station.x + dx}"
        )
    return Station(station.x + dx, w_new, station.grid)


def output_schedule(x_start: float, x_end: float, per_decade: int) -> np.ndarray:
    """Geometric schedule in ``x + 1`` from ``x_start`` to ``x_end`` inclusive."""
    if x_end <= x_start:
        raise ValueError("x_end must exceed x_start")
    a, b = np.log10(x_start + 1.0), np.log10(x_end + 1.0)
    k = max(2, int(np.ceil((b - a) * per_decade)) + 1)
    xs = 10.0 ** np.linspace(a, b, k) - 1.0
    xs[0], xs[-1] = x_start, x_end
    return xs


def march(start: Station, schedule, config: MarchConfig, on_station=None) -> list[Station]:
    """March ``start`` through every x in ``schedule``; return recorded stations.

    ``dx`` grows by ``dx_growth`` per step and is capped at
    ``dx0 * (x + 1) / (x_start + 1)`` (self-similar scaling), then clipped so
    each scheduled x is hit exactly.  A Picard failure halves ``dx`` up to
    five times before giving up.
    """
    schedule = np.asarray(schedule, dtype=float)
    if abs(schedule[0] - start.x) > 1e-12 * (1 + abs(start.x)):
        raise ValueError("schedule must begin at the start station's x")
    history = [start]
    if on_station is not None:
        on_station(start)
    st = start
    dx = config.dx0
    scale = config.dx0 / (start.x + 1.0)
    for target in schedule[1:]:
        while st.x < target - 1e-12 * (1 + target):
            dx = min(dx * config.dx_growth, scale * (st.x + 1.0))
            h = min(dx, target - st.x)
            # avoid a sliver step right before the target
            if target - st.x - h < 0.25 * h:
                h = target - st.x
            for attempt in range(MAX_HALVINGS + 1):
                try:
                    nxt = step(st, h, config)
                    break
                except PicardFailure:
                    if attempt == MAX_HALVINGS:
                        raise
                    h *= 0.5
                    log.debug("Picard failure at x=%g, retrying with dx=%g", st.x, h)
            st = nxt
        st = Station(float(target), st.w, st.grid)
        history.append(st)
        if on_station is not None:
            on_station(st)
    return history


def three_point_weights(x0: float, x1: float, x2: float, at: float):
    """Weights of the quadratic-interpolation first derivative at ``at``."""
    d0 = (2 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
    d1 = (2 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
    d2 = (2 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    return d0, d1, d2


def x_derivative(history: list[Station], index: int, values=None) -> np.ndarray:
    """``d/dx`` at ``history[index]`` by the nonuniform three-point stencil.

    Central at interior indices, one-sided at the ends.  ``values`` defaults
    to the ``w`` arrays.
    """
    if len(history) < 3:
        raise ValueError("need three recorded stations")
    if values is None:
        values = [s.w for s in history]
    j = min(max(index, 1), len(history) - 2)
    xs = [history[k].x for k in (j - 1, j, j + 1)]
    c0, c1, c2 = three_point_weights(*xs, history[index].x)
    return c0 * values[j - 1] + c1 * values[j] + c2 * values[j + 1]


def coefficient_A(profile: BlasiusProfile, station: Station) -> np.ndarray:
    """``A = -2 u_bar_yy / (u_bar (u_bar + u))`` on the station's nodes.

    Evaluated in the self-similar form ``f f'' / (f' (f' + u)) / (x + 1)``;
    the wall value uses the limit ``1 / (4 (x + 1))``.
    """
    eta = eta_of_xi(profile, station.xi)
    f, fp, fpp, _ = evaluate(profile, eta)
    s = station.x + profile.x0
    A = np.empty_like(fp)
    A[0] = 0.25 / s
    A[1:] = f[1:] * fpp[1:] / (fp[1:] * (fp[1:] + station.u[1:])) / s
    return A


def residual_nonlin_eq(history: list[Station], profile: BlasiusProfile, index: int,
                       skip: int = 3) -> float:
    """L2 norm of ``phi_x - u phi_psipsi + A phi`` at an interior record.

    ``phi_x`` uses the three-point x stencil over recorded stations; the wall
    and far-field ``skip`` cells are excluded.
    """
    st = history[index]
    phis = [s.phi(profile) for s in history]
    phi_x = x_derivative(history, index, phis)
    phi = phis[index]
    res = np.zeros_like(phi)
    res[1:-1] = phi_x[1:-1] - st.u[1:-1] * st.grid.d2(phi) + coefficient_A(profile, st)[1:-1] * phi[1:-1]
    psi = st.grid.nodes
    sl = slice(skip, st.grid.n - skip)
    return float(np.sqrt(np.trapezoid(res[sl] ** 2, psi[sl])))
