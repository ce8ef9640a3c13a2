"""Weighted norms, energy / division ledgers and the Nash ratio per recorded station.

All integrals are in ``psi`` with the bracket ``<psi> = (1 + psi**2)**(1/2)``.
Integrands carrying ``1/u`` or ``1/u**3`` are singular at the wall node; they
are integrated with :class:`WeightPolicy`, an open rule that replaces the
first cell by the exact integral of a local power law.

The division identity is checked in the exact form obtained by multiplying
``phi_x - u phi_psipsi + A phi = 0`` by ``phi <psi> / u``:

    d/dx 1/2 int phi^2 <psi>/u + int phi_psi^2 <psi> + 1/2 int phi^2 <psi> u_x/u^2
        + int A phi^2 <psi>/u - 1/2 int phi^2 <psi>''  =  0

The last term is the curvature of the bracket; it vanishes only for weights
linear in ``psi``.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields

import numpy as np

from .blasius import BlasiusProfile, evaluate, eta_of_xi
from .positivity import IDENTITY_FACTOR, omega_ss
from .vonmises import Station, coefficient_A, three_point_weights, wbar


def bracket(psi):
    return np.sqrt(1.0 + np.asarray(psi) ** 2)


def bracket_dd(psi):
    """Second derivative of ``<psi>``: ``(1 + psi**2)**(-3/2)``."""
    return (1.0 + np.asarray(psi) ** 2) ** -1.5


@dataclass(frozen=True)
class WeightPolicy:
    """Open quadrature for integrands singular at ``psi = 0``.

    Interior cells use the trapezoid rule.  On ``[0, psi_1]`` the integrand is
    modelled as ``g_1 (psi / psi_1)**p`` with ``p`` read off nodes 1 and 2
    (falling back to ``model_exponent`` when the local fit is unusable), so
    the wall value itself is never evaluated.
    """

    model_exponent: float = 1.5
    self_test_rtol: float = 0.01

    def integrate(self, psi: np.ndarray, g: np.ndarray) -> float:
        psi = np.asarray(psi, dtype=float)
        g = np.asarray(g, dtype=float)
        interior = np.trapezoid(g[1:], psi[1:])
        g1, g2 = g[1], g[2]
        p = self.model_exponent
        if g1 > 0.0 and g2 > 0.0 and g1 != g2:
            p_fit = np.log(g2 / g1) / np.log(psi[2] / psi[1])
            if p_fit > -0.95:
                p = p_fit
        elif g1 == 0.0:
            return float(interior)
        return float(interior + g1 * psi[1] / (p + 1.0))

    def self_test(self, h: float = 1e-3, n: int = 50) -> float:
        """Relative error of the wall rule on ``psi**2 * psi**(-1/2)`` over ``[0, h]``."""
        s = np.linspace(0.0, 1.0, n)
        psi = h * s**2
        g = np.zeros_like(psi)
        g[1:] = psi[1:] ** 1.5
        exact = h**2.5 / 2.5
        err = abs(self.integrate(psi, g) - exact) / exact
        if err > self.self_test_rtol:
            raise ArithmeticError(f"weight policy self-test failed: rel err {err:.3e}")
        return err


DEFAULT_POLICY = WeightPolicy()


@dataclass
class LedgerRow:
    x: float
    l2_phi: float
    wdiv_phi: float
    diss: float
    wdiss: float
    cons: float
    energy_lhs: float = float("nan")
    energy_budget: float = float("nan")
    div_identity_residual: float = float("nan")
    div_identity_scale: float = float("nan")
    omega_term: float = float("nan")
    omega_r_term: float = float("nan")
    nash_lhs: float = float("nan")
    nash_rhs: float = float("nan")
    nash_ratio: float = float("nan")
    x1_l2: float = float("nan")
    x1_wdiv: float = float("nan")
    x1_diss: float = float("nan")
    x1_wdiss: float = float("nan")

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return [getattr(self, k) for k in self.header()]


def phi_field(station: Station, profile: BlasiusProfile, reference: Station | None = None) -> np.ndarray:
    """``phi = w - w_bar``; ``w_bar`` from the profile or from a reference march."""
    if reference is None:
        return station.w - wbar(profile, station.x, station.grid.nodes)
    if reference.grid is not station.grid and not np.array_equal(reference.grid.nodes, station.grid.nodes):
        raise ValueError("reference station lives on a different grid")
    return station.w - reference.w


def _ubar(station: Station, profile: BlasiusProfile, reference: Station | None):
    if reference is not None:
        return reference.u
    return np.sqrt(wbar(profile, station.x, station.grid.nodes))


def _div_u(g, u):
    out = np.zeros_like(g)
    m = u > 0.0
    out[m] = g[m] / u[m]
    return out


def weighted_norms(station: Station, phi: np.ndarray, ubar: np.ndarray,
                   policy: WeightPolicy = DEFAULT_POLICY) -> LedgerRow:
    """k = 0 norms of ``phi`` at one station (ledger fields not needing x stencils)."""
    psi = station.grid.nodes
    u = station.u
    if np.any(u[1:] <= 0.0):
        raise ArithmeticError(f"u vanishes off the wall at x={station.x}")
    br = bracket(psi)
    phi_psi = station.grid.d1(phi)
    l2 = np.sqrt(np.trapezoid(phi**2, psi))
    wdiv = np.sqrt(policy.integrate(psi, _div_u(phi**2 * br, u)))
    diss = np.trapezoid(ubar * phi_psi**2, psi)
    wdiss = np.trapezoid(phi_psi**2 * br, psi)
    cons = np.sqrt(np.trapezoid(phi**2 * br, psi))
    return LedgerRow(float(station.x), float(l2), float(wdiv), float(diss), float(wdiss), float(cons))


def nash_ratio(station: Station, phi: np.ndarray):
    """``||phi||^2 / max(x^(1/10) D^(4/5), D^(2/3))`` with ``D = ||sqrt(u) phi_psi||``."""
    psi = station.grid.nodes
    lhs = float(np.trapezoid(phi**2, psi))
    D = float(np.sqrt(np.trapezoid(station.u * station.grid.d1(phi) ** 2, psi)))
    rhs = max(station.x**0.1 * D**0.8, D ** (2.0 / 3.0))
    ratio = lhs / rhs if rhs > 0.0 else 0.0
    return lhs, rhs, ratio


def nash_branch(station: Station, phi: np.ndarray) -> int:
    """0 if the ``x^(1/10) D^(4/5)`` branch is the larger one, else 1."""
    psi = station.grid.nodes
    D = float(np.sqrt(np.trapezoid(station.u * station.grid.d1(phi) ** 2, psi)))
    return 0 if station.x**0.1 * D**0.8 >= D ** (2.0 / 3.0) else 1


def _stencil(history, index):
    j = min(max(index, 1), len(history) - 2)
    xs = [history[k].x for k in (j - 1, j, j + 1)]
    return (j - 1, j, j + 1), three_point_weights(*xs, history[index].x)


def omega_base(profile: BlasiusProfile, station: Station) -> np.ndarray:
    """Blasius ``Omega`` at the station's ``psi`` nodes (via ``xi = f(eta)``)."""
    eta = eta_of_xi(profile, station.xi)
    fpp = evaluate(profile, eta)[2]
    return omega_ss(profile, eta) * fpp / (IDENTITY_FACTOR * (station.x + profile.x0))


def energy_ledger(history, profile, index, references=None, eps: float = 0.0):
    """Discrete ``d/dx 1/2 int phi^2 + int u_bar phi_psi^2`` at ``history[index]``.

    Returns ``(energy_lhs, budget)`` where ``budget = eps / x * 1/2 int phi^2``
    is the reporting scale of the right-hand side.
    """
    ks, c = _stencil(history, index)
    e = []
    for k in ks:
        ref = references[k] if references is not None else None
        ph = phi_field(history[k], profile, ref)
        e.append(0.5 * np.trapezoid(ph**2, history[k].grid.nodes))
    de = c[0] * e[0] + c[1] * e[1] + c[2] * e[2]
    st = history[index]
    ref = references[index] if references is not None else None
    ph = phi_field(st, profile, ref)
    diss = np.trapezoid(_ubar(st, profile, ref) * st.grid.d1(ph) ** 2, st.grid.nodes)
    e_here = 0.5 * np.trapezoid(ph**2, st.grid.nodes)
    return float(de + diss), float(eps / st.x * e_here)


def energy_identity(history, profile, index, references=None, policy: WeightPolicy = DEFAULT_POLICY):
    """Terms of ``phi x (phi_x - u phi_psipsi + A phi)`` integrated by parts.

    ``1/2 d/dx int phi^2 + int u phi_psi^2 + int u_psi phi phi_psi + int A phi^2 = 0``;
    returns the terms, their sum (the residual) and the sum of magnitudes.
    """
    ks, c = _stencil(history, index)
    e = []
    for k in ks:
        ref = references[k] if references is not None else None
        e.append(0.5 * np.trapezoid(phi_field(history[k], profile, ref) ** 2, history[k].grid.nodes))
    st = history[index]
    psi = st.grid.nodes
    ref = references[index] if references is not None else None
    phi = phi_field(st, profile, ref)
    phi_psi = st.grid.d1(phi)
    u_psi = _div_u(0.5 * st.grid.d1(st.w), st.u)
    terms = (
        c[0] * e[0] + c[1] * e[1] + c[2] * e[2],
        np.trapezoid(st.u * phi_psi**2, psi),
        policy.integrate(psi, u_psi * phi * phi_psi),
        np.trapezoid(coefficient_A(profile, st) * phi**2, psi),
    )
    return {
        "terms": tuple(float(t) for t in terms),
        "residual": float(sum(terms)),
        "scale": float(sum(abs(t) for t in terms)),
    }


def division_ledger(history, profile, index, references=None, policy: WeightPolicy = DEFAULT_POLICY):
    """Terms of the division identity at ``history[index]``.

    Returns a dict with the five terms, the residual (their sum), a scale
    (sum of absolute values) and the ``Omega`` / ``Omega^R`` split of the
    ``u_x`` and ``A`` terms.
    """
    ks, c = _stencil(history, index)
    st = history[index]
    psi = st.grid.nodes
    br = bracket(psi)
    phis = {}
    for k in ks + (index,):
        ref = references[k] if references is not None else None
        phis[k] = phi_field(history[k], profile, ref)
    weighted = [policy.integrate(psi, _div_u(phis[k] ** 2 * br, history[k].u)) for k in ks]
    t1 = 0.5 * (c[0] * weighted[0] + c[1] * weighted[1] + c[2] * weighted[2])
    phi = phis[index]
    u = st.u
    u_x = c[0] * history[ks[0]].u + c[1] * history[ks[1]].u + c[2] * history[ks[2]].u
    t2 = np.trapezoid(st.grid.d1(phi) ** 2 * br, psi)
    u3 = np.zeros_like(u)
    u3[1:] = u[1:] ** -3
    A = coefficient_A(profile, st)
    omega_ring = 0.5 * u * u_x + u * u * A
    base = phi**2 * br * u3
    t34 = policy.integrate(psi, base * omega_ring)
    t3 = policy.integrate(psi, base * 0.5 * u * u_x)
    t4 = t34 - t3
    t5 = -0.5 * np.trapezoid(phi**2 * bracket_dd(psi), psi)
    omega = omega_base(profile, st)
    omega_term = policy.integrate(psi, base * omega)
    terms = (t1, t2, t3, t4, t5)
    return {
        "terms": tuple(float(t) for t in terms),
        "residual": float(sum(terms)),
        "scale": float(sum(abs(t) for t in terms)),
        "omega_term": float(omega_term),
        "omega_r_term": float(t34 - omega_term),
    }


def x1_components(history, profile, index, references=None, policy: WeightPolicy = DEFAULT_POLICY):
    """The four k = 1 pieces for ``phi^(1) = d/dx phi`` times ``<x>``."""
    ks, c = _stencil(history, index)
    ph = []
    for k in ks:
        ref = references[k] if references is not None else None
        ph.append(phi_field(history[k], profile, ref))
    phi1 = c[0] * ph[0] + c[1] * ph[1] + c[2] * ph[2]
    st = history[index]
    psi = st.grid.nodes
    br = bracket(psi)
    xw = np.sqrt(1.0 + st.x**2)
    d = st.grid.d1(phi1)
    return (
        float(xw * np.sqrt(np.trapezoid(phi1**2, psi))),
        float(xw * np.sqrt(policy.integrate(psi, _div_u(phi1**2 * br, st.u)))),
        float(xw * np.sqrt(np.trapezoid(st.u * d**2, psi))),
        float(xw * np.sqrt(np.trapezoid(d**2 * br, psi))),
    )


def conserved_monitor(rows) -> np.ndarray:
    return np.array([[r.x, r.cons] for r in rows])


def ledger(history, profile, references=None, eps: float = 0.0,
           policy: WeightPolicy = DEFAULT_POLICY) -> list[LedgerRow]:
    """One :class:`LedgerRow` per recorded station (requires >= 3 stations)."""
    policy.self_test()
    rows = []
    for i, st in enumerate(history):
        ref = references[i] if references is not None else None
        phi = phi_field(st, profile, ref)
        row = weighted_norms(st, phi, _ubar(st, profile, ref), policy)
        row.energy_lhs, row.energy_budget = energy_ledger(history, profile, i, references, eps)
        div = division_ledger(history, profile, i, references, policy)
        row.div_identity_residual = div["residual"]
        row.div_identity_scale = div["scale"]
        row.omega_term = div["omega_term"]
        row.omega_r_term = div["omega_r_term"]
        row.nash_lhs, row.nash_rhs, row.nash_ratio = nash_ratio(st, phi)
        row.x1_l2, row.x1_wdiv, row.x1_diss, row.x1_wdiss = x1_components(
            history, profile, i, references, policy
        )
        rows.append(row)
    return rows


def write_ledger(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(LedgerRow.header())
        for r in rows:
            wr.writerow([repr(float(v)) for v in r.values()])


def read_ledger(path) -> list[LedgerRow]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        return [LedgerRow(**{k: float(v) for k, v in rec.items()}) for rec in rd]


def as_dict(row: LedgerRow) -> dict:
    return asdict(row)
