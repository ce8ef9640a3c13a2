import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prandtl_lab.blasius import evaluate, similarity_scale
from prandtl_lab.positivity import (
    audit,
    audit_grid,
    domega,
    identity_residual,
    neg_eta_fppp,
    omega_physical,
    omega_ss,
    taylor_wall_checks,
)
from conftest import cached_profile


def test_audit_passes(profile):
    rep = audit(profile)
    assert rep.passed, rep.failures()
    assert rep.min_omega >= -1e-8
    assert rep.min_domega >= -1e-8
    assert rep.min_neg_eta_fppp >= -1e-8


def test_audit_grid_resolution(profile):
    g = audit_grid(20.0)
    assert g[0] == 0.0 and abs(g[-1] - 20.0) < 1e-12
    assert np.max(np.diff(g[g < 5.0])) <= 1e-3 + 1e-15


@pytest.mark.parametrize("x", [1.0, 10.0, 100.0])
def test_self_similar_identity(profile, x):
    eta = np.linspace(0.0, 20.0, 20001)
    assert identity_residual(profile, x, eta).max() <= 1e-8


def test_identity_needs_factor_four(profile):
    # with eta = y / sqrt(2 (x + x0)) the reduction carries 4 (x + x0), not 2 (x + x0)
    x, eta = 10.0, np.linspace(0.5, 6.0, 50)
    om = omega_physical(profile, x, eta * similarity_scale(x))
    rhs = omega_ss(profile, eta) * evaluate(profile, eta)[2]
    assert np.allclose(4 * (x + 1) * om, rhs, atol=1e-12)
    assert np.max(np.abs(2 * (x + 1) * om - rhs)) > 1e-2


def test_wall_taylor(profile):
    t = taylor_wall_checks(profile)
    assert t["fppp0"] == 0.0
    assert t["f4_0"] == 0.0
    assert abs(t["f5_plus_fpp0_sq"]) <= 1e-10
    assert abs(t["omega_eta5_coeff"] - profile.fpp0**2 / 40) < 1e-15


def test_omega_wall_asymptotics(profile):
    eta = np.array([0.02, 0.04])
    ratio = omega_ss(profile, eta) / eta**5
    assert np.allclose(ratio, profile.fpp0**2 / 40, rtol=1e-2)


def test_ladder_derivatives(profile):
    eta = np.linspace(0.1, 10.0, 300)
    h = 1e-5
    d_om = (omega_ss(profile, eta + h) - omega_ss(profile, eta - h)) / (2 * h)
    assert np.allclose(d_om, domega(profile, eta), atol=1e-7)
    d_dom = (domega(profile, eta + h) - domega(profile, eta - h)) / (2 * h)
    assert np.allclose(d_dom, neg_eta_fppp(profile, eta), atol=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=1e4), st.floats(min_value=0.0, max_value=400.0))
def test_omega_nonnegative_everywhere(x, y):
    assert omega_physical(cached_profile(), x, np.array([y]))[0] >= -1e-12


def test_far_field_omega_is_twice_displacement(profile):
    # omega -> 2 f - eta = eta - 2 beta for large eta
    eta = np.array([30.0])
    assert np.allclose(omega_ss(profile, eta), eta - 2 * profile.beta)
