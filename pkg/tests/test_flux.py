import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_arz import InvalidParameterError, blowup_beta, make_custom_flux, make_pipes_flux


def test_lwr_values(lwr):
    assert float(lwr.f(0.25)) == pytest.approx(0.1875, abs=1e-15)
    assert float(lwr.d2f(0.25)) == pytest.approx(-2.0, abs=1e-15)
    assert lwr.rho_c == 1.0
    assert lwr.rho_M == 1.0


def test_pipes2_origin_derivatives(pipes2):
    assert float(pipes2.f(0.0)) == 0.0
    assert float(pipes2.df(0.0)) == pytest.approx(1.0)
    assert float(pipes2.d2f(0.0)) == pytest.approx(-4.0)
    assert pipes2.rho_c == pytest.approx(2.0 / 3.0)
    assert pipes2.rho_M == 0.99
    h = 1e-5
    fd1 = (pipes2.f(h) - pipes2.f(-h)) / (2 * h)
    fd2 = (pipes2.f(h) - 2 * pipes2.f(0.0) + pipes2.f(-h)) / h**2
    assert float(fd1) == pytest.approx(1.0, abs=1e-8)
    assert float(fd2) == pytest.approx(-4.0, abs=1e-4)


@pytest.mark.parametrize("J,rho_M", [(0.5, None), (0.0, None), (2.0, 0.0), (2.0, 1.5), (float("nan"), None)])
def test_invalid_parameters(J, rho_M):
    with pytest.raises(InvalidParameterError):
        make_pipes_flux(J, rho_M)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 6.0))
def test_pipes_invariants(J):
    m = make_pipes_flux(J)
    inv = m.check_invariants()
    assert all(inv.values()), inv
    r = np.linspace(0.0, m.rho_M, 501)
    assert np.max(np.abs(m.f(r) - r * m.U(r))) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 6.0))
def test_derivatives_match_finite_differences(J):
    m = make_pipes_flux(J)
    r = np.linspace(0.01, m.rho_M - 0.01, 200)
    h = 1e-6
    for fn, dfn in ((m.U, m.dU), (m.f, m.df), (m.df, m.d2f), (m.dU, m.d2U)):
        fd = (fn(r + h) - fn(r - h)) / (2 * h)
        exact = dfn(r)
        scale = np.maximum(np.abs(exact), 1e-3)
        assert np.max(np.abs(fd - exact) / scale) <= 1e-6


@pytest.mark.parametrize("J", [1.5, 2.0, 3.0, 4.0])
def test_inflection(J):
    m = make_pipes_flux(J)
    rc = m.rho_c
    assert rc == pytest.approx(2.0 / (J + 1.0))
    assert abs(float(m.d2f(rc))) <= 1e-10
    assert float(m.d2f(rc - 1e-3)) < 0.0 < float(m.d2f(rc + 1e-3))


def test_custom_inflection_matches_pipes():
    m = make_custom_flux(lambda r: (1 - r) ** 3, lambda r: -3 * (1 - r) ** 2, lambda r: 6 * (1 - r))
    assert m.rho_c == pytest.approx(0.5, abs=1e-10)
    assert np.isnan(m.J)


@pytest.mark.parametrize("J,beta", [(1.0, 1.0), (4.0, 0.25), (2.0, 0.5)])
def test_blowup_beta_pipes(J, beta):
    assert blowup_beta(make_pipes_flux(J)) == beta


def test_blowup_beta_custom_bisection():
    m = make_custom_flux(lambda r: (1 - r) ** 2, lambda r: -2 * (1 - r), lambda r: 2 + 0 * r)
    assert blowup_beta(m) == pytest.approx(0.5, abs=1e-6)


def test_blowup_beta_custom_linear_is_one():
    m = make_custom_flux(lambda r: 1 - r, lambda r: -1 + 0 * r, lambda r: 0 * r)
    assert blowup_beta(m) == 1.0


def test_C1_norm(lwr, pipes2):
    assert lwr.U_C1_norm == pytest.approx(2.0)
    assert pipes2.U_C1_norm == pytest.approx(3.0)
