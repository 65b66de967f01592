import numpy as np
import pytest

from nonlocal_arz import (
    Grid,
    InvalidParameterError,
    TruncatedSupportError,
    build_initial_state,
    compute_F0_G0,
    compute_rho_tilde,
    make_pipes_flux,
    preset_state,
    state_from_psi,
    validate_assumptions,
)
from nonlocal_arz.kernels import trapezoid_suffix
from nonlocal_arz.presets import smoothed_plateau

from conftest import gaussian


def test_grid_validation():
    with pytest.raises(InvalidParameterError):
        Grid(0.0, 1.0, 8)
    with pytest.raises(InvalidParameterError):
        Grid(1.0, 0.0, 100)
    g = Grid(0.0, 1.0, 100)
    assert g.dx == pytest.approx(0.01)
    assert g.x[0] == pytest.approx(0.005)
    assert g.refined(2).N == 200


def test_first_order_reduction(grid, lwr, uniform):
    rho = gaussian(grid.x)
    nl = compute_rho_tilde(rho, uniform, grid)
    st = build_initial_state(rho, lwr.U(rho) * nl.slowdown, lwr, uniform, grid)
    assert np.max(np.abs(st.psi)) <= 1e-15


def test_vacuum_unit_velocity(grid, lwr, uniform):
    st = build_initial_state(np.zeros(grid.N), np.ones(grid.N), lwr, uniform, grid)
    assert np.all(st.psi == 0.0)


def test_psi_spot_value_far_left(lwr, uniform):
    g = Grid(-5.0, 6.0, 4400)
    rho = 0.4 * 0.5 * (np.tanh(g.x / 0.02) - np.tanh((g.x - 1.0) / 0.02))
    st = build_initial_state(rho, np.full(g.N, 0.9), lwr, uniform, g)
    assert st.psi[0] == pytest.approx(0.9 - np.exp(-0.4), abs=1e-6)
    assert st.psi[0] == pytest.approx(0.2297, abs=1e-4)


def test_round_trip_and_coupling(grid, pipes2, uniform):
    rho = gaussian(grid.x, 0.6)
    u0 = 0.2 + 0.3 * np.exp(-grid.x**2)
    st = build_initial_state(rho, u0, pipes2, uniform, grid)
    assert np.array_equal(st.u, u0)
    assert st.coupling_error(pipes2) <= 1e-12


def test_support_checked_on_both_sides(grid, lwr, uniform):
    rho = gaussian(grid.x, 0.5, -10.0, 1.0)
    with pytest.raises(TruncatedSupportError):
        build_initial_state(rho, np.ones(grid.N), lwr, uniform, grid)


def test_zero_psi_report(grid, lwr, uniform):
    st = state_from_psi(gaussian(grid.x), np.zeros(grid.N), lwr, uniform, grid)
    rep = compute_F0_G0(st)
    assert rep.sup_F0 == 0.0 and rep.sup_G0 == 0.0
    assert rep.satisfies_A4 and rep.satisfies_A5
    assert validate_assumptions(st, rep).passed


def test_decreasing_psi_fails_A4(grid, lwr, uniform):
    rho = gaussian(grid.x)
    psi = -0.05 * np.exp(-(grid.x - 2.0) ** 2) * 0 - 0.01 * np.tanh(grid.x)
    st = state_from_psi(rho, psi, lwr, uniform, grid)
    rep = compute_F0_G0(st)
    assert not rep.satisfies_A4
    assert rep.violations["A4"]
    assert "A4" in validate_assumptions(st, rep).failed


def test_psi_growth_at_vacuum_fails_A5(grid, lwr, uniform):
    rho = gaussian(grid.x)
    psi = -0.1 + 0.05 * (1 + np.tanh(grid.x - 15.0))
    st = state_from_psi(rho, psi, lwr, uniform, grid)
    rep = compute_F0_G0(st)
    assert not rep.satisfies_A5
    assert all(x > 4.0 for x in rep.violations["A5"])


def test_F0_constant_and_G0_converges(lwr, uniform):
    c = 0.1
    sups = []
    for N in (1000, 2000, 4000):
        g = Grid(-40.0, 20.0, N)
        rho, psi = smoothed_plateau(g.x, psi_slope=c)
        st = state_from_psi(rho, psi, lwr, uniform, g)
        rep = compute_F0_G0(st)
        live = rho > 1e-4
        assert np.all(np.abs(rep.F0[live] - c) <= 1.5 * c * g.dx**2)
        sups.append(rep.sup_G0)
    assert sups[0] / sups[1] > 3.0 and sups[1] / sups[2] > 3.0


def test_roundoff_floor_scales_with_dx():
    from nonlocal_arz.state import RHO_FLOOR, roundoff_floor

    psi = np.full(100, -0.12)
    assert roundoff_floor(psi, 1.0) == RHO_FLOOR
    assert roundoff_floor(psi, 1e-3) == pytest.approx(np.sqrt(np.finfo(float).eps * 0.12 / 1e-3) / 1e-3)
    assert roundoff_floor(np.zeros(10), 1e-4) == RHO_FLOOR


def test_F0_within_1e6_on_fine_grid(lwr, uniform):
    g = Grid(-40.0, 20.0, 30000)
    rho, psi = smoothed_plateau(g.x, psi_slope=0.1)
    rep = compute_F0_G0(state_from_psi(rho, psi, lwr, uniform, g))
    live = rho > 1e-3
    assert np.max(np.abs(rep.F0[live] - 0.1)) <= 1e-6


def test_density_above_one_fails_A2(grid, lwr, uniform):
    rho = gaussian(grid.x, 1.2)
    st = state_from_psi(rho, np.zeros(grid.N), lwr, uniform, grid)
    rep = compute_F0_G0(st)
    assert not rep.satisfies_A2


def test_cap_A2p_for_J2(grid, uniform):
    m = make_pipes_flux(2.0)
    st = state_from_psi(gaussian(grid.x, 0.995), np.zeros(grid.N), m, uniform, grid)
    rep = compute_F0_G0(st, rho_M=m.rho_M)
    assert rep.satisfies_A2 and not rep.satisfies_A2p


def test_rough_data_fails_A3_proxy(grid, lwr, uniform):
    rho = gaussian(grid.x, 0.4)
    rho[400] += 0.3
    rep = compute_F0_G0(state_from_psi(rho, np.zeros(grid.N), lwr, uniform, grid))
    assert not rep.satisfies_A3


def test_summary_notes(grid, lwr, uniform):
    st = preset_state("gaussian-bump", grid, lwr, uniform)
    summ = validate_assumptions(st, compute_F0_G0(st))
    assert summ.passed and summ.failed == []
    assert any("proxy" in n for n in summ.notes)


def test_mass_is_trapezoid(grid, lwr, uniform):
    rho = gaussian(grid.x)
    st = state_from_psi(rho, np.zeros(grid.N), lwr, uniform, grid)
    assert st.mass == pytest.approx(trapezoid_suffix(rho, grid.dx)[0])
    assert st.mass == pytest.approx(0.5 * np.sqrt(np.pi), rel=1e-10)
