import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from nonlocal_arz import (
    Grid,
    InvalidParameterError,
    InvalidStateError,
    ModelVariant,
    NumericalFailure,
    SolverConfig,
    TrafficState,
    confirm_gradient_blowup,
    make_pipes_flux,
    preset_state,
    run,
    stable_dt,
    state_from_psi,
    step,
    uniform_kernel,
    zero_kernel,
)
from nonlocal_arz.kernels import NonlocalFields
from nonlocal_arz.solver import minmod

from conftest import gaussian


def raw_state(grid, rho, u, psi, slowdown=None):
    s = np.ones(grid.N) if slowdown is None else slowdown
    nl = NonlocalFields(np.zeros(grid.N), s, np.zeros(grid.N))
    return TrafficState(0.0, grid, rho, u, psi, nl, float(np.sum(rho) * grid.dx))


def test_variant_parse():
    assert ModelVariant.parse("lwr") is ModelVariant.LWR
    assert ModelVariant.parse("FirstOrderNonlocal") is ModelVariant.FIRST_ORDER_NONLOCAL
    assert ModelVariant.parse("NONLOCAL_ARZ") is ModelVariant.NONLOCAL_ARZ
    assert ModelVariant.LOCAL_ARZ.is_second_order and not ModelVariant.LOCAL_ARZ.is_nonlocal
    with pytest.raises(InvalidParameterError):
        ModelVariant.parse("Godunov")


@pytest.mark.parametrize("kw", [{"cfl": 0.0}, {"cfl": 0.95}, {"order": 3}, {"D_max": 0.0}, {"t_end": -1.0}])
def test_config_validation(kw):
    with pytest.raises(InvalidParameterError):
        SolverConfig(**kw)


def test_dt_vacuum(lwr):
    g = Grid(0.0, 1.0, 100)
    st = raw_state(g, np.zeros(g.N), np.ones(g.N), np.zeros(g.N))
    assert stable_dt(st, "LWR", None, lwr, SolverConfig(cfl=0.5)) == pytest.approx(0.005)


def test_dt_local_arz_half_density(lwr):
    g = Grid(0.0, 1.0, 100)
    st = raw_state(g, np.full(g.N, 0.5), np.full(g.N, 0.5), np.zeros(g.N))
    assert stable_dt(st, "LocalARZ", None, lwr, 0.5) == pytest.approx(0.5 * 0.01 / 0.5)


def test_dt_slowdown_never_smaller(lwr):
    g = Grid(0.0, 1.0, 100)
    rho = np.full(g.N, 0.8)
    u = np.full(g.N, 0.2)
    a = stable_dt(raw_state(g, rho, u, np.zeros(g.N)), "NonlocalARZ", None, lwr, 0.5)
    b = stable_dt(raw_state(g, rho, u, np.zeros(g.N), np.full(g.N, 0.5)), "NonlocalARZ", None, lwr, 0.5)
    assert b >= a


def test_dt_rejects_nan(lwr):
    g = Grid(0.0, 1.0, 100)
    rho = np.zeros(g.N)
    rho[3] = np.nan
    with pytest.raises(InvalidStateError):
        stable_dt(raw_state(g, rho, np.ones(g.N), np.zeros(g.N)), "LWR", None, lwr)


@pytest.mark.parametrize("variant", list(ModelVariant))
def test_vacuum_is_stationary(variant, grid, lwr, uniform):
    st = state_from_psi(np.zeros(grid.N), np.zeros(grid.N), lwr, uniform, grid)
    nxt = step(st, variant, uniform, lwr, 0.01)
    assert nxt.t == pytest.approx(0.01)
    assert np.array_equal(nxt.rho, st.rho) and np.array_equal(nxt.u, st.u)


def test_lwr_mass_per_step(grid, lwr, nokernel):
    st = state_from_psi(gaussian(grid.x, 0.5, 5.0, 2.0), np.zeros(grid.N), lwr, nokernel, grid)
    for _ in range(20):
        nxt = step(st, "LWR", nokernel, lwr, stable_dt(st, "LWR", nokernel, lwr))
        assert abs(nxt.mass - st.mass) <= 1e-12
        st = nxt


def test_zero_psi_nonlocal_matches_first_order(grid, lwr, uniform):
    st = state_from_psi(gaussian(grid.x), np.zeros(grid.N), lwr, uniform, grid)
    dt = stable_dt(st, "NonlocalARZ", uniform, lwr)
    a = step(st, "NonlocalARZ", uniform, lwr, dt)
    b = step(st, "FirstOrderNonlocal", uniform, lwr, dt)
    assert np.max(np.abs(a.rho - b.rho)) <= 1e-12
    assert np.max(np.abs(a.u - b.u)) <= 1e-12


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_failure_carries_stage(grid, lwr, uniform):
    st = state_from_psi(gaussian(grid.x), np.zeros(grid.N), lwr, uniform, grid)
    with pytest.raises(NumericalFailure) as exc:
        step(st, "LWR", uniform, lwr, math.inf)
    assert exc.value.stage == 1


def test_minmod():
    a = np.array([1.0, -1.0, 2.0, 0.0])
    b = np.array([2.0, 1.0, 0.5, 3.0])
    assert np.array_equal(minmod(a, b), [1.0, 0.0, 0.5, 0.0])


def lwr_exact(x, t, a=0.3, w=1.0):
    rho0 = lambda s: a * np.exp(-(s / w) ** 2)
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        g = lambda s: s + (1.0 - 2.0 * rho0(s)) * t - xi
        out[i] = rho0(brentq(g, xi - 3.0, xi + 3.0, xtol=1e-14))
    return out


def test_lwr_convergence_against_characteristics(lwr, nokernel):
    errs = []
    for N in (200, 400, 800):
        g = Grid(-8.0, 12.0, N)
        st = state_from_psi(gaussian(g.x, 0.3), np.zeros(g.N), lwr, nokernel, g)
        rep, _ = run(st, "LWR", nokernel, lwr, SolverConfig(t_end=0.5))
        errs.append(np.sum(np.abs(rep.final_state.rho - lwr_exact(g.x, 0.5))) * g.dx)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.6), orders


def test_first_order_scheme_is_first_order(lwr, nokernel):
    errs = []
    for N in (200, 400, 800):
        g = Grid(-8.0, 12.0, N)
        st = state_from_psi(gaussian(g.x, 0.3), np.zeros(g.N), lwr, nokernel, g)
        rep, _ = run(st, "LWR", nokernel, lwr, SolverConfig(t_end=0.5, order=1))
        errs.append(np.sum(np.abs(rep.final_state.rho - lwr_exact(g.x, 0.5))) * g.dx)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 0.8) & (orders < 1.3)), orders


def test_vacuum_run(grid, lwr, uniform):
    st = state_from_psi(np.zeros(grid.N), np.zeros(grid.N), lwr, uniform, grid)
    rep, snaps = run(st, "NonlocalARZ", uniform, lwr, SolverConfig(t_end=0.5))
    assert rep.outcome == "completed" and rep.t_final == pytest.approx(0.5)
    assert rep.max_grad_rho == 0.0 and rep.mass_drift == 0.0
    assert snaps[-1].t == pytest.approx(0.5)


@pytest.mark.parametrize("variant", list(ModelVariant))
def test_run_monitors(variant, grid, lwr, uniform):
    st = preset_state("gaussian-bump", grid, lwr, uniform, amplitude=0.5, width=1.5, psi_slope=0.1)
    seen = []
    rep, snaps = run(st, variant, uniform, lwr, SolverConfig(t_end=2.0, snapshot_every=10), callback=seen.append)
    assert rep.outcome == "completed" and rep.t_final == 2.0
    assert len(seen) == rep.n_steps + 1
    assert len(snaps) >= rep.n_steps // 10
    assert rep.mass_drift <= 1e-8
    assert rep.rho_range[0] >= -1e-6 and rep.rho_range[1] <= 1.0 + 1e-3
    assert rep.u_range[0] >= -1e-3 and rep.u_range[1] <= 1.0 + 1e-3
    assert rep.min_dpsi >= -1e-3
    assert rep.criterion_integral > 0.0
    assert rep.ux_bound_violation <= 1e-3
    assert any("criterion integral finite" in n for n in rep.notes)
    if not ModelVariant.parse(variant).is_second_order:
        assert np.all(rep.final_state.psi == 0.0)


def test_report_json(grid, lwr, uniform):
    st = preset_state("gaussian-bump", grid, lwr, uniform)
    rep, _ = run(st, "NonlocalARZ", uniform, lwr, SolverConfig(t_end=0.2))
    d = json.loads(rep.to_json())
    assert d["outcome"] == "completed"
    assert len(d["series"]["t"]) == rep.n_steps + 1


def test_truncated_support(lwr, uniform):
    g = Grid(-10.0, 10.0, 400)
    st = state_from_psi(gaussian(g.x, 0.3, 2.0), np.zeros(g.N), lwr, uniform, g)
    rep, _ = run(st, "FirstOrderNonlocal", uniform, lwr, SolverConfig(t_end=20.0))
    assert rep.outcome == "truncated-support"


def test_invariant_breach(grid, lwr, nokernel):
    st = state_from_psi(gaussian(grid.x, 1.2), np.zeros(grid.N), lwr, nokernel, grid)
    rep, _ = run(st, "LWR", nokernel, lwr, SolverConfig(t_end=1.0))
    assert rep.outcome == "invariant-breach"
    assert "density" in rep.notes[0]


def test_step_budget(grid, lwr, uniform):
    st = preset_state("gaussian-bump", grid, lwr, uniform)
    rep, _ = run(st, "LWR", uniform, lwr, SolverConfig(t_end=1.0, max_steps=3))
    assert rep.outcome == "invariant-breach" and rep.n_steps == 3


def test_blowup_detection_and_pre_blowup_state(lwr, nokernel):
    g = Grid(-10.0, 20.0, 1000)
    st = preset_state("gaussian-bump", g, lwr, nokernel, amplitude=0.5, psi_slope=0.1, target_min_du=-0.5)
    rep, _ = run(st, "LocalARZ", nokernel, lwr, SolverConfig(t_end=5.0, D_max=4.0))
    assert rep.outcome == "gradient-blowup"
    assert rep.t_detect < 2.0
    assert rep.pre_blowup_state.t < rep.t_detect


def test_confirmation_rejects_smooth_profile(lwr, uniform):
    mk = lambda g: preset_state("smoothed-plateau", g, lwr, uniform, psi_slope=0.1)
    g = Grid(-38.0, 30.0, 700)
    v = confirm_gradient_blowup(mk, g, "NonlocalARZ", uniform, lwr, SolverConfig(t_end=2.0, D_max=0.1))
    assert v.detected and not v.confirmed
    assert v.ratio < 1.5


def test_confirmation_accepts_shock(lwr, uniform):
    mk = lambda g: preset_state("gaussian-bump", g, lwr, zero_kernel(), amplitude=0.5, psi_slope=0.1,
                                target_min_du=-0.5)
    g = Grid(-10.0, 20.0, 1000)
    v = confirm_gradient_blowup(mk, g, "LocalARZ", uniform, lwr, SolverConfig(t_end=5.0, D_max=5.0))
    assert v.detected and v.confirmed and v.ratio >= 1.5
    assert set(v.to_dict()) >= {"detected", "confirmed", "t_detect", "ratio"}


def test_no_blowup_means_no_refinement(grid, lwr, uniform):
    mk = lambda g: preset_state("gaussian-bump", g, lwr, uniform)
    v = confirm_gradient_blowup(mk, grid, "NonlocalARZ", uniform, lwr, SolverConfig(t_end=0.5))
    assert not v.detected and v.fine is None
