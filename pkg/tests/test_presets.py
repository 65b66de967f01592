import numpy as np
import pytest

from nonlocal_arz import Grid, InvalidParameterError, preset_state, read_initial_csv, write_initial_csv
from nonlocal_arz.presets import PRESETS, preset_fields
from nonlocal_arz.thresholds import sigma_closed_form_values


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_offset_structure(name, lwr, uniform):
    grid = Grid(-40.0, 30.0, 1400)
    rho, psi = preset_fields(name, grid, psi_slope=0.1)
    assert np.all(rho >= 0.0)
    assert np.all(psi <= 0.0)
    assert np.all(np.diff(psi) >= -1e-15)
    st = preset_state(name, grid, lwr, uniform, psi_slope=0.1)
    assert np.all((st.u >= 0.0) & (st.u <= 1.0))


def test_unknown_preset(grid):
    with pytest.raises(InvalidParameterError):
        preset_fields("nope", grid)


@pytest.mark.parametrize("J", [1.0, 2.0])
def test_plateau_is_subcritical_for_wide_left_edge(J):
    from nonlocal_arz import make_pipes_flux

    m = make_pipes_flux(J)
    g = Grid(-60.0, 20.0, 4000)
    rho, _ = preset_fields("smoothed-plateau", g, amplitude=0.4, width_left=1.2 * J)
    d = np.gradient(rho, g.dx)
    assert np.all(d <= sigma_closed_form_values(m, rho) + 1e-15)


def test_width_tuning(lwr, nokernel):
    g = Grid(-10.0, 20.0, 1500)
    st = preset_state("gaussian-bump", g, lwr, nokernel, amplitude=0.5, psi_slope=0.1,
                      target_min_du=-0.5)
    assert np.min(np.gradient(st.u, g.dx, edge_order=2)) == pytest.approx(-0.5, abs=1e-9)


def test_width_tuning_rejects_positive(lwr, nokernel, grid):
    with pytest.raises(InvalidParameterError):
        preset_state("gaussian-bump", grid, lwr, nokernel, target_min_du=0.1)


def test_csv_round_trip(tmp_path, grid, lwr, uniform):
    st = preset_state("riemann-smoothed", grid, lwr, uniform, psi_slope=0.05)
    p = tmp_path / "init.csv"
    write_initial_csv(p, st)
    back = read_initial_csv(p, lwr, uniform)
    assert back.grid.N == grid.N
    assert back.grid.dx == pytest.approx(grid.dx)
    assert np.array_equal(back.rho, st.rho) and np.array_equal(back.u, st.u)
    assert np.max(np.abs(back.psi - st.psi)) <= 1e-15


def test_csv_nonuniform(tmp_path, lwr, uniform):
    p = tmp_path / "bad.csv"
    p.write_text("x,rho0,u0\n0,0,1\n1,0,1\n3,0,1\n")
    with pytest.raises(InvalidParameterError):
        read_initial_csv(p, lwr, uniform)
