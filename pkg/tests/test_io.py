import json
import math

import numpy as np
import pytest

from nonlocal_arz import io, make_pipes_flux, preset_state, run, SolverConfig, solve_threshold_ode
from nonlocal_arz.phase_plane import Tracer


def test_table_round_trip(tmp_path):
    p = io.write_table(tmp_path / "a" / "t.csv", ("x", "y", "tag"),
                       [(1.0, math.inf, "F"), (2.5, math.nan, "G")], {"k": 3, "skip": None})
    meta, cols = io.read_table(p)
    assert meta == {"k": 3.0}
    assert np.array_equal(cols["x"], [1.0, 2.5])
    assert cols["y"][0] == math.inf and math.isnan(cols["y"][1])
    assert list(cols["tag"]) == ["F", "G"]


@pytest.mark.parametrize("C", [0.5, 3.0])
def test_curve_round_trip(tmp_path, pipes2, C):
    c = solve_threshold_ode("eta", pipes2, C, self_check=False)
    back = io.read_curve(io.write_curve(tmp_path / "c.csv", c))
    r = np.linspace(0.0, 0.6, 50)
    assert np.allclose(back(r), c(r), equal_nan=True)
    assert back.rho_star == c.rho_star and back.C_eta == C and back.J == 2.0
    header = (tmp_path / "c.csv").read_text().splitlines()
    assert "rho,value,active_branch" in header
    assert any(h.startswith("# rho_star=") for h in header) == (c.rho_star is not None)


def test_snapshots_trace_phase_plane(tmp_path, grid, lwr, uniform):
    st = preset_state("gaussian-bump", grid, lwr, uniform, psi_slope=0.1)
    tr = Tracer([0.0, 1.0], lwr)
    rep, snaps = run(st, "NonlocalARZ", uniform, lwr, SolverConfig(t_end=0.3, snapshot_every=5),
                     callback=tr)
    traces = tr.finish(rep.outcome)
    _, cols = io.read_table(io.write_snapshots(tmp_path / "s.csv", snaps))
    assert tuple(cols) == io.SNAPSHOT_COLUMNS
    assert cols["x"].size == len(snaps) * grid.N
    meta, cols = io.read_table(io.write_trace(tmp_path / "t.csv", traces[0],
                                              solve_threshold_ode("eta", lwr)))
    assert tuple(cols) == io.TRACE_COLUMNS and meta["reason"] == "completed"
    assert np.all(np.isfinite(cols["eta_at_rho"]))
    _, cols = io.read_table(io.write_trace(tmp_path / "t2.csv", traces[0]))
    assert np.all(np.isnan(cols["eta_at_rho"]))
    text = io.write_phase_plane(tmp_path / "pp.csv", traces).read_text()
    assert text.startswith("seed,rho,d\n") and text.count("\n\n\n") == 1


def test_json_cleans_non_finite(tmp_path):
    p = io.write_json(tmp_path / "x.json", {"a": math.inf, "b": [math.nan, -math.inf],
                                            "c": np.arange(3), "d": np.float64(1.5)})
    d = json.loads(p.read_text())
    assert d == {"a": "inf", "b": [None, "-inf"], "c": [0, 1, 2], "d": 1.5}
    with pytest.raises(TypeError):
        io.write_json(tmp_path / "y.json", {"a": object()})
