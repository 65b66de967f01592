"""Named analytic initial data and CSV loading.

Every preset returns a density profile and a non-decreasing velocity offset
psi0. The offset is built as psi0 = -c * int_x^inf rho0, so that
psi0' = c rho0 (F0 = c, G0 = 0) and psi0 <= 0, which keeps u0 within [0, 1].
"""

from __future__ import annotations

import csv
from typing import Callable, Dict

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .errors import InvalidParameterError
from .flux import FluxModel
from .kernels import Kernel, compute_rho_tilde, trapezoid_suffix
from .state import Grid, TrafficState, build_initial_state, state_from_psi


def _offset(rho, dx, psi_slope, psi_jump=0.0, jump_profile=None):
    psi = -psi_slope * trapezoid_suffix(rho, dx)
    if psi_jump:
        psi = psi + psi_jump * (jump_profile - 1.0)
    return psi


def gaussian_bump(x, amplitude=0.5, center=0.0, width=1.0, psi_slope=0.0):
    rho = amplitude * np.exp(-(((x - center) / width) ** 2))
    return rho, _offset(rho, x[1] - x[0], psi_slope)


def smoothed_plateau(
    x,
    amplitude=0.4,
    left=-1.0,
    right=1.0,
    width_left=1.25,
    width_right=0.5,
    psi_slope=0.0,
):
    """Product of two logistic edges.

    The left edge has logarithmic slope at most 1/width_left, so for the
    Pipes law with exponent J the profile satisfies rho' <= rho (1 - rho)/J
    whenever width_left > J and amplitude < 1.
    """
    rho = amplitude * expit((x - left) / width_left) * expit((right - x) / width_right)
    return rho, _offset(rho, x[1] - x[0], psi_slope)


def riemann_smoothed(
    x,
    rho_left=0.2,
    rho_right=0.5,
    left=-2.0,
    middle=0.0,
    right=2.0,
    width=0.3,
    psi_slope=0.0,
    psi_jump=0.0,
):
    """Two plateaus joined by a smoothed jump at ``middle``."""
    edge_l = expit((x - left) / width)
    edge_r = expit((right - x) / width)
    step = expit((x - middle) / width)
    rho = edge_l * edge_r * (rho_left + (rho_right - rho_left) * step)
    return rho, _offset(rho, x[1] - x[0], psi_slope, psi_jump, step)


PRESETS: Dict[str, Callable] = {
    "gaussian-bump": gaussian_bump,
    "smoothed-plateau": smoothed_plateau,
    "riemann-smoothed": riemann_smoothed,
}


def preset_fields(name: str, grid: Grid, **params):
    try:
        fn = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown preset {name!r}; have {sorted(PRESETS)}") from None
    return fn(grid.x, **params)


def preset_state(name: str, grid: Grid, model: FluxModel, kernel: Kernel, **params) -> TrafficState:
    """Initial state for a named preset.

    With ``target_min_du`` the preset's ``width`` is tuned so that the
    initial velocity has minimal slope min u0' equal to that target.
    """
    target = params.pop("target_min_du", None)
    if target is not None:
        params["width"] = tune_width(name, grid, model, kernel, float(target), **params)
    rho0, psi0 = preset_fields(name, grid, **params)
    return state_from_psi(rho0, psi0, model, kernel, grid)


def tune_width(name, grid, model, kernel, target, lo=0.05, hi=5.0, **params) -> float:
    if target >= 0.0:
        raise InvalidParameterError("target_min_du must be negative")

    def gap(width):
        rho, psi = preset_fields(name, grid, **dict(params, width=width))
        u = psi + model.U(rho) * compute_rho_tilde(rho, kernel, grid, check=False).slowdown
        return float(np.min(np.gradient(u, grid.dx, edge_order=2))) - target

    return float(brentq(gap, lo, hi, xtol=1e-12))


def read_initial_csv(path, model: FluxModel, kernel: Kernel) -> TrafficState:
    """Load columns x, rho0, u0 written on a uniform cell-centre grid."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
    x = np.array([float(r["x"]) for r in rows])
    rho0 = np.array([float(r["rho0"]) for r in rows])
    u0 = np.array([float(r["u0"]) for r in rows])
    dx = float(np.mean(np.diff(x)))
    if not np.allclose(np.diff(x), dx, rtol=1e-6, atol=1e-12):
        raise InvalidParameterError("CSV grid must be uniform")
    grid = Grid(float(x[0] - 0.5 * dx), float(x[-1] + 0.5 * dx), x.size)
    return build_initial_state(rho0, u0, model, kernel, grid)


def write_initial_csv(path, state: TrafficState) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "rho0", "u0"])
        for row in zip(state.grid.x, state.rho, state.u):
            w.writerow([repr(float(v)) for v in row])
