"""Grid, traffic state and the checks applied to initial data.

The real line is truncated to [x_left, x_right] with N uniform cells. The
initial density must vanish (to 1e-12) at both ends; velocity u and offset
psi may approach non-zero constants there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .flux import FluxModel
from .kernels import (
    Kernel,
    NonlocalFields,
    check_support,
    compute_rho_tilde,
    trapezoid_suffix,
)

EPS_VAC = 1e-10
# F0, G0 are not evaluated below this density; see roundoff_floor
RHO_FLOOR = 1e-6
G_ROUNDOFF = 1e-3
STATE_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    x_left: float
    x_right: float
    N: int

    def __post_init__(self):
        if self.N < 16:
            raise InvalidParameterError(f"need N >= 16 cells, got {self.N}")
        if not self.x_right > self.x_left:
            raise InvalidParameterError("x_right must exceed x_left")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.N

    @property
    def x(self) -> np.ndarray:
        return self.x_left + (np.arange(self.N) + 0.5) * self.dx

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.x_left, self.x_right, self.N * factor)


@dataclass(frozen=True)
class TrafficState:
    """Fields at one time level. Treated as an immutable value."""

    t: float
    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    psi: np.ndarray
    nonlocal_fields: NonlocalFields
    mass: float

    @property
    def slowdown(self) -> np.ndarray:
        return self.nonlocal_fields.slowdown

    @property
    def rho_tilde(self) -> np.ndarray:
        return self.nonlocal_fields.rho_tilde

    def coupling_error(self, model: FluxModel) -> float:
        """max |u - (psi + U(rho) exp(-rho_tilde))|."""
        return float(np.max(np.abs(self.u - self.psi - model.U(self.rho) * self.slowdown)))


def discrete_mass(rho: np.ndarray, dx: float) -> float:
    return float(trapezoid_suffix(np.asarray(rho, dtype=float), dx)[0])


def build_initial_state(rho0, u0, model: FluxModel, kernel: Kernel, grid: Grid) -> TrafficState:
    """Assemble the t = 0 state; psi0 = u0 - U(rho0) exp(-rho_tilde0)."""
    rho0 = np.asarray(rho0, dtype=float).copy()
    u0 = np.asarray(u0, dtype=float).copy()
    if rho0.shape != (grid.N,) or u0.shape != (grid.N,):
        raise InvalidParameterError("initial fields must have shape (N,)")
    check_support(rho0, where="both")
    nl = compute_rho_tilde(rho0, kernel, grid)
    psi0 = u0 - model.U(rho0) * nl.slowdown
    return TrafficState(0.0, grid, rho0, u0, psi0, nl, discrete_mass(rho0, grid.dx))


def state_from_psi(rho0, psi0, model: FluxModel, kernel: Kernel, grid: Grid) -> TrafficState:
    """Same as :func:`build_initial_state` but prescribing psi0 instead of u0.

    psi0 is stored as given rather than recovered from u0, which would cost
    an absolute roundoff of eps * |u| that F0 and G0 amplify near vacuum.
    """
    rho0 = np.asarray(rho0, dtype=float).copy()
    psi0 = np.asarray(psi0, dtype=float).copy()
    if rho0.shape != (grid.N,) or psi0.shape != (grid.N,):
        raise InvalidParameterError("initial fields must have shape (N,)")
    check_support(rho0, where="both")
    nl = compute_rho_tilde(rho0, kernel, grid)
    u0 = psi0 + model.U(rho0) * nl.slowdown
    return TrafficState(0.0, grid, rho0, u0, psi0, nl, discrete_mass(rho0, grid.dx))


def ratio_fields(psi, rho, dx: float, eps: float = EPS_VAC):
    """F = psi_x / rho and G = F_x / rho on cells with rho >= eps, zero elsewhere.

    F is undefined at vacuum; before differentiating it is filled there by
    linear interpolation between live cells so the vacuum edge does not
    register as a jump. Returns (F, G, dpsi).
    """
    dpsi = np.gradient(psi, dx, edge_order=2)
    live = rho >= eps
    F = np.zeros_like(rho)
    G = np.zeros_like(rho)
    if not np.any(live):
        return F, G, dpsi
    F[live] = dpsi[live] / rho[live]
    idx = np.arange(rho.size)
    F_ext = np.interp(idx, idx[live], F[live])
    dF = np.gradient(F_ext, dx, edge_order=2)
    G[live] = dF[live] / rho[live]
    return F, G, dpsi


def roundoff_floor(psi, dx: float, level: float = G_ROUNDOFF) -> float:
    """Density below which roundoff in psi swamps G = (psi_x / rho)_x / rho.

    psi is stored to an absolute accuracy of about eps * max|psi|; two
    difference quotients and two divisions by rho amplify that by
    1 / (dx rho)^2, so G carries noise below ``level`` only for
    rho >= sqrt(eps * max|psi| / level) / dx.
    """
    scale = float(np.max(np.abs(psi), initial=0.0))
    return max(RHO_FLOOR, math.sqrt(np.finfo(float).eps * scale / level) / dx)


@dataclass
class AssumptionReport:
    mass: float
    satisfies_A1: bool
    satisfies_A2: bool
    satisfies_A2p: bool
    satisfies_A3: bool
    satisfies_A4: bool
    satisfies_A5: bool
    sup_F0: float
    sup_G0: float
    violations: dict = field(default_factory=dict)
    F0: Optional[np.ndarray] = field(default=None, repr=False)
    G0: Optional[np.ndarray] = field(default=None, repr=False)

    def flags(self) -> dict:
        return {
            "A1": self.satisfies_A1,
            "A2": self.satisfies_A2,
            "A2p": self.satisfies_A2p,
            "A3": self.satisfies_A3,
            "A4": self.satisfies_A4,
            "A5": self.satisfies_A5,
        }


def _locations(grid: Grid, mask: np.ndarray, limit: int = 20) -> list:
    return [float(v) for v in grid.x[mask][:limit]]


def _grid_smooth(g: np.ndarray) -> bool:
    if not np.all(np.isfinite(g)):
        return False
    span = float(np.max(g) - np.min(g))
    d2 = np.abs(g[2:] - 2.0 * g[1:-1] + g[:-2])
    return bool(np.max(d2, initial=0.0) <= 0.1 * span + STATE_TOL)


def compute_F0_G0(
    state: TrafficState,
    eps_vac: float = EPS_VAC,
    rho_M: float = 1.0,
    rho_floor: Optional[float] = None,
) -> AssumptionReport:
    """Evaluate F0 = psi0'/rho0 and G0 = F0'/rho0 and flag (A1)-(A5).

    At vacuum cells (rho0 < eps_vac) the offset must not grow:
    |psi0'| < eps_vac there, otherwise (A5) fails. F0 and G0 are reported
    as zero wherever rho0 < max(eps_vac, rho_floor); in the far tails the
    quotients carry no information beyond floating-point noise. The default
    floor comes from :func:`roundoff_floor`.
    """
    grid = state.grid
    rho, u = state.rho, state.u
    if rho_floor is None:
        rho_floor = roundoff_floor(state.psi, grid.dx)
    F0, G0, dpsi = ratio_fields(state.psi, rho, grid.dx, max(eps_vac, rho_floor))
    vac = rho < eps_vac
    viol = {}

    a2_mask = (rho < -STATE_TOL) | (rho > 1.0 + STATE_TOL) | (u < -STATE_TOL) | (u > 1.0 + STATE_TOL)
    a2p_mask = (rho < -STATE_TOL) | (rho > rho_M + STATE_TOL) | (u < -STATE_TOL) | (u > 1.0 + STATE_TOL)
    a4_mask = dpsi < -eps_vac
    a5_mask = vac & (np.abs(dpsi) >= eps_vac)
    a3 = _grid_smooth(rho) and _grid_smooth(u)
    finite = bool(np.all(np.isfinite(F0)) and np.all(np.isfinite(G0)))

    for name, mask in (("A2", a2_mask), ("A2p", a2p_mask), ("A4", a4_mask), ("A5", a5_mask)):
        if np.any(mask):
            viol[name] = _locations(grid, mask)
    if not a3:
        viol["A3"] = ["grid-scale second differences exceed 10% of the field range"]

    return AssumptionReport(
        mass=state.mass,
        satisfies_A1=bool(math.isfinite(state.mass)),
        satisfies_A2=not np.any(a2_mask),
        satisfies_A2p=not np.any(a2p_mask),
        satisfies_A3=a3,
        satisfies_A4=not np.any(a4_mask),
        satisfies_A5=(not np.any(a5_mask)) and finite,
        sup_F0=float(np.max(np.abs(F0))),
        sup_G0=float(np.max(np.abs(G0))),
        violations=viol,
        F0=F0,
        G0=G0,
    )


@dataclass
class AssumptionSummary:
    passed: bool
    flags: dict
    failed: list
    violations: dict
    notes: list


def validate_assumptions(state: TrafficState, report: AssumptionReport) -> AssumptionSummary:
    """Aggregate the assumption flags. Failures are data, never exceptions."""
    flags = report.flags()
    failed = [k for k, v in flags.items() if not v]
    notes = [
        "A1 holds trivially on a finite grid (recorded mass %.6g)" % report.mass,
        "A3 is a grid-scale smoothness proxy, not a Sobolev-norm certificate",
    ]
    return AssumptionSummary(not failed, flags, failed, dict(report.violations), notes)
