"""Method-of-lines solver for the LWR / ARZ model hierarchy.

Density is advanced in conservative form with a local Lax-Friedrichs flux
on rho*u (MUSCL reconstruction with minmod slopes for order 2); the offset
psi is transported non-conservatively by upwinding with velocity u. Time
stepping is the three-stage SSP Runge-Kutta scheme, and u = psi + U(rho) *
exp(-rho_tilde) is re-evaluated at every stage.

Boundaries are ghost cells with rho = 0 and psi, u extrapolated as constants.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import trapezoid

from .errors import InvalidParameterError, InvalidStateError, NumericalFailure
from .flux import FluxModel
from .kernels import SUPPORT_TOL, Kernel, compute_rho_tilde, zero_kernel
from .state import Grid, TrafficState, discrete_mass, ratio_fields

RHO_LOW_TOL = 1e-6
RHO_HIGH_TOL = 1e-3
U_TOL = 1e-3
PSI_TOL = 1e-3
BREACH_FACTOR = 10.0
F_SAMPLE_RHO = 0.05


class ModelVariant(str, enum.Enum):
    LWR = "LWR"
    FIRST_ORDER_NONLOCAL = "FirstOrderNonlocal"
    LOCAL_ARZ = "LocalARZ"
    NONLOCAL_ARZ = "NonlocalARZ"

    @property
    def is_nonlocal(self) -> bool:
        return self in (ModelVariant.FIRST_ORDER_NONLOCAL, ModelVariant.NONLOCAL_ARZ)

    @property
    def is_second_order(self) -> bool:
        return self in (ModelVariant.LOCAL_ARZ, ModelVariant.NONLOCAL_ARZ)

    @classmethod
    def parse(cls, value) -> "ModelVariant":
        if isinstance(value, cls):
            return value
        for v in cls:
            if value in (v.value, v.name) or str(value).lower() == v.value.lower():
                return v
        raise InvalidParameterError(f"unknown model variant {value!r}")


def effective_kernel(variant: ModelVariant, kernel: Optional[Kernel]) -> Kernel:
    """Local variants see no look-ahead regardless of the configured kernel."""
    if not variant.is_nonlocal or kernel is None:
        return zero_kernel()
    return kernel


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = 0.4
    t_end: float = 1.0
    order: int = 2
    D_max: float = 1e3
    snapshot_every: int = 0
    limiter: bool = True
    enforce_invariants: bool = True
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (0.0 < self.cfl <= 0.9):
            raise InvalidParameterError("cfl must lie in (0, 0.9]")
        if self.order not in (1, 2):
            raise InvalidParameterError("spatial order must be 1 or 2")
        if not self.D_max > 0.0:
            raise InvalidParameterError("D_max must be positive")
        if self.t_end < 0.0:
            raise InvalidParameterError("t_end must be non-negative")


@dataclass(frozen=True)
class Snapshot:
    t: float
    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    psi: np.ndarray
    slowdown: np.ndarray
    rho_tilde: np.ndarray

    @classmethod
    def of(cls, state: TrafficState) -> "Snapshot":
        return cls(state.t, state.grid.x, state.rho, state.u, state.psi,
                   state.slowdown, state.rho_tilde)

    @property
    def d_rho_dx(self) -> np.ndarray:
        return np.gradient(self.rho, self.x[1] - self.x[0], edge_order=2)


@dataclass
class RunReport:
    outcome: str
    t_final: float
    n_steps: int
    max_grad_rho: float
    initial_grad_rho: float
    criterion_integral: float
    mass_drift: float
    min_dpsi: float
    rho_range: tuple
    u_range: tuple
    max_F: float
    ux_bound_violation: float
    t_detect: Optional[float] = None
    notes: List[str] = field(default_factory=list)
    series: dict = field(default_factory=dict, repr=False)
    final_state: Optional[TrafficState] = field(default=None, repr=False)
    pre_blowup_state: Optional[TrafficState] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items()
             if k not in ("final_state", "pre_blowup_state", "series")}
        d["series"] = {k: [float(x) for x in v] for k, v in self.series.items()}
        return d

    def to_json(self, path=None, indent=1) -> str:
        text = json.dumps(self.to_dict(), indent=indent, default=_json_default)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(type(o))


def minmod(a, b):
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _slopes(q, order, limiter):
    if order == 1:
        return np.zeros_like(q)
    dl = np.empty_like(q)
    dr = np.empty_like(q)
    dl[1:] = q[1:] - q[:-1]
    dl[0] = 0.0
    dr[:-1] = q[1:] - q[:-1]
    dr[-1] = 0.0
    if limiter:
        return minmod(dl, dr)
    return 0.5 * (dl + dr)


class _Discretization:
    """Semi-discrete right-hand side for one (variant, kernel, flux, grid)."""

    def __init__(self, variant, kernel, flux: FluxModel, grid: Grid, order=2, limiter=True):
        self.variant = ModelVariant.parse(variant)
        self.kernel = effective_kernel(self.variant, kernel)
        self.flux = flux
        self.grid = grid
        self.order = order
        self.limiter = limiter

    def velocity(self, rho, psi):
        nl = compute_rho_tilde(rho, self.kernel, self.grid, check=False)
        r = np.clip(rho, 0.0, 1.0)
        u = psi + self.flux.U(r) * nl.slowdown
        return u, nl

    def rhs(self, rho, psi):
        u, nl = self.velocity(rho, psi)
        s = nl.slowdown
        g = 2
        rho_g = np.pad(rho, g, mode="constant", constant_values=0.0)
        u_g = np.pad(u, g, mode="edge")
        s_g = np.pad(s, g, mode="edge")
        sr = _slopes(rho_g, self.order, self.limiter)
        su = _slopes(u_g, self.order, self.limiter)
        # faces between padded cells j and j+1, j = 1 .. N+1  -> N+1 faces
        L = slice(1, -2)
        R = slice(2, -1)
        rL = rho_g[L] + 0.5 * sr[L]
        rR = rho_g[R] - 0.5 * sr[R]
        uL = u_g[L] + 0.5 * su[L]
        uR = u_g[R] - 0.5 * su[R]
        fp = self.flux
        lamL = uL + rL * fp.dU(np.clip(rL, 0.0, 1.0)) * s_g[L]
        lamR = uR + rR * fp.dU(np.clip(rR, 0.0, 1.0)) * s_g[R]
        a = np.maximum.reduce([np.abs(uL), np.abs(uR), np.abs(lamL), np.abs(lamR)])
        F = 0.5 * (rL * uL + rR * uR) - 0.5 * a * (rR - rL)
        drho = -(F[1:] - F[:-1]) / self.grid.dx

        if self.variant.is_second_order:
            psi_g = np.pad(psi, g, mode="edge")
            sp = _slopes(psi_g, self.order, self.limiter)
            pL = psi_g[L] + 0.5 * sp[L]
            pR = psi_g[R] - 0.5 * sp[R]
            back = pL[1:] - pL[:-1]
            fwd = pR[1:] - pR[:-1]
            dpsi = -(np.maximum(u, 0.0) * back + np.minimum(u, 0.0) * fwd) / self.grid.dx
        else:
            dpsi = np.zeros_like(psi)
        return drho, dpsi

    def state(self, t, rho, psi, mass=None) -> TrafficState:
        u, nl = self.velocity(rho, psi)
        if mass is None:
            mass = discrete_mass(rho, self.grid.dx)
        return TrafficState(t, self.grid, rho, u, psi, nl, mass)


def _speeds(state: TrafficState, variant, flux: FluxModel):
    s = state.slowdown if ModelVariant.parse(variant).is_nonlocal else np.ones_like(state.rho)
    r = np.clip(state.rho, 0.0, 1.0)
    return np.abs(state.u), np.abs(state.u + state.rho * flux.dU(r) * s)


def stable_dt(state: TrafficState, variant, kernel, flux: FluxModel, config=None) -> float:
    """cfl * dx / max(|u|, |u + rho U'(rho) exp(-rho_tilde)|)."""
    cfl = config.cfl if isinstance(config, SolverConfig) else (config if config else SolverConfig().cfl)
    for name in ("rho", "u", "psi"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise InvalidStateError(f"non-finite values in {name}")
    a, b = _speeds(state, variant, flux)
    vmax = max(float(np.max(a)), float(np.max(b)), 1e-12)
    return cfl * state.grid.dx / vmax


def normalize_state(state: TrafficState, variant, kernel, flux: FluxModel) -> TrafficState:
    """Zero psi for first-order variants and recompute u, rho_tilde consistently."""
    variant = ModelVariant.parse(variant)
    disc = _Discretization(variant, kernel, flux, state.grid)
    psi = state.psi if variant.is_second_order else np.zeros_like(state.psi)
    return disc.state(state.t, state.rho, psi, state.mass)


def _ssp_rk3(disc: _Discretization, rho, psi, dt, t):
    def check(q, p, stage):
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise NumericalFailure(f"non-finite values after SSP-RK stage {stage}", t=t, stage=stage)

    k_r, k_p = disc.rhs(rho, psi)
    r1 = rho + dt * k_r
    p1 = psi + dt * k_p
    check(r1, p1, 1)
    k_r, k_p = disc.rhs(r1, p1)
    r2 = 0.75 * rho + 0.25 * (r1 + dt * k_r)
    p2 = 0.75 * psi + 0.25 * (p1 + dt * k_p)
    check(r2, p2, 2)
    k_r, k_p = disc.rhs(r2, p2)
    r3 = rho / 3.0 + 2.0 / 3.0 * (r2 + dt * k_r)
    p3 = psi / 3.0 + 2.0 / 3.0 * (p2 + dt * k_p)
    check(r3, p3, 3)
    return r3, p3


def step(state: TrafficState, variant, kernel, flux: FluxModel, dt: float,
         order: int = 2, limiter: bool = True) -> TrafficState:
    """Advance one SSP-RK3 step of size ``dt``."""
    variant = ModelVariant.parse(variant)
    disc = _Discretization(variant, kernel, flux, state.grid, order, limiter)
    psi = state.psi if variant.is_second_order else np.zeros_like(state.psi)
    rho, psi = _ssp_rk3(disc, state.rho, psi, dt, state.t)
    return disc.state(state.t + dt, rho, psi)


class _Monitor:
    def __init__(self, flux: FluxModel, kernel: Kernel, variant: ModelVariant, m0: float):
        self.flux = flux
        self.w0 = kernel.w0
        self.variant = variant
        self.m0 = m0
        self.U_C1 = flux.U_C1_norm
        self.series = {k: [] for k in (
            "t", "mass", "rho_min", "rho_max", "u_min", "u_max", "min_dpsi",
            "grad_rho", "max_F", "ux_bound_gap")}

    def record(self, st: TrafficState):
        dx = st.grid.dx
        drho = np.gradient(st.rho, dx, edge_order=2)
        du = np.gradient(st.u, dx, edge_order=2)
        dpsi = np.gradient(st.psi, dx, edge_order=2)
        grad = float(np.max(np.abs(drho)))
        lower = -self.U_C1 * np.abs(drho) - self.w0
        if self.variant.is_second_order:
            F, _, _ = ratio_fields(st.psi, st.rho, dx, F_SAMPLE_RHO)
            maxF = float(np.max(F))
        else:
            maxF = 0.0
        s = self.series
        s["t"].append(st.t)
        s["mass"].append(st.mass)
        s["rho_min"].append(float(np.min(st.rho)))
        s["rho_max"].append(float(np.max(st.rho)))
        s["u_min"].append(float(np.min(st.u)))
        s["u_max"].append(float(np.max(st.u)))
        s["min_dpsi"].append(float(np.min(dpsi)))
        s["grad_rho"].append(grad)
        s["max_F"].append(maxF)
        s["ux_bound_gap"].append(float(np.max(lower - du)))
        return grad

    def breach(self, rho_M: float) -> Optional[str]:
        s = self.series
        k = BREACH_FACTOR
        if s["rho_min"][-1] < -k * RHO_LOW_TOL or s["rho_max"][-1] > rho_M + k * RHO_HIGH_TOL:
            return "density left [0, rho_M]"
        if s["u_min"][-1] < -k * U_TOL or s["u_max"][-1] > 1.0 + k * U_TOL:
            return "velocity left [0, 1]"
        if s["min_dpsi"][-1] < -k * PSI_TOL:
            return "psi lost monotonicity"
        return None


def run(initial: TrafficState, variant, kernel, flux: FluxModel, config: SolverConfig,
        callback: Optional[Callable[[TrafficState], None]] = None):
    """Integrate to ``config.t_end`` or until a gradient blowup / breach.

    Returns ``(report, snapshots)``. ``callback`` is invoked with every
    accepted state (including the initial one), which lets characteristic
    traces follow the run without storing every time level.
    """
    variant = ModelVariant.parse(variant)
    kern = effective_kernel(variant, kernel)
    state = normalize_state(initial, variant, kern, flux)
    disc = _Discretization(variant, kern, flux, state.grid, config.order, config.limiter)
    mon = _Monitor(flux, kern, variant, state.mass)
    snapshots = [Snapshot.of(state)]
    grad0 = mon.record(state)
    if callback:
        callback(state)

    outcome = "completed"
    notes = []
    t_detect = None
    prev = state
    n = 0
    while state.t < config.t_end - 1e-14 and n < config.max_steps:
        dt = min(stable_dt(state, variant, kern, flux, config), config.t_end - state.t)
        rho, psi = _ssp_rk3(disc, state.rho, state.psi, dt, state.t)
        prev, state = state, disc.state(state.t + dt, rho, psi)
        n += 1
        grad = mon.record(state)
        if callback:
            callback(state)
        if config.snapshot_every and n % config.snapshot_every == 0:
            snapshots.append(Snapshot.of(state))
        if not kern.is_zero and abs(state.rho[-1]) > SUPPORT_TOL:
            outcome = "truncated-support"
            notes.append(f"density {state.rho[-1]:.2e} reached the right boundary")
            break
        if grad > config.D_max:
            outcome = "gradient-blowup"
            t_detect = state.t
            break
        if config.enforce_invariants:
            why = mon.breach(flux.rho_M)
            if why:
                outcome = "invariant-breach"
                notes.append(why)
                break
    if n >= config.max_steps and outcome == "completed" and state.t < config.t_end - 1e-14:
        outcome = "invariant-breach"
        notes.append("step budget exhausted")

    if snapshots[-1].t != state.t:
        snapshots.append(Snapshot.of(state))

    s = mon.series
    t = np.asarray(s["t"])
    g = np.asarray(s["grad_rho"])
    masses = np.asarray(s["mass"])
    m0 = masses[0]
    drift = float(np.max(np.abs(masses - m0)) / m0) if m0 > 0 else float(np.max(np.abs(masses)))
    notes.append(f"criterion integral finite at resolution N={state.grid.N}")
    report = RunReport(
        outcome=outcome,
        t_final=float(state.t),
        n_steps=n,
        max_grad_rho=float(np.max(g)),
        initial_grad_rho=float(grad0),
        criterion_integral=float(trapezoid(g, t)) if t.size > 1 else 0.0,
        mass_drift=drift,
        min_dpsi=float(np.min(s["min_dpsi"])),
        rho_range=(float(np.min(s["rho_min"])), float(np.max(s["rho_max"]))),
        u_range=(float(np.min(s["u_min"])), float(np.max(s["u_max"]))),
        max_F=float(np.max(s["max_F"])),
        ux_bound_violation=float(np.max(s["ux_bound_gap"])),
        t_detect=t_detect,
        notes=notes,
        series={k: np.asarray(v) for k, v in s.items()},
        final_state=state,
        pre_blowup_state=prev if outcome == "gradient-blowup" else None,
    )
    return report, snapshots


@dataclass
class BlowupVerdict:
    detected: bool
    confirmed: bool
    t_detect: Optional[float]
    coarse_max_grad: Optional[float]
    fine_max_grad: Optional[float]
    ratio: Optional[float]
    coarse: RunReport = field(repr=False)
    fine: Optional[RunReport] = field(default=None, repr=False)

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "detected", "confirmed", "t_detect", "coarse_max_grad", "fine_max_grad", "ratio")}


def confirm_gradient_blowup(make_state: Callable[[Grid], TrafficState], grid: Grid, variant,
                            kernel, flux: FluxModel, config: SolverConfig,
                            factor: int = 2, min_ratio: float = 1.5) -> BlowupVerdict:
    """Detect a gradient blowup and corroborate it under grid refinement.

    The fine run goes to the coarse detection time with the gradient cap
    removed; a genuine shock yields a recorded max gradient at least
    ``min_ratio`` times the coarse one, while an under-resolved smooth
    profile does not.
    """
    coarse, _ = run(make_state(grid), variant, kernel, flux, config)
    if coarse.outcome != "gradient-blowup":
        return BlowupVerdict(False, False, None, coarse.max_grad_rho, None, None, coarse)
    fine_cfg = replace(config, t_end=coarse.t_detect, D_max=math.inf)
    fine, _ = run(make_state(grid.refined(factor)), variant, kernel, flux, fine_cfg)
    ratio = fine.max_grad_rho / coarse.max_grad_rho
    return BlowupVerdict(True, bool(ratio >= min_ratio), coarse.t_detect,
                         coarse.max_grad_rho, fine.max_grad_rho, float(ratio), coarse, fine)
