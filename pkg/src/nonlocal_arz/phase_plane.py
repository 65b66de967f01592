"""Characteristic paths and the (rho, d = rho_x) dynamics along them.

Along X'(t) = u + rho U'(rho) exp(-rho_tilde) the nonlocal ARZ model with the
uniform kernel reduces to

    rho' = -s rho f - rho^2 F
    d'   = -s (f'' d^2 + (2 rho f' + f) d + rho^2 f) - 3 rho d F - rho^3 G

with s = exp(-rho_tilde), F = psi_x / rho and G = F_x / rho. Eliminating
time for F = G = 0 gives the autonomous trajectory equation d'(rho) =
F(rho, d) shared with the sigma threshold.

:class:`Tracer` follows seeds through a solver run, either live via the
``run`` callback or afterwards from stored snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidParameterError
from .flux import FluxModel
from .state import RHO_FLOOR, ratio_fields
from .thresholds import sigma_rhs

VACUUM_RHO = 0.05
TRAJ_CAP = 1e4


def mediant_lower_bound(A0: float, A1: float, B0: float, B1: float) -> float:
    """min(A0/B0, A1/B1), which never exceeds the mediant (A0+A1)/(B0+B1)."""
    if not (B0 > 0.0 and B1 > 0.0):
        raise InvalidParameterError("denominators must be positive")
    return min(A0 / B0, A1 / B1)


def mediant(A0: float, A1: float, B0: float, B1: float) -> float:
    if not (B0 > 0.0 and B1 > 0.0):
        raise InvalidParameterError("denominators must be positive")
    return (A0 + A1) / (B0 + B1)


def coupled_rhs(rho, d, F, G, slowdown, model: FluxModel):
    f = model.f(rho)
    rho_dot = -slowdown * rho * f - rho**2 * F
    d_dot = (-slowdown * (model.d2f(rho) * d**2 + (2.0 * rho * model.df(rho) + f) * d + rho**2 * f)
             - 3.0 * rho * d * F - rho**3 * G)
    return rho_dot, d_dot


def decay_envelope(rho0: float, t, model: FluxModel, mass: float, w0: float):
    """Integrated form of rho' <= -exp(-m w0) U(rho0) rho^2."""
    k = math.exp(-mass * w0) * float(model.U(rho0))
    return rho0 / (1.0 + k * rho0 * np.asarray(t, dtype=float))


@dataclass
class CharacteristicTrace:
    x0: float
    t: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)
    rho_tilde: np.ndarray = field(repr=False)
    slowdown: np.ndarray = field(repr=False)
    rho_ode: np.ndarray = field(repr=False)
    d_ode: np.ndarray = field(repr=False)
    reason: str = "completed"

    @property
    def discrepancy(self) -> dict:
        """Max gap between the ODE-propagated and field-sampled (rho, d)."""
        return {
            "rho": float(np.max(np.abs(self.rho - self.rho_ode))),
            "d": float(np.max(np.abs(self.d - self.d_ode))),
        }

    def monotone_decay(self, tol: float = 1e-3) -> bool:
        return bool(np.all(np.diff(self.rho) <= tol))


class _Frame:
    __slots__ = ("t", "x", "rho", "u", "s", "rt", "lam", "d", "F", "G", "dx")

    def __init__(self, obj, model: FluxModel, second_order: bool):
        x = obj.grid.x if hasattr(obj, "grid") else obj.x
        self.t = float(obj.t)
        self.x = x
        self.dx = float(x[1] - x[0])
        self.rho = obj.rho
        self.u = obj.u
        self.s = obj.slowdown
        self.rt = obj.rho_tilde
        r = np.clip(self.rho, 0.0, 1.0)
        self.lam = self.u + self.rho * model.dU(r) * self.s
        self.d = np.gradient(self.rho, self.dx, edge_order=2)
        if second_order:
            self.F, self.G, _ = ratio_fields(obj.psi, self.rho, self.dx, RHO_FLOOR)
        else:
            self.F = self.G = None

    def at(self, arr, X):
        return float(np.interp(X, self.x, arr))


class Tracer:
    """Follow characteristic seeds through consecutive time levels.

    Call the instance with each accepted state (it is directly usable as
    the ``callback`` of :func:`nonlocal_arz.solver.run`), then
    :meth:`finish`. X is advanced by RK4 with the path speed linear in space
    and time between levels; the coupled ODE is advanced alongside using
    the sampled F, G and slowdown.
    """

    def __init__(self, seeds: Sequence[float], model: FluxModel, second_order: bool = True,
                 vacuum_rho: float = VACUUM_RHO):
        self.model = model
        self.second_order = second_order
        self.vacuum_rho = vacuum_rho
        self.seeds = [float(s) for s in seeds]
        self._prev: Optional[_Frame] = None
        self._rows = [[] for _ in self.seeds]
        self._X = np.array(self.seeds, dtype=float)
        self._ode = [None] * len(self.seeds)
        self._FG = [(0.0, 0.0)] * len(self.seeds)
        self._alive = [True] * len(self.seeds)
        self._reason = ["completed"] * len(self.seeds)

    def _sample(self, fr: _Frame, k: int, X: float):
        rho = fr.at(fr.rho, X)
        if fr.F is not None:
            if rho >= self.vacuum_rho:
                self._FG[k] = (fr.at(fr.F, X), fr.at(fr.G, X))
            F, G = self._FG[k]
        else:
            F = G = 0.0
        return rho, fr.at(fr.d, X), F, G, fr.at(fr.rt, X), fr.at(fr.s, X)

    def _record(self, fr: _Frame, k: int):
        X = self._X[k]
        rho, d, F, G, rt, s = self._sample(fr, k, X)
        if self._ode[k] is None:
            self._ode[k] = (rho, d)
        self._rows[k].append((fr.t, X, rho, d, F, G, rt, s, *self._ode[k]))

    def _inside(self, fr: _Frame, X: float) -> bool:
        return fr.x[0] + fr.dx <= X <= fr.x[-1] - fr.dx

    def __call__(self, state) -> None:
        fr = _Frame(state, self.model, self.second_order)
        prev, self._prev = self._prev, fr
        if prev is None:
            for k in range(len(self.seeds)):
                if not self._inside(fr, self._X[k]):
                    self._alive[k] = False
                    self._reason[k] = "seed-outside-domain"
                    continue
                self._record(fr, k)
            return
        dt = fr.t - prev.t
        if dt <= 0.0:
            return

        def lam(theta, X):
            return (1.0 - theta) * prev.at(prev.lam, X) + theta * fr.at(fr.lam, X)

        for k in range(len(self.seeds)):
            if not self._alive[k]:
                continue
            X = self._X[k]
            k1 = lam(0.0, X)
            k2 = lam(0.5, X + 0.5 * dt * k1)
            k3 = lam(0.5, X + 0.5 * dt * k2)
            k4 = lam(1.0, X + dt * k3)
            Xn = X + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            if not self._inside(fr, Xn):
                self._alive[k] = False
                self._reason[k] = "exited-domain"
                continue
            last = self._rows[k][-1]
            F0, G0, s0 = last[4], last[5], last[7]
            self._X[k] = Xn
            _, _, F1, G1, _, s1 = self._sample(fr, k, Xn)
            self._ode[k] = self._advance_ode(self._ode[k], dt, (F0, G0, s0), (F1, G1, s1))
            self._record(fr, k)

    def _advance_ode(self, y, dt, c0, c1):
        cm = tuple(0.5 * (a + b) for a, b in zip(c0, c1))

        def rhs(r, d, c):
            return coupled_rhs(r, d, c[0], c[1], c[2], self.model)

        # numpy scalars so a diverging supercritical ODE yields inf, not OverflowError
        r, d = np.float64(y[0]), np.float64(y[1])
        with np.errstate(over="ignore", invalid="ignore"):
            a1 = rhs(r, d, c0)
            a2 = rhs(r + 0.5 * dt * a1[0], d + 0.5 * dt * a1[1], cm)
            a3 = rhs(r + 0.5 * dt * a2[0], d + 0.5 * dt * a2[1], cm)
            a4 = rhs(r + dt * a3[0], d + dt * a3[1], c1)
            return (float(r + dt * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0]) / 6.0),
                    float(d + dt * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1]) / 6.0))

    def finish(self, run_outcome: Optional[str] = None) -> List[CharacteristicTrace]:
        out = []
        for k, x0 in enumerate(self.seeds):
            reason = self._reason[k]
            if self._alive[k] and run_outcome and run_outcome != "completed":
                reason = run_outcome
            rows = np.array(self._rows[k], dtype=float).reshape(-1, 10)
            out.append(CharacteristicTrace(x0, *rows.T, reason=reason))
        return out


def trace_characteristics(seeds: Sequence[float], snapshots: Iterable, model: FluxModel,
                          second_order: bool = True, run_outcome: Optional[str] = None):
    """Trace seeds through stored snapshots (one per solver step for accuracy)."""
    tr = Tracer(seeds, model, second_order)
    for snap in snapshots:
        tr(snap)
    return tr.finish(run_outcome)


@dataclass
class Trajectory:
    rho: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    blowup: bool
    rho_blowup: Optional[float]
    reason: str


def integrate_first_order_trajectory(rho0: float, d0: float, model: FluxModel,
                                     delta0: float = 1e-6, cap: float = TRAJ_CAP,
                                     rtol: float = 1e-10, atol: float = 1e-12) -> Trajectory:
    """Integrate d'(rho) = F(rho, d) from (rho0, d0) down to rho = delta0."""
    if not 0.0 < rho0 <= model.rho_c + 1e-12:
        raise InvalidParameterError("need 0 < rho0 <= rho_c")
    hi = min(rho0, model.rho_c - 1e-9) if float(model.f(model.rho_c)) <= 0.0 else rho0

    def up(r, y):
        return y[0] - cap

    up.terminal = True
    sol = solve_ivp(lambda r, y: sigma_rhs(model, r, y), (hi, delta0), [d0], method="RK45",
                    rtol=rtol, atol=atol, events=up, dense_output=True)
    hit = sol.t_events[0].size > 0
    reason = "upward-blowup" if hit else ("reached-delta0" if sol.status == 0 else sol.message)
    return Trajectory(sol.t[::-1].copy(), sol.y[0][::-1].copy(), hit,
                      float(sol.t_events[0][0]) if hit else None, reason)


@dataclass
class CoupledSolution:
    t: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    blowup: bool
    t_blowup: Optional[float]


def integrate_coupled_ode(rho0: float, d0: float, model: FluxModel, t_end: float,
                          F: float = 0.0, G: float = 0.0, slowdown: float = 1.0,
                          cap: float = TRAJ_CAP) -> CoupledSolution:
    """Forward-time integration of the coupled system with frozen F, G, slowdown."""

    def rhs(t, y):
        return list(coupled_rhs(y[0], y[1], F, G, slowdown, model))

    def up(t, y):
        return y[1] - cap

    up.terminal = True
    sol = solve_ivp(rhs, (0.0, t_end), [rho0, d0], method="RK45", rtol=1e-10, atol=1e-12,
                    events=up)
    hit = sol.t_events[0].size > 0
    return CoupledSolution(sol.t, sol.y[0], sol.y[1], hit,
                           float(sol.t_events[0][0]) if hit else None)


@dataclass
class ComparisonReport:
    passed: bool
    max_margin: float
    t_at_max: float
    rho_at_max: float
    n_samples: int
    tol: float

    def to_dict(self):
        return dict(self.__dict__)


def verify_comparison(trace: CharacteristicTrace, curve, tol: float = 1e-2) -> ComparisonReport:
    """Check d(t) <= eta(rho(t)) + tol at every recorded time."""
    eta = np.asarray(curve(np.clip(trace.rho, 0.0, curve.rho_c)), dtype=float)
    margin = trace.d - eta
    margin = np.where(np.isnan(margin), np.inf, margin)
    i = int(np.argmax(margin))
    mx = float(margin[i])
    return ComparisonReport(bool(mx <= tol), mx, float(trace.t[i]), float(trace.rho[i]),
                            int(trace.t.size), tol)
