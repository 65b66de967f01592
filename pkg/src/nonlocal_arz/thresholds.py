"""Critical-threshold curves in the (rho, rho_x) phase plane.

``sigma`` is the threshold of the first-order look-ahead model: the unique
trajectory of

    sigma'(rho) = F(rho, sigma)
                = [f'' sigma^2 + (2 rho f' + f) sigma + rho^2 f] / (rho f)

leaving the origin with the non-zero slope -2 f'(0) / f''(0).

``eta`` is the threshold of the second-order model. It solves

    eta'(rho) = min(F(rho, eta) - C_eta rho^2 / f(rho), 3 eta / rho)

from the same start, where C_eta = sup|G0| * exp(m w(0)). Unlike sigma it
may plunge to -infinity at some rho_star <= rho_c; beyond rho_star no data
is subcritical.

Both problems are singular at rho = 0, so integration starts at a small
delta0 from the first-order Taylor value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import ODEFailure, SingularPointError, UndefinedConstantError, UnsupportedModelError
from .flux import FluxModel

DELTA0 = 1e-6
CAP = 1e6
N_SAMPLES = 2048
SELF_CHECK_TOL = 1e-7

BRANCH_F = "F"
BRANCH_3Y = "3y-over-rho"


def sigma_rhs(model: FluxModel, rho, s):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise SingularPointError("threshold ODE is singular at rho <= 0; start from the Taylor value")
    f = model.f(rho)
    num = model.d2f(rho) * s**2 + (2.0 * rho * model.df(rho) + f) * s + rho**2 * f
    return num / (rho * f)


def eta_branches(model: FluxModel, rho, y, C_eta: float):
    """The two candidates inside the min of the eta equation."""
    first = sigma_rhs(model, rho, y) - C_eta * np.asarray(rho) ** 2 / model.f(rho)
    second = 3.0 * np.asarray(y) / np.asarray(rho)
    return first, second


def eta_rhs(model: FluxModel, rho, y, C_eta: float):
    a, b = eta_branches(model, rho, y, C_eta)
    return np.minimum(a, b)


def slope_at_zero(model: FluxModel) -> float:
    return float(-2.0 * model.df(0.0) / model.d2f(0.0))


def sigma_closed_form_values(model: FluxModel, rho):
    if model.family != "pipes":
        raise UnsupportedModelError("closed-form sigma needs the Pipes family")
    rho = np.asarray(rho, dtype=float)
    return rho * (1.0 - rho) / model.J


@dataclass
class ThresholdCurve:
    kind: str
    rho: np.ndarray = field(repr=False)
    value: np.ndarray = field(repr=False)
    branch: np.ndarray = field(repr=False)
    rho_c: float
    slope_at_zero: float
    C_eta: float = 0.0
    rho_star: Optional[float] = None
    J: float = float("nan")
    start_sensitivity: Optional[float] = None

    def __post_init__(self):
        self._interp = PchipInterpolator(self.rho, self.value, extrapolate=False)

    @property
    def rho_end(self) -> float:
        return float(self.rho[-1])

    def __call__(self, rho):
        """Threshold value; -inf on [rho_star, rho_c], NaN outside [0, rho_c]."""
        r = np.asarray(rho, dtype=float)
        out = np.asarray(self._interp(np.clip(r, 0.0, self.rho_end)), dtype=float)
        if self.rho_star is not None:
            out = np.where(r >= self.rho_star, -np.inf, out)
        else:
            out = np.where(r > self.rho_end + 1e-12, np.nan, out)
        out = np.where(r < 0.0, np.nan, out)
        return out if out.ndim else float(out)

    @property
    def self_check_passed(self) -> Optional[bool]:
        if self.start_sensitivity is None:
            return None
        return self.start_sensitivity < SELF_CHECK_TOL

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "J": self.J,
            "C_eta": self.C_eta,
            "rho_c": self.rho_c,
            "rho_star": self.rho_star,
            "slope_at_zero": self.slope_at_zero,
        }


def sigma_closed_form(model: FluxModel, n_samples: int = N_SAMPLES) -> ThresholdCurve:
    """Tabulate sigma = rho (1 - rho) / J on [0, rho_c]."""
    rc = model.rho_c
    r = np.linspace(0.0, rc, n_samples)
    return ThresholdCurve(
        "sigma", r, sigma_closed_form_values(model, r), np.full(r.size, BRANCH_F),
        rc, slope_at_zero(model), 0.0, None, model.J,
    )


def _scalar_law(model: FluxModel):
    """(f, f', f'') at a float rho; plain floats keep the ODE loop cheap."""
    if model.family == "pipes":
        J = model.J

        def law(r):
            q = 1.0 - r
            U = q**J
            dU = -J * q ** (J - 1.0) if J != 1.0 else -1.0
            d2U = J * (J - 1.0) * q ** (J - 2.0) if J not in (1.0, 2.0) else (0.0 if J == 1.0 else 2.0)
            return r * U, U + r * dU, 2.0 * dU + r * d2U
    else:
        def law(r):
            U, dU, d2U = float(model.U(r)), float(model.dU(r)), float(model.d2U(r))
            return r * U, U + r * dU, 2.0 * dU + r * d2U
    return law


def _fast_rhs(kind, model, C_eta):
    law = _scalar_law(model)

    def rhs(r, y):
        s = y[0]
        f, df, d2f = law(r)
        F = (d2f * s * s + (2.0 * r * df + f) * s + r * r * f) / (r * f)
        if kind == "eta":
            F = min(F - C_eta * r * r / f, 3.0 * s / r)
        return [F]

    return rhs


def _integrate(kind, model, C_eta, delta0, cap, rtol, atol):
    rc = model.rho_c
    end = rc if float(model.f(rc)) > 0.0 else rc - delta0
    slope = slope_at_zero(model)
    rhs = _fast_rhs(kind, model, C_eta)

    def plunge(r, y):
        return y[0] + cap

    plunge.terminal = True
    plunge.direction = -1

    sol = solve_ivp(rhs, (delta0, end), [slope * delta0], method="RK45", rtol=rtol,
                    atol=atol, dense_output=True, events=plunge)
    if sol.status == -1:
        raise ODEFailure(f"threshold ODE failed: {sol.message}", location=float(sol.t[-1]))
    rho_star = float(sol.t_events[0][0]) if sol.t_events[0].size else None
    return sol, end, rho_star, slope


def solve_threshold_ode(
    kind: str,
    model: FluxModel,
    C_eta: float = 0.0,
    delta0: float = DELTA0,
    cap: float = CAP,
    rtol: float = 1e-10,
    atol: float = 1e-13,
    n_samples: int = N_SAMPLES,
    self_check: bool = True,
) -> ThresholdCurve:
    """Integrate the sigma or eta equation from the origin towards rho_c.

    Integration stops early, recording ``rho_star``, if the value drops
    below -cap. With ``self_check`` the solve is repeated from delta0/2 and
    the change at rho_c/2 is stored as ``start_sensitivity``.
    """
    if kind not in ("sigma", "eta"):
        raise ValueError("kind must be 'sigma' or 'eta'")
    if kind == "sigma":
        C_eta = 0.0
    if C_eta < 0.0:
        raise ValueError("C_eta must be non-negative")
    if not float(model.d2f(0.0)) < 0.0:
        raise UnsupportedModelError("need a flux with f''(0) < 0")

    sol, end, rho_star, slope = _integrate(kind, model, C_eta, delta0, cap, rtol, atol)
    last = rho_star if rho_star is not None else model.rho_c
    r = np.linspace(0.0, last, n_samples)
    vals = np.empty_like(r)
    near = r < delta0
    vals[near] = slope * r[near]
    far = ~near
    r_eval = np.minimum(r[far], sol.t[-1])
    vals[far] = sol.sol(r_eval)[0]
    if rho_star is None and end < model.rho_c:
        # endpoint where f vanishes: extend by the last slope
        tip = r > end
        vals[tip] = sol.y[0, -1] + (r[tip] - end) * _last_slope(kind, model, C_eta, end, sol.y[0, -1])
    if rho_star is not None:
        vals[-1] = -cap

    branch = np.full(r.size, BRANCH_F, dtype=object)
    if kind == "eta":
        inner = (r > 0.0) & (r <= min(end, last))
        a, b = eta_branches(model, r[inner], vals[inner], C_eta)
        branch[inner] = np.where(b < a, BRANCH_3Y, BRANCH_F)

    curve = ThresholdCurve(kind, r, vals, branch, model.rho_c, slope, float(C_eta),
                           rho_star, model.J)
    if self_check:
        half, _, _, _ = _integrate(kind, model, C_eta, 0.5 * delta0, cap, rtol, atol)
        probe = 0.5 * model.rho_c
        if probe <= min(sol.t[-1], half.t[-1]):
            curve.start_sensitivity = float(abs(half.sol(probe)[0] - sol.sol(probe)[0]))
            if not curve.self_check_passed:
                warnings.warn(f"threshold start sensitivity {curve.start_sensitivity:.2e} "
                              f"exceeds {SELF_CHECK_TOL:.0e}")
    return curve


def _last_slope(kind, model, C_eta, r, y):
    if kind == "sigma":
        return float(sigma_rhs(model, r, y))
    return float(eta_rhs(model, r, y, C_eta))


def eta_constant_from_data(report, kernel) -> float:
    """C_eta = sup|G0| * exp(m w(0))."""
    if not report.satisfies_A5:
        raise UndefinedConstantError("C_eta needs bounded F0, G0 (assumption A5 failed)")
    return float(report.sup_G0 * math.exp(report.mass * kernel.w0))


@dataclass
class Classification:
    subcritical: bool
    supercritical_mask: np.ndarray = field(repr=False)
    reason: np.ndarray = field(repr=False)
    margin: float
    n_supercritical: int

    def locations(self, grid, limit=20):
        return [float(v) for v in grid.x[self.supercritical_mask][:limit]]


def classify_initial_data(state, curve: ThresholdCurve, rho_c: Optional[float] = None) -> Classification:
    """Per-cell test of rho0' <= eta(rho0) and rho0 <= rho_c."""
    rc = curve.rho_c if rho_c is None else rho_c
    rho = state.rho
    d = np.gradient(rho, state.grid.dx, edge_order=2)
    eta = np.asarray(curve(np.clip(rho, 0.0, rc)), dtype=float)
    over = rho > rc + 1e-12
    beyond = np.zeros_like(over) if curve.rho_star is None else (rho >= curve.rho_star)
    steep = ~over & ~beyond & (d > eta)
    mask = over | beyond | steep
    reason = np.full(rho.size, "", dtype=object)
    reason[steep] = "slope-above-threshold"
    reason[beyond] = "beyond-rho-star"
    reason[over] = "above-rho-c"
    ok = ~mask
    margin = float(np.min(eta[ok] - d[ok])) if np.any(ok) else -math.inf
    return Classification(not bool(np.any(mask)), mask, reason, margin, int(np.sum(mask)))
