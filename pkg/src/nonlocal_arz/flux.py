"""Velocity laws U(rho) and the fluxes f(rho) = rho U(rho) they induce.

Two families are provided:

* ``pipes``: U(rho) = (1 - rho)^J, J >= 1, with closed-form derivatives.
  J = 1 is the Greenshields/LWR law; for J > 1 the flux is concave-convex
  with inflection point rho_c = 2 / (J + 1).
* ``custom``: any decreasing U supplied together with U' and U''.

Flux derivatives are always obtained from the velocity law by the product
rule, so f, f' and f'' can never disagree with U.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError

ArrayFn = Callable[[np.ndarray], np.ndarray]

BETA_TOL = 1e-8


@dataclass(frozen=True)
class FluxModel:
    """Velocity law with exact first and second derivatives.

    All evaluators accept scalars or arrays. ``rho_M`` is the density cap
    the maximum principle is asked to preserve; it is 1 for the linear law
    and defaults to 0.99 for J > 1, where U^{-1} is not smooth at rho = 1.
    """

    family: str
    J: float
    rho_M: float
    _U: ArrayFn = field(repr=False)
    _dU: ArrayFn = field(repr=False)
    _d2U: ArrayFn = field(repr=False)
    name: str = ""

    def U(self, rho):
        return self._U(np.asarray(rho, dtype=float))

    def dU(self, rho):
        return self._dU(np.asarray(rho, dtype=float))

    def d2U(self, rho):
        return self._d2U(np.asarray(rho, dtype=float))

    def f(self, rho):
        rho = np.asarray(rho, dtype=float)
        return rho * self.U(rho)

    def df(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.U(rho) + rho * self.dU(rho)

    def d2f(self, rho):
        rho = np.asarray(rho, dtype=float)
        return 2.0 * self.dU(rho) + rho * self.d2U(rho)

    @property
    def rho_c(self) -> float:
        """Inflection point of f; 1 when f is concave on the whole of [0, 1]."""
        if self.family == "pipes":
            return min(1.0, 2.0 / (self.J + 1.0))
        return _find_inflection(self)

    @property
    def U_C1_norm(self) -> float:
        """sup|U| + sup|U'| over [0, rho_M], estimated on a fine sample."""
        r = np.linspace(0.0, self.rho_M, 4001)
        return float(np.max(np.abs(self.U(r))) + np.max(np.abs(self.dU(r))))

    def check_invariants(self, n: int = 1001) -> dict:
        """Sample the structural properties every velocity law must have."""
        r = np.linspace(0.0, 1.0, n)
        inner = r[1:-1]
        out = {
            "U0_is_1": bool(abs(float(self.U(0.0)) - 1.0) <= 1e-12),
            "U1_is_0": bool(abs(float(self.U(1.0))) <= 1e-12),
            "U_decreasing": bool(np.all(self.dU(inner) < 0.0)),
            "flux_consistent": bool(
                np.max(np.abs(self.f(r) - r * self.U(r))) <= 1e-12
            ),
        }
        if self.family == "pipes" and self.J > 1:
            rc = self.rho_c
            lo = r[r < rc - 1e-9]
            hi = r[(r > rc + 1e-9) & (r < 1.0 - 1e-9)]
            out["concave_convex"] = bool(
                np.all(self.d2f(lo) < 0.0) and np.all(self.d2f(hi) > 0.0)
            )
        return out


def make_pipes_flux(J: float = 1.0, rho_M: Optional[float] = None) -> FluxModel:
    """U(rho) = (1 - rho)^J."""
    J = float(J)
    if not np.isfinite(J) or J < 1.0:
        raise InvalidParameterError(f"J must be >= 1, got {J}")
    if rho_M is None:
        rho_M = 1.0 if J == 1.0 else 0.99
    rho_M = float(rho_M)
    if not (0.0 < rho_M <= 1.0):
        raise InvalidParameterError(f"rho_M must lie in (0, 1], got {rho_M}")

    if J == 1.0:
        U = lambda r: 1.0 - r
        dU = lambda r: -np.ones_like(r)
        d2U = lambda r: np.zeros_like(r)
    else:
        U = lambda r: (1.0 - r) ** J
        dU = lambda r: -J * (1.0 - r) ** (J - 1.0)
        if J == 2.0:
            d2U = lambda r: 2.0 * np.ones_like(r)
        else:
            d2U = lambda r: J * (J - 1.0) * (1.0 - r) ** (J - 2.0)
    return FluxModel("pipes", J, rho_M, U, dU, d2U, name=f"pipes-J{J:g}")


def make_custom_flux(
    U: ArrayFn, dU: ArrayFn, d2U: ArrayFn, rho_M: float = 1.0, name: str = "custom"
) -> FluxModel:
    """Wrap a user-supplied velocity law. ``J`` is reported as NaN."""
    if not (0.0 < rho_M <= 1.0):
        raise InvalidParameterError(f"rho_M must lie in (0, 1], got {rho_M}")

    def vec(fn):
        return lambda r: np.asarray(fn(r), dtype=float) + np.zeros_like(r)

    return FluxModel("custom", float("nan"), float(rho_M), vec(U), vec(dU), vec(d2U), name=name)


def _find_inflection(model: FluxModel, n: int = 20001) -> float:
    r = np.linspace(0.0, 1.0, n)[:-1]
    d2 = model.d2f(r)
    pos = np.nonzero(d2 > 0.0)[0]
    if pos.size == 0:
        return 1.0
    k = int(pos[0])
    if k == 0:
        return 0.0
    a, b = r[k - 1], r[k]
    while b - a > 1e-13:
        m = 0.5 * (a + b)
        if model.d2f(m) > 0.0:
            b = m
        else:
            a = m
    return float(0.5 * (a + b))


def blowup_beta(model: FluxModel, n: int = 100001, tol: float = BETA_TOL) -> float:
    """Largest beta with rho U''(rho) / U'(rho) >= -1 on [0, beta].

    This is the range of densities on which the local ARZ blowup argument
    applies. For the Pipes family the answer is exactly 1/J.
    """
    if model.family == "pipes":
        return 1.0 / model.J

    def ok(r):
        return r * model.d2U(r) / model.dU(r) >= -1.0

    r = np.linspace(0.0, 1.0, n)[1:-1]
    bad = np.nonzero(~ok(r))[0]
    if bad.size == 0:
        return 1.0
    k = int(bad[0])
    a = r[k - 1] if k > 0 else 0.0
    b = r[k]
    while b - a > tol:
        m = 0.5 * (a + b)
        if ok(m):
            a = m
        else:
            b = m
    return float(a)
